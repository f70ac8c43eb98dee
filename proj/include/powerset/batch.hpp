#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "powerset/core.hpp"
#include "powerset/region.hpp"
#include "powerset/tree.hpp"

namespace powerset {

struct ImageSample {
  EmbeddingMatrix patches;  // N x D
  Vector global;            // D
  PatchGrid grid;
  RegionMaskSet masks;
};

struct TextSample {
  EmbeddingMatrix tokens;  // L x D
  Vector global;           // D
  ParseTree tree;
  std::vector<TokenRange> token_map;  // one range per leaf
};

struct SamplePair {
  ImageSample image;
  TextSample text;
};

/// C image-text pairs. The pair at index i is the positive for row i.
struct MiniBatch {
  std::vector<SamplePair> items;

  std::size_t size() const { return items.size(); }
  std::vector<ParseTree> trees() const;

  /// Checks C >= 2, shared dimension, finiteness and mask/token-map shapes.
  void validate() const;
};

/// S0 scores. Cell (i, j) is a dense M_i x leaves(j) block holding
/// <phi(I_i | R_m), psi(T_j | P_m')>; the leaf dimension is ragged across j.
class SimilarityTensor {
 public:
  SimilarityTensor() = default;
  SimilarityTensor(std::vector<std::size_t> masks_per_image, std::vector<std::size_t> leaves_per_text);

  std::size_t batch_size() const { return masks_.size(); }
  std::size_t masks(std::size_t i) const { return masks_.at(i); }
  std::size_t leaves(std::size_t j) const { return leaves_.at(j); }

  Matrix& cell(std::size_t i, std::size_t j) { return cells_.at(i * masks_.size() + j); }
  const Matrix& cell(std::size_t i, std::size_t j) const { return cells_.at(i * masks_.size() + j); }

  double operator()(std::size_t i, std::size_t j, std::size_t m, std::size_t leaf) const {
    return cell(i, j)(m, leaf);
  }

  /// Number of stored scores; the ragged leaf dimension is not padded.
  std::size_t element_count() const;
  std::size_t bytes() const { return element_count() * sizeof(double); }

  /// A zero tensor with the same extents.
  SimilarityTensor zeros_like() const;

  bool operator==(const SimilarityTensor&) const = default;

 private:
  std::vector<std::size_t> masks_;
  std::vector<std::size_t> leaves_;
  std::vector<Matrix> cells_;
};

/// phi(I_i | R_m) for every mask of one image, one row per mask.
Matrix region_embeddings(const ImageSample& image);

/// psi(T_j | P_m') for every leaf of one text, one row per leaf.
Matrix leaf_embeddings(const TextSample& text);

/// Q_{m,B} block for cell (i, j) over the node list selected by `options`.
Matrix per_mask_node_scores(const SimilarityTensor& s0, std::size_t i, std::size_t j,
                            const ParseTree& tree, const NodeSetOptions& options = {});

/// Full C x C grid of S0 cells, including the off-diagonal pairs i != j.
SimilarityTensor compute_s0(const MiniBatch& batch);

}  // namespace powerset
