#include "powerset/batch.hpp"

#include <string>

namespace powerset {

std::vector<ParseTree> MiniBatch::trees() const {
  std::vector<ParseTree> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(item.text.tree);
  return out;
}

void MiniBatch::validate() const {
  if (items.size() < 2) throw std::invalid_argument("mini-batch needs at least 2 pairs, got " + std::to_string(items.size()));
  const std::size_t dim = items.front().image.patches.cols();
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& img = items[i].image;
    const auto& txt = items[i].text;
    const std::string at = "pair " + std::to_string(i) + ": ";
    if (img.patches.cols() != dim || txt.tokens.cols() != dim) {
      throw ShapeError(at + "embedding dimension differs from " + std::to_string(dim));
    }
    if (img.global.size() != dim || txt.global.size() != dim) {
      throw ShapeError(at + "global embedding dimension differs from " + std::to_string(dim));
    }
    check_finite(img.patches, (at + "patches").c_str());
    check_finite(txt.tokens, (at + "tokens").c_str());
    if (img.masks.size() == 0) throw std::invalid_argument(at + "image has no region masks");
    if (img.masks.patch_count() != img.patches.rows()) {
      throw ShapeError(at + "masks cover " + std::to_string(img.masks.patch_count()) +
                       " patches, image has " + std::to_string(img.patches.rows()));
    }
    if (txt.token_map.size() != txt.tree.leaf_count()) {
      throw ShapeError(at + "token map size differs from the leaf count");
    }
  }
}

SimilarityTensor::SimilarityTensor(std::vector<std::size_t> masks_per_image,
                                   std::vector<std::size_t> leaves_per_text)
    : masks_(std::move(masks_per_image)), leaves_(std::move(leaves_per_text)) {
  if (masks_.size() != leaves_.size()) throw ShapeError("image and text counts differ");
  cells_.reserve(masks_.size() * leaves_.size());
  for (std::size_t i = 0; i < masks_.size(); ++i)
    for (std::size_t j = 0; j < leaves_.size(); ++j) cells_.emplace_back(masks_[i], leaves_[j]);
}

std::size_t SimilarityTensor::element_count() const {
  std::size_t total = 0;
  for (const auto& c : cells_) total += c.rows() * c.cols();
  return total;
}

SimilarityTensor SimilarityTensor::zeros_like() const { return SimilarityTensor(masks_, leaves_); }

Matrix region_embeddings(const ImageSample& image) {
  Matrix out(image.masks.size(), image.patches.cols());
  for (std::size_t m = 0; m < image.masks.size(); ++m) {
    const Vector phi = region_embed(image.patches, image.masks.mask(m));
    std::copy(phi.begin(), phi.end(), out.row(m).begin());
  }
  return out;
}

Matrix leaf_embeddings(const TextSample& text) {
  const NodeTokenMasks masks = node_token_masks(text.tree, text.tokens.rows(), text.token_map);
  Matrix out(masks.leaf_masks.size(), text.tokens.cols());
  for (std::size_t k = 0; k < masks.leaf_masks.size(); ++k) {
    const Vector psi = phrase_embed(text.tokens, masks.leaf_masks[k]);
    std::copy(psi.begin(), psi.end(), out.row(k).begin());
  }
  return out;
}

SimilarityTensor compute_s0(const MiniBatch& batch) {
  batch.validate();
  const std::size_t c = batch.size();
  std::vector<Matrix> regions, leaves;
  std::vector<std::size_t> mask_counts, leaf_counts;
  for (const auto& item : batch.items) {
    regions.push_back(region_embeddings(item.image));
    leaves.push_back(leaf_embeddings(item.text));
    mask_counts.push_back(regions.back().rows());
    leaf_counts.push_back(leaves.back().rows());
  }
  SimilarityTensor s0(mask_counts, leaf_counts);
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      Matrix& cell = s0.cell(i, j);
      for (std::size_t m = 0; m < cell.rows(); ++m)
        for (std::size_t k = 0; k < cell.cols(); ++k) cell(m, k) = dot(regions[i].row(m), leaves[j].row(k));
    }
  }
  return s0;
}

Matrix per_mask_node_scores(const SimilarityTensor& s0, std::size_t i, std::size_t j,
                            const ParseTree& tree, const NodeSetOptions& options) {
  const auto nodes = enumerate_nodes(tree, options);
  return per_mask_node_scores(s0.cell(i, j), tree, nodes);
}

}  // namespace powerset
