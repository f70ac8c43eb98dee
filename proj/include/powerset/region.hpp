#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "powerset/core.hpp"
#include "powerset/tree.hpp"

namespace powerset {

struct PatchGrid {
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t patches() const { return height * width; }
  bool operator==(const PatchGrid&) const = default;
};

using BinaryMask = std::vector<unsigned char>;

/// M binary masks over the N patches of one image. Every mask has at least
/// one patch set; construction validates this.
class RegionMaskSet {
 public:
  RegionMaskSet() = default;
  RegionMaskSet(std::size_t patch_count, std::vector<BinaryMask> masks);

  std::size_t size() const { return masks_.size(); }
  std::size_t patch_count() const { return patch_count_; }
  const BinaryMask& mask(std::size_t m) const { return masks_.at(m); }
  const std::vector<BinaryMask>& masks() const { return masks_; }

  bool operator==(const RegionMaskSet&) const = default;

 private:
  std::size_t patch_count_ = 0;
  std::vector<BinaryMask> masks_;
};

/// Mask-file parse failure; `mask_index()` names the offending mask.
class MaskFormatError : public std::runtime_error {
 public:
  MaskFormatError(const std::string& detail, std::size_t mask_index, const std::string& context = {})
      : std::runtime_error(context + "mask " + std::to_string(mask_index) + ": " + detail),
        detail_(detail),
        mask_index_(mask_index) {}
  std::size_t mask_index() const { return mask_index_; }
  const std::string& detail() const { return detail_; }

 private:
  std::string detail_;
  std::size_t mask_index_;
};

/// M random axis-aligned rectangles on the grid. Center, height and width
/// are uniform; the rectangle is clipped to the grid. Deterministic in seed.
RegionMaskSet gen_random_masks(const PatchGrid& grid, std::size_t count, std::uint64_t seed);

/// Validates raw 0/1 rows into a mask set (length, binary values, non-empty).
RegionMaskSet masks_from_rows(const std::vector<std::vector<int>>& rows, const PatchGrid& grid);

/// Parses one JSONL record `{"masks": [[0,1,...], ...]}`.
RegionMaskSet parse_mask_record(std::string_view json_line, const PatchGrid& grid);

/// Reads a mask JSONL file, one record per image.
std::vector<RegionMaskSet> load_masks(const std::filesystem::path& path, const PatchGrid& grid);

/// phi(I | R_m): unit-normalized sum of the patch rows under `mask`.
Vector region_embed(const EmbeddingMatrix& patches, std::span<const unsigned char> mask);

/// r_A: sum of phi over the masks in `subset`. Not renormalized; the empty
/// subset yields the zero vector.
Vector region_set_embed(const EmbeddingMatrix& patches, const RegionMaskSet& masks,
                        SubsetId subset);

/// Q_{m,B}: for each mask m (row) and node B in `nodes` (column), the sum of
/// the S0 block entries over the leaves of B. `s0_block` is the M x leaves
/// cell of the similarity tensor for one (image, text) pair.
Matrix per_mask_node_scores(const Matrix& s0_block, const ParseTree& tree,
                            std::span<const std::size_t> nodes);

}  // namespace powerset
