#include "powerset/region.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <string>

#include <json.hpp>

namespace powerset {

RegionMaskSet::RegionMaskSet(std::size_t patch_count, std::vector<BinaryMask> masks)
    : patch_count_(patch_count), masks_(std::move(masks)) {
  for (std::size_t m = 0; m < masks_.size(); ++m) {
    const BinaryMask& mask = masks_[m];
    if (mask.size() != patch_count_) {
      throw MaskFormatError("length " + std::to_string(mask.size()) + " does not match " +
                                std::to_string(patch_count_) + " patches",
                            m);
    }
    if (std::none_of(mask.begin(), mask.end(), [](unsigned char b) { return b != 0; })) {
      throw MaskFormatError("empty mask", m);
    }
  }
}

RegionMaskSet gen_random_masks(const PatchGrid& grid, std::size_t count, std::uint64_t seed) {
  if (grid.height == 0 || grid.width == 0) throw std::invalid_argument("patch grid must be at least 1x1");
  if (count == 0) throw std::invalid_argument("mask count must be at least 1");
  std::mt19937_64 rng(mix_seed(seed, 0x6d61736bULL));
  using Dist = std::uniform_int_distribution<std::size_t>;
  std::vector<BinaryMask> masks;
  masks.reserve(count);
  for (std::size_t m = 0; m < count; ++m) {
    const std::size_t cy = Dist(0, grid.height - 1)(rng);
    const std::size_t cx = Dist(0, grid.width - 1)(rng);
    const std::size_t h = Dist(1, grid.height)(rng);
    const std::size_t w = Dist(1, grid.width)(rng);
    // The center cell lies inside the grid, so the clipped rectangle is never empty.
    const auto y0 = static_cast<std::ptrdiff_t>(cy) - static_cast<std::ptrdiff_t>((h - 1) / 2);
    const auto x0 = static_cast<std::ptrdiff_t>(cx) - static_cast<std::ptrdiff_t>((w - 1) / 2);
    const auto top = static_cast<std::size_t>(std::max<std::ptrdiff_t>(y0, 0));
    const auto left = static_cast<std::size_t>(std::max<std::ptrdiff_t>(x0, 0));
    const auto bottom = std::min(grid.height, static_cast<std::size_t>(y0 + std::ptrdiff_t(h)));
    const auto right = std::min(grid.width, static_cast<std::size_t>(x0 + std::ptrdiff_t(w)));
    BinaryMask mask(grid.patches(), 0);
    for (std::size_t y = top; y < bottom; ++y)
      for (std::size_t x = left; x < right; ++x) mask[y * grid.width + x] = 1;
    masks.push_back(std::move(mask));
  }
  return RegionMaskSet(grid.patches(), std::move(masks));
}

RegionMaskSet masks_from_rows(const std::vector<std::vector<int>>& rows, const PatchGrid& grid) {
  std::vector<BinaryMask> masks;
  masks.reserve(rows.size());
  for (std::size_t m = 0; m < rows.size(); ++m) {
    const auto& row = rows[m];
    if (row.size() != grid.patches()) {
      throw MaskFormatError("length " + std::to_string(row.size()) + " does not match " +
                                std::to_string(grid.patches()) + " patches",
                            m);
    }
    BinaryMask mask(row.size());
    for (std::size_t n = 0; n < row.size(); ++n) {
      if (row[n] != 0 && row[n] != 1) {
        throw MaskFormatError("non-binary value " + std::to_string(row[n]) + " at patch " +
                                  std::to_string(n),
                              m);
      }
      mask[n] = static_cast<unsigned char>(row[n]);
    }
    masks.push_back(std::move(mask));
  }
  return RegionMaskSet(grid.patches(), std::move(masks));
}

RegionMaskSet parse_mask_record(std::string_view json_line, const PatchGrid& grid) {
  const auto record = nlohmann::json::parse(json_line);
  const auto& arr = record.at("masks");
  if (!arr.is_array()) throw std::invalid_argument("\"masks\" must be an array of 0/1 rows");
  std::vector<std::vector<int>> rows;
  for (std::size_t m = 0; m < arr.size(); ++m) {
    const auto& row = arr[m];
    if (!row.is_array()) throw MaskFormatError("not an array", m);
    std::vector<int> values;
    values.reserve(row.size());
    for (const auto& v : row) {
      if (!v.is_number_integer() && !v.is_boolean()) {
        throw MaskFormatError("non-binary value " + v.dump(), m);
      }
      values.push_back(v.is_boolean() ? int(v.get<bool>()) : v.get<int>());
    }
    rows.push_back(std::move(values));
  }
  return masks_from_rows(rows, grid);
}

std::vector<RegionMaskSet> load_masks(const std::filesystem::path& path, const PatchGrid& grid) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mask file " + path.string());
  std::vector<RegionMaskSet> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_mask_record(line, grid));
    } catch (const MaskFormatError& e) {
      throw MaskFormatError(e.detail(), e.mask_index(),
                            path.string() + ":" + std::to_string(lineno) + ": ");
    }
  }
  return out;
}

Vector region_embed(const EmbeddingMatrix& patches, std::span<const unsigned char> mask) {
  return masked_unit_sum(patches, mask);
}

Vector region_set_embed(const EmbeddingMatrix& patches, const RegionMaskSet& masks,
                        SubsetId subset) {
  Vector sum(patches.cols(), 0.0);
  for (std::size_t m = 0; m < masks.size(); ++m) {
    if (!subset.contains(m)) continue;
    const Vector phi = region_embed(patches, masks.mask(m));
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += phi[k];
  }
  return sum;
}

Matrix per_mask_node_scores(const Matrix& s0_block, const ParseTree& tree,
                            std::span<const std::size_t> nodes) {
  if (s0_block.cols() != tree.leaf_count()) {
    throw ShapeError("similarity block has " + std::to_string(s0_block.cols()) +
                     " leaf columns, tree has " + std::to_string(tree.leaf_count()) + " leaves");
  }
  Matrix out(s0_block.rows(), nodes.size());
  for (std::size_t b = 0; b < nodes.size(); ++b) {
    const TreeNode& node = tree.node(nodes[b]);
    for (std::size_t m = 0; m < s0_block.rows(); ++m) {
      double acc = 0.0;
      for (std::size_t leaf = node.leaf_begin; leaf < node.leaf_end; ++leaf) acc += s0_block(m, leaf);
      out(m, b) = acc;
    }
  }
  return out;
}

}  // namespace powerset
