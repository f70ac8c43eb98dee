#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "powerset/batch.hpp"

// Mini-batch JSONL: one image-text pair per line.
//
//   {"patches": [[...], ...],      N x D
//    "tokens": [[...], ...],       L x D
//    "image_global": [...],        D
//    "text_global": [...],         D
//    "masks": [[0,1,...], ...],    M x N, 0/1
//    "tree": "(S (NP a dog) (VP sits))",
//    "grid": [H, W],               optional, H * W = N; default [1, N]
//    "token_map": [[b, e], ...]}   optional, one half-open token range per leaf;
//                                  default leaf k -> token k
//
// See docs/batch_format.md.

namespace powerset {

SamplePair parse_pair_record(std::string_view json_line);
std::string pair_record(const SamplePair& pair);

MiniBatch read_batch(std::istream& in);
MiniBatch read_batch(const std::filesystem::path& path);
void write_batch(std::ostream& out, const MiniBatch& batch);

/// Replaces every image's masks with freshly sampled rectangles.
void resample_masks(MiniBatch& batch, std::size_t count, std::uint64_t seed);

/// Replaces every image's masks with the records of a mask JSONL file
/// (one record per image, in batch order).
void apply_mask_file(MiniBatch& batch, const std::filesystem::path& path);

/// Plain CSV: one matrix row per line, full double precision.
void write_matrix_csv(std::ostream& out, const Matrix& m);
std::string format_double(double v);

}  // namespace powerset
