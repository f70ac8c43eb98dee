#include "powerset/batch_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace powerset {

using nlohmann::json;

namespace {

Matrix matrix_field(const json& record, const char* key) {
  const auto& rows = record.at(key);
  if (!rows.is_array() || rows.empty()) throw std::invalid_argument(std::string("\"") + key + "\" must be a non-empty array of rows");
  return Matrix::from_rows(rows.get<std::vector<Vector>>());
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

}  // namespace

SamplePair parse_pair_record(std::string_view json_line) {
  const json record = json::parse(json_line);
  SamplePair pair;
  auto& img = pair.image;
  auto& txt = pair.text;
  img.patches = matrix_field(record, "patches");
  txt.tokens = matrix_field(record, "tokens");
  img.global = record.at("image_global").get<Vector>();
  txt.global = record.at("text_global").get<Vector>();
  if (record.contains("grid")) {
    const auto g = record.at("grid").get<std::vector<std::size_t>>();
    if (g.size() != 2) throw std::invalid_argument("\"grid\" must be [height, width]");
    img.grid = {g[0], g[1]};
  } else {
    img.grid = {1, img.patches.rows()};
  }
  if (img.grid.patches() != img.patches.rows()) {
    throw ShapeError("grid " + std::to_string(img.grid.height) + "x" + std::to_string(img.grid.width) +
                     " does not match " + std::to_string(img.patches.rows()) + " patches");
  }
  img.masks = masks_from_rows(record.at("masks").get<std::vector<std::vector<int>>>(), img.grid);
  txt.tree = parse_bracketed(record.at("tree").get<std::string>());
  if (record.contains("token_map")) {
    for (const auto& r : record.at("token_map")) {
      const auto v = r.get<std::vector<std::size_t>>();
      if (v.size() != 2) throw std::invalid_argument("token_map entries must be [begin, end]");
      txt.token_map.push_back({v[0], v[1]});
    }
  } else {
    txt.token_map = identity_token_map(txt.tree);
  }
  // Validates ranges against the token count.
  node_token_masks(txt.tree, txt.tokens.rows(), txt.token_map);
  return pair;
}

std::string pair_record(const SamplePair& pair) {
  json record;
  record["patches"] = matrix_json(pair.image.patches);
  record["tokens"] = matrix_json(pair.text.tokens);
  record["image_global"] = pair.image.global;
  record["text_global"] = pair.text.global;
  record["grid"] = {pair.image.grid.height, pair.image.grid.width};
  json masks = json::array();
  for (const auto& m : pair.image.masks.masks()) masks.push_back(std::vector<int>(m.begin(), m.end()));
  record["masks"] = std::move(masks);
  record["tree"] = pair.text.tree.render();
  json map = json::array();
  for (const auto& r : pair.text.token_map) map.push_back({r.begin, r.end});
  record["token_map"] = std::move(map);
  return record.dump();
}

MiniBatch read_batch(std::istream& in) {
  MiniBatch batch;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      batch.items.push_back(parse_pair_record(line));
    } catch (const std::exception& e) {
      throw std::runtime_error("batch line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  batch.validate();
  return batch;
}

MiniBatch read_batch(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open batch file " + path.string());
  return read_batch(in);
}

void write_batch(std::ostream& out, const MiniBatch& batch) {
  for (const auto& pair : batch.items) out << pair_record(pair) << '\n';
}

void resample_masks(MiniBatch& batch, std::size_t count, std::uint64_t seed) {
  for (std::size_t i = 0; i < batch.items.size(); ++i) {
    auto& img = batch.items[i].image;
    img.masks = gen_random_masks(img.grid, count, mix_seed(seed, i));
  }
}

void apply_mask_file(MiniBatch& batch, const std::filesystem::path& path) {
  if (batch.items.empty()) return;
  // All images in a batch share one grid when masks come from a file.
  const PatchGrid grid = batch.items.front().image.grid;
  auto sets = load_masks(path, grid);
  if (sets.size() != batch.items.size()) {
    throw std::runtime_error("mask file has " + std::to_string(sets.size()) + " records for " +
                             std::to_string(batch.items.size()) + " images");
  }
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (batch.items[i].image.grid != grid) throw ShapeError("mask file needs a common patch grid");
    batch.items[i].image.masks = std::move(sets[i]);
  }
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

}  // namespace powerset
