#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "powerset/batch_io.hpp"
#include "powerset/harness.hpp"

namespace py = pybind11;
using namespace powerset;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-d array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

std::vector<Vector> to_rows(const Array& a) {
  const Matrix m = to_matrix(a);
  std::vector<Vector> rows;
  for (std::size_t r = 0; r < m.rows(); ++r) rows.emplace_back(m.row(r).begin(), m.row(r).end());
  return rows;
}

NodeSetOptions node_options(const std::string& policy, bool dedupe) {
  NodeSetOptions o;
  o.policy = parse_node_policy(policy);
  o.dedupe_spans = dedupe;
  return o;
}

MiniBatch batch_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  return read_batch(in);
}

std::string batch_to_jsonl(const MiniBatch& b) {
  std::ostringstream out;
  write_batch(out, b);
  return out.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Exact powerset aggregation, NLA approximations and alignment losses.";

  py::register_exception<CapExceeded>(m, "CapExceeded", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  m.attr("DEFAULT_MASK_CAP") = kDefaultMaskCap;

  py::class_<MiniBatch>(m, "Batch")
      .def_static("from_jsonl", &batch_from_jsonl, py::arg("text"))
      .def_static("read", [](const std::string& path) { return read_batch(std::filesystem::path(path)); },
                  py::arg("path"))
      .def("to_jsonl", &batch_to_jsonl)
      .def("__len__", &MiniBatch::size)
      .def_property_readonly("trees", [](const MiniBatch& b) {
        std::vector<std::string> out;
        for (const auto& item : b.items) out.push_back(item.text.tree.render());
        return out;
      })
      .def("resample_masks", &resample_masks, py::arg("count"), py::arg("seed"))
      .def("apply_mask_file", [](MiniBatch& b, const std::string& path) { apply_mask_file(b, path); },
           py::arg("path"))
      .def("s0_block", [](const MiniBatch& b, std::size_t i, std::size_t j) {
        if (i >= b.size() || j >= b.size()) throw py::index_error("cell out of range");
        return to_array(compute_s0(b).cell(i, j));
      }, py::arg("i"), py::arg("j"), "M_i x L_j scores of image i against the leaves of text j.");

  m.def("generate_batch",
        [](std::size_t batch_size, std::pair<std::size_t, std::size_t> grid, std::size_t tokens, std::size_t dim,
           std::size_t masks, std::uint64_t seed) {
          SyntheticSpec spec;
          spec.batch_size = batch_size;
          spec.grid = {grid.first, grid.second};
          spec.tokens = tokens;
          spec.dim = dim;
          spec.masks = masks;
          spec.seed = seed;
          return gen_synthetic_batch(spec);
        },
        py::arg("batch_size") = 4, py::arg("grid") = std::pair<std::size_t, std::size_t>{7, 7},
        py::arg("tokens") = 6, py::arg("dim") = 16, py::arg("masks") = 10, py::arg("seed") = 0);

  m.def("exact",
        [](const MiniBatch& b, const std::string& policy, bool dedupe, std::size_t cap) {
          const AggregationResult r = aggregate_exact(compute_s0(b), b.trees(), node_options(policy, dedupe), cap);
          py::dict out;
          out["t2r"] = to_array(r.q_t2r);
          out["r2t"] = to_array(r.q_r2t);
          out["bar"] = to_array(r.q_bar);
          return out;
        },
        py::arg("batch"), py::arg("policy") = "all-nodes", py::arg("dedupe") = false,
        py::arg("cap") = kDefaultMaskCap, "Exact Q matrices {t2r, r2t, bar}, each C x C.");

  m.def("nla",
        [](const MiniBatch& b, const std::string& variant, const std::string& act, double tau, double alpha,
           const std::string& policy, bool dedupe) {
          const SimilarityTensor s0 = compute_s0(b);
          const auto trees = b.trees();
          const NodeSetOptions nodes = node_options(policy, dedupe);
          if (variant == "sbar") {
            return to_array(s_bar(s0, trees, nodes, NlaConfig::t1(Activation::Softplus, tau),
                                  NlaConfig::t2(Activation::Tanh, tau, alpha)));
          }
          if (variant != "t1" && variant != "t2") throw std::invalid_argument("variant must be t1, t2 or sbar");
          NlaConfig cfg = variant == "t1" ? NlaConfig::t1(Activation::Softplus, tau)
                                          : NlaConfig::t2(Activation::Tanh, tau, alpha);
          if (!act.empty()) cfg.act = parse_activation(act);
          return to_array(run_nla(s0, trees, nodes, cfg).s3);
        },
        py::arg("batch"), py::arg("variant") = "sbar", py::arg("act") = "", py::arg("tau") = 0.001,
        py::arg("alpha") = 0.75, py::arg("policy") = "all-nodes", py::arg("dedupe") = false,
        "C x C NLA similarity. sbar uses softplus T1 plus tanh T2.");

  m.def("exact_cell",
        [](const Array& q, std::size_t cap) {
          const ExactCell c = exact_cell(to_matrix(q), cap);
          return std::make_pair(c.t2r, c.r2t);
        },
        py::arg("q"), py::arg("cap") = kDefaultMaskCap, "(t2r, r2t) of an M x K node-score block.");
  m.def("nla_t1_cell",
        [](const Array& q, const std::string& act, double tau) {
          return nla_t1_cell(to_matrix(q), parse_activation(act), tau);
        },
        py::arg("q"), py::arg("act") = "softplus", py::arg("tau") = 0.001);
  m.def("nla_t2_cell",
        [](const Array& q, const std::string& act, double tau, double alpha) {
          return nla_t2_cell(to_matrix(q), parse_activation(act), tau, alpha);
        },
        py::arg("q"), py::arg("act") = "tanh", py::arg("tau") = 0.001, py::arg("alpha") = 0.75);
  m.def("lambda_bound", [](const Array& q, double alpha) { return lambda_bound(to_matrix(q), alpha); },
        py::arg("q"), py::arg("alpha"));
  m.def("log_exponential_sum",
        [](const std::vector<double>& column, double tau) { return log_exponential_sum(column, tau); },
        py::arg("column"), py::arg("tau"), "log of the sum over all subsets A of exp(Q_A / tau).");

  m.def("phi_gamma", [](const Array& x, double gamma) { return phi_gamma(to_matrix(x), gamma); }, py::arg("x"),
        py::arg("gamma") = 0.2);
  m.def("triplet_loss", [](const Array& x, double gamma) { return triplet_loss(to_matrix(x), gamma); },
        py::arg("q_bar"), py::arg("gamma") = 0.2);
  m.def("clip_loss",
        [](const Array& img, const Array& txt, double temperature) {
          return clip_loss(to_rows(img), to_rows(txt), temperature);
        },
        py::arg("image_globals"), py::arg("text_globals"), py::arg("temperature") = 0.07);

  m.def("normalize_tree", [](const std::string& text) { return parse_bracketed(text).render(); },
        py::arg("text"), "Parses a bracketed tree and renders it canonically.");

  m.def("verify",
        [](std::size_t trials, std::uint64_t seed) {
          VerifyOptions opts;
          opts.trials = trials;
          opts.seed = seed;
          py::list out;
          for (const CheckResult& c : verify_bounds(opts).checks) {
            py::dict row;
            row["name"] = c.name;
            row["evaluated"] = c.evaluated;
            row["failures"] = c.failures;
            row["worst"] = c.worst;
            out.append(row);
          }
          return out;
        },
        py::arg("trials") = 200, py::arg("seed") = 0, "One dict per identity or bound check.");
}
