#include "powerset/nla.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "powerset/special.hpp"

namespace powerset {

namespace {

constexpr std::pair<std::string_view, Activation> kActivationNames[] = {
    {"softplus", Activation::Softplus}, {"relu", Activation::Relu},
    {"gelu", Activation::Gelu},         {"swish", Activation::Swish},
    {"tanh", Activation::Tanh},         {"sigmoid", Activation::Sigmoid},
    {"softsign", Activation::Softsign},
};

void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be positive and finite");
}

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
}

double generic_cell(const Matrix& q, const LayerActivations& layers, double alpha, std::size_t i,
                    std::size_t j) {
  const std::size_t masks = q.rows();
  const std::size_t nodes = q.cols();
  if (nodes == 0) throw std::invalid_argument("node score block has no nodes");
  double layer3_in = 0.0;
  for (std::size_t b = 0; b < nodes; ++b) {
    double layer2_in = 0.0;
    for (std::size_t m = 0; m < masks; ++m) {
      const double s1 = layers.sigma1(q(m, b));
      if (!std::isfinite(s1)) throw NonFiniteError(1, i, j);
      layer2_in += s1;
    }
    const double s2 = layers.sigma2(layer2_in);
    if (!std::isfinite(s2)) throw NonFiniteError(2, i, j);
    layer3_in += s2;
  }
  const double s3 = layers.sigma3(std::pow(static_cast<double>(nodes), alpha - 1.0) * layer3_in);
  if (!std::isfinite(s3)) throw NonFiniteError(3, i, j);
  return s3;
}

// Applies `kernel(node_scores)` to every (i, j) cell.
template <class Kernel>
Matrix map_cells(const SimilarityTensor& s0, std::span<const ParseTree> trees,
                 const NodeSetOptions& options, Kernel&& kernel) {
  const std::size_t c = s0.batch_size();
  if (trees.size() != c) throw ShapeError("need one tree per text");
  Matrix out(c, c);
  for (std::size_t j = 0; j < c; ++j) {
    const auto nodes = enumerate_nodes(trees[j], options);
    for (std::size_t i = 0; i < c; ++i)
      out(i, j) = kernel(per_mask_node_scores(s0.cell(i, j), trees[j], nodes), i, j);
  }
  return out;
}

}  // namespace

Activation parse_activation(std::string_view name) {
  for (const auto& [key, act] : kActivationNames)
    if (key == name) return act;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

std::string to_string(Activation act) {
  for (const auto& [key, value] : kActivationNames)
    if (value == act) return std::string(key);
  return "unknown";
}

NlaVariant parse_variant(std::string_view name) {
  if (name == "t1") return NlaVariant::T1;
  if (name == "t2") return NlaVariant::T2;
  if (name == "generic") return NlaVariant::Generic;
  throw std::invalid_argument("unknown NLA variant '" + std::string(name) + "'");
}

std::string to_string(NlaVariant variant) {
  switch (variant) {
    case NlaVariant::T1: return "t1";
    case NlaVariant::T2: return "t2";
    case NlaVariant::Generic: return "generic";
  }
  return "unknown";
}

bool is_t1_activation(Activation act) {
  return act == Activation::Softplus || act == Activation::Relu || act == Activation::Gelu ||
         act == Activation::Swish;
}

bool is_t2_activation(Activation act) {
  return act == Activation::Tanh || act == Activation::Sigmoid || act == Activation::Softsign;
}

void NlaConfig::validate() const {
  check_tau(tau);
  check_alpha(alpha);
  if (variant == NlaVariant::T1 && !is_t1_activation(act)) {
    throw std::invalid_argument("activation " + to_string(act) + " is not valid for NLA-T1");
  }
  if (variant != NlaVariant::T1 && !is_t2_activation(act)) {
    throw std::invalid_argument("activation " + to_string(act) + " is not valid for NLA-T2");
  }
}

double t1_activation(Activation act, double x) {
  switch (act) {
    case Activation::Softplus: return special::softplus(x);
    case Activation::Relu: return special::relu(x);
    case Activation::Gelu: return special::gelu(x);
    case Activation::Swish: return special::swish(x);
    default: break;
  }
  throw std::invalid_argument("activation " + to_string(act) + " is not a T1 activation");
}

double t1_activation_grad(Activation act, double x) {
  switch (act) {
    case Activation::Softplus: return special::sigmoid(x);
    case Activation::Relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::Gelu: return special::gelu_grad(x);
    case Activation::Swish: return special::swish_grad(x);
    default: break;
  }
  throw std::invalid_argument("activation " + to_string(act) + " is not a T1 activation");
}

double zeta(Activation act, double alpha, double x) {
  switch (act) {
    case Activation::Tanh: return x + alpha * special::log_cosh(x);
    case Activation::Sigmoid: return x + alpha * (special::softplus(x) - std::numbers::ln2);
    case Activation::Softsign: return x + alpha * (std::abs(x) - std::log1p(std::abs(x)));
    default: break;
  }
  throw std::invalid_argument("activation " + to_string(act) + " has no zeta form");
}

double zeta_grad(Activation act, double alpha, double x) {
  switch (act) {
    case Activation::Tanh: return 1.0 + alpha * std::tanh(x);
    case Activation::Sigmoid: return 1.0 + alpha * special::sigmoid(x);
    case Activation::Softsign: return 1.0 + alpha * x / (1.0 + std::abs(x));
    default: break;
  }
  throw std::invalid_argument("activation " + to_string(act) + " has no zeta form");
}

LayerActivations t1_layers(Activation act, double tau) {
  check_tau(tau);
  auto identity = [](double x) { return x; };
  return {[act, tau](double x) { return tau * t1_activation(act, x / tau); }, identity, identity};
}

LayerActivations t2_layers(Activation act, double tau, double alpha) {
  check_tau(tau);
  check_alpha(alpha);
  return {[act, tau, alpha](double x) { return zeta(act, alpha, x / (2.0 * tau)); },
          [](double x) { return std::exp(x); }, [tau](double x) { return tau * std::log(x); }};
}

double nla_t1_cell(const Matrix& q, Activation act, double tau) {
  check_tau(tau);
  if (q.cols() == 0) throw std::invalid_argument("node score block has no nodes");
  double total = 0.0;
  for (std::size_t b = 0; b < q.cols(); ++b) {
    double node = 0.0;
    for (std::size_t m = 0; m < q.rows(); ++m) node += tau * t1_activation(act, q(m, b) / tau);
    total += node;
  }
  return total / static_cast<double>(q.cols());
}

double nla_t2_cell(const Matrix& q, Activation act, double tau, double alpha) {
  check_tau(tau);
  check_alpha(alpha);
  const std::size_t nodes = q.cols();
  if (nodes == 0) throw std::invalid_argument("node score block has no nodes");
  // Layers 2-3 fused: tau * [ LSE_B(u_B) - (1 - alpha) log K ], u_B = sum_m zeta(q / 2tau).
  std::vector<double> u(nodes, 0.0);
  for (std::size_t b = 0; b < nodes; ++b)
    for (std::size_t m = 0; m < q.rows(); ++m) u[b] += zeta(act, alpha, q(m, b) / (2.0 * tau));
  return tau * (special::log_sum_exp(u) - (1.0 - alpha) * std::log(static_cast<double>(nodes)));
}

double nla_generic_cell(const Matrix& q, const LayerActivations& layers, double alpha) {
  check_alpha(alpha);
  return generic_cell(q, layers, alpha, 0, 0);
}

Matrix nla_t1_cell_grad(const Matrix& q, Activation act, double tau) {
  check_tau(tau);
  Matrix g(q.rows(), q.cols());
  const double inv_k = 1.0 / static_cast<double>(q.cols());
  for (std::size_t m = 0; m < q.rows(); ++m)
    for (std::size_t b = 0; b < q.cols(); ++b) g(m, b) = inv_k * t1_activation_grad(act, q(m, b) / tau);
  return g;
}

Matrix nla_t2_cell_grad(const Matrix& q, Activation act, double tau, double alpha) {
  check_tau(tau);
  check_alpha(alpha);
  const std::size_t nodes = q.cols();
  std::vector<double> u(nodes, 0.0);
  for (std::size_t b = 0; b < nodes; ++b)
    for (std::size_t m = 0; m < q.rows(); ++m) u[b] += zeta(act, alpha, q(m, b) / (2.0 * tau));
  // dS3/du_B = tau * softmax(u)_B and du_B/dq = zeta'(q / 2tau) / 2tau.
  const double lse = special::log_sum_exp(u);
  Matrix g(q.rows(), nodes);
  for (std::size_t b = 0; b < nodes; ++b) {
    const double weight = std::exp(u[b] - lse);
    for (std::size_t m = 0; m < q.rows(); ++m)
      g(m, b) = 0.5 * weight * zeta_grad(act, alpha, q(m, b) / (2.0 * tau));
  }
  return g;
}

NlaOutput nla_t1(const SimilarityTensor& s0, std::span<const ParseTree> trees,
                 const NodeSetOptions& options, Activation act, double tau) {
  NlaConfig::t1(act, tau).validate();
  return {map_cells(s0, trees, options,
                    [&](const Matrix& q, std::size_t, std::size_t) { return nla_t1_cell(q, act, tau); })};
}

NlaOutput nla_t2(const SimilarityTensor& s0, std::span<const ParseTree> trees,
                 const NodeSetOptions& options, Activation act, double tau, double alpha) {
  NlaConfig::t2(act, tau, alpha).validate();
  return {map_cells(s0, trees, options, [&](const Matrix& q, std::size_t, std::size_t) {
    return nla_t2_cell(q, act, tau, alpha);
  })};
}

NlaOutput nla_generic(const SimilarityTensor& s0, std::span<const ParseTree> trees,
                      const NodeSetOptions& options, const LayerActivations& layers, double alpha) {
  check_alpha(alpha);
  return {map_cells(s0, trees, options, [&](const Matrix& q, std::size_t i, std::size_t j) {
    return generic_cell(q, layers, alpha, i, j);
  })};
}

NlaOutput run_nla(const SimilarityTensor& s0, std::span<const ParseTree> trees,
                  const NodeSetOptions& options, const NlaConfig& cfg) {
  cfg.validate();
  switch (cfg.variant) {
    case NlaVariant::T1: return nla_t1(s0, trees, options, cfg.act, cfg.tau);
    case NlaVariant::T2: return nla_t2(s0, trees, options, cfg.act, cfg.tau, cfg.alpha);
    case NlaVariant::Generic:
      return nla_generic(s0, trees, options, t2_layers(cfg.act, cfg.tau, cfg.alpha), cfg.alpha);
  }
  throw std::invalid_argument("unknown NLA variant");
}

Matrix s_bar(const SimilarityTensor& s0, std::span<const ParseTree> trees,
             const NodeSetOptions& options, const NlaConfig& cfg_t1, const NlaConfig& cfg_t2) {
  if (cfg_t1.variant != NlaVariant::T1 || cfg_t2.variant != NlaVariant::T2) {
    throw std::invalid_argument("s_bar needs a T1 and a T2 configuration");
  }
  Matrix out = run_nla(s0, trees, options, cfg_t1).s3;
  const Matrix t2 = run_nla(s0, trees, options, cfg_t2).s3;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += t2(i, j);
  return out;
}

SimilarityTensor nla_backward(const SimilarityTensor& s0, std::span<const ParseTree> trees,
                              const NodeSetOptions& options, const NlaConfig& cfg,
                              const Matrix& upstream) {
  cfg.validate();
  if (cfg.variant == NlaVariant::Generic) throw std::invalid_argument("backward needs a T1 or T2 configuration");
  const std::size_t c = s0.batch_size();
  if (trees.size() != c) throw ShapeError("need one tree per text");
  if (upstream.rows() != c || upstream.cols() != c) throw ShapeError("upstream gradient must be C x C");
  SimilarityTensor grad = s0.zeros_like();
  for (std::size_t j = 0; j < c; ++j) {
    const auto nodes = enumerate_nodes(trees[j], options);
    for (std::size_t i = 0; i < c; ++i) {
      const double up = upstream(i, j);
      if (up == 0.0) continue;
      const Matrix q = per_mask_node_scores(s0.cell(i, j), trees[j], nodes);
      const Matrix dq = cfg.variant == NlaVariant::T1 ? nla_t1_cell_grad(q, cfg.act, cfg.tau)
                                                      : nla_t2_cell_grad(q, cfg.act, cfg.tau, cfg.alpha);
      // Each node B scatters its gradient to the S0 leaves it sums over.
      Matrix& g = grad.cell(i, j);
      for (std::size_t b = 0; b < nodes.size(); ++b) {
        const TreeNode& node = trees[j].node(nodes[b]);
        for (std::size_t m = 0; m < q.rows(); ++m)
          for (std::size_t leaf = node.leaf_begin; leaf < node.leaf_end; ++leaf) g(m, leaf) += up * dq(m, b);
      }
    }
  }
  return grad;
}

}  // namespace powerset
