#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "powerset/batch.hpp"
#include "powerset/core.hpp"
#include "powerset/tree.hpp"

// Non-linear aggregators: three sum-then-activate layers over the S0 scores
//
//   S1[m|B] = sigma1( sum_{leaves of B} S0[m, leaf] )
//   S2[B]   = sigma2( sum_m S1[m|B] )
//   S3      = sigma3( K^(alpha-1) * sum_B S2[B] )
//
// T1 (sigma1 = tau * Act(x / tau), identity elsewhere, alpha = 0) tracks the
// text-to-region score; T2 (sigma1 = zeta_alpha(x / 2tau), sigma2 = exp,
// sigma3 = tau * log) tracks the region-to-text score. Both cost O(M * K)
// per cell.

namespace powerset {

enum class Activation { Softplus, Relu, Gelu, Swish, Tanh, Sigmoid, Softsign };
enum class NlaVariant { T1, T2, Generic };

Activation parse_activation(std::string_view name);
std::string to_string(Activation act);
NlaVariant parse_variant(std::string_view name);
std::string to_string(NlaVariant variant);

/// T1 activations act directly; T2 activations enter through their
/// antiderivative in zeta.
bool is_t1_activation(Activation act);
bool is_t2_activation(Activation act);

struct NlaConfig {
  NlaVariant variant = NlaVariant::T1;
  Activation act = Activation::Softplus;
  double tau = 0.001;
  double alpha = 0.0;

  static NlaConfig t1(Activation act = Activation::Softplus, double tau = 0.001) {
    return {NlaVariant::T1, act, tau, 0.0};
  }
  static NlaConfig t2(Activation act = Activation::Tanh, double tau = 0.001, double alpha = 0.75) {
    return {NlaVariant::T2, act, tau, alpha};
  }

  void validate() const;
};

/// A layer produced a NaN or infinity (generic path only).
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(int layer, std::size_t i, std::size_t j)
      : std::runtime_error("non-finite value in NLA layer " + std::to_string(layer) + " at cell (" +
                           std::to_string(i) + "," + std::to_string(j) + ")"),
        layer_(layer) {}
  int layer() const { return layer_; }

 private:
  int layer_;
};

/// T1 activation Act(x) and its derivative.
double t1_activation(Activation act, double x);
double t1_activation_grad(Activation act, double x);

/// zeta_alpha(x) = x + alpha * (antiderivative of Act), shifted so zeta(0) = 0.
///   tanh:     x + alpha * log cosh(x)
///   sigmoid:  x + alpha * (softplus(x) - log 2)
///   softsign: x + alpha * (|x| - log1p(|x|))
double zeta(Activation act, double alpha, double x);
double zeta_grad(Activation act, double alpha, double x);

struct LayerActivations {
  std::function<double(double)> sigma1;
  std::function<double(double)> sigma2;
  std::function<double(double)> sigma3;
};

/// T1 and T2 activations in unfused form, for the generic path.
LayerActivations t1_layers(Activation act, double tau);
LayerActivations t2_layers(Activation act, double tau, double alpha);

// Single-cell kernels over an M x K node-score block.
double nla_t1_cell(const Matrix& node_scores, Activation act, double tau);
double nla_t2_cell(const Matrix& node_scores, Activation act, double tau, double alpha);
/// Throws NonFiniteError (cell reported as (0,0)) on overflow.
double nla_generic_cell(const Matrix& node_scores, const LayerActivations& layers, double alpha);

/// dS3 / dQ_{m,B} for one cell, M x K.
Matrix nla_t1_cell_grad(const Matrix& node_scores, Activation act, double tau);
Matrix nla_t2_cell_grad(const Matrix& node_scores, Activation act, double tau, double alpha);

struct NlaOutput {
  Matrix s3;  // C x C
};

NlaOutput nla_t1(const SimilarityTensor& s0, std::span<const ParseTree> trees,
                 const NodeSetOptions& options, Activation act, double tau);
NlaOutput nla_t2(const SimilarityTensor& s0, std::span<const ParseTree> trees,
                 const NodeSetOptions& options, Activation act, double tau, double alpha);
NlaOutput nla_generic(const SimilarityTensor& s0, std::span<const ParseTree> trees,
                      const NodeSetOptions& options, const LayerActivations& layers, double alpha);

/// Dispatches on cfg.variant. Generic runs the T2 layers unfused.
NlaOutput run_nla(const SimilarityTensor& s0, std::span<const ParseTree> trees,
                  const NodeSetOptions& options, const NlaConfig& cfg);

/// S-bar = NLA-T1(S0) + NLA-T2(S0).
Matrix s_bar(const SimilarityTensor& s0, std::span<const ParseTree> trees,
             const NodeSetOptions& options, const NlaConfig& cfg_t1, const NlaConfig& cfg_t2);

/// Gradient of sum_{i,j} upstream(i,j) * S3(i,j) with respect to every S0
/// entry. cfg must be T1 or T2.
SimilarityTensor nla_backward(const SimilarityTensor& s0, std::span<const ParseTree> trees,
                              const NodeSetOptions& options, const NlaConfig& cfg,
                              const Matrix& upstream);

}  // namespace powerset
