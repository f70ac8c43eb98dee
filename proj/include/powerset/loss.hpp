#pragma once

#include <span>

#include "powerset/batch.hpp"
#include "powerset/core.hpp"

namespace powerset {

struct LossConfig {
  double gamma = 0.2;              // triplet margin
  double lambda = 0.2;             // weight of the triplet term
  double clip_temperature = 0.07;  // fixed; no training loop here

  void validate() const;
};

/// Row-wise triplet hinge:
///   (1/C) sum_i max( max_{j != i} X[i,j] - X[i,i] + gamma, 0 ).
double phi_gamma(const Matrix& x, double gamma);

/// Subgradient of phi_gamma. The hinge is taken as inactive at exactly 0 and
/// ties for the row maximum resolve to the lowest column.
Matrix phi_gamma_grad(const Matrix& x, double gamma);

/// phi_gamma(Q) + phi_gamma(Q^T).
double triplet_loss(const Matrix& q_bar, double gamma);
Matrix triplet_loss_grad(const Matrix& q_bar, double gamma);

/// Symmetric InfoNCE over cosine similarities divided by `temperature`,
/// averaged over the image->text and text->image directions.
double clip_loss(std::span<const Vector> image_globals, std::span<const Vector> text_globals,
                 double temperature);

/// clip_loss(batch globals) + lambda * triplet_loss(similarity).
double total_loss(const MiniBatch& batch, const Matrix& similarity, const LossConfig& cfg);

/// d total_loss / d similarity (the CLIP term does not depend on it).
Matrix total_loss_grad(const Matrix& similarity, const LossConfig& cfg);

}  // namespace powerset
