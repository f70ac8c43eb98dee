#include "powerset/loss.hpp"

#include <cmath>
#include <vector>

#include "powerset/special.hpp"

namespace powerset {

namespace {

void check_square(const Matrix& x) {
  if (x.rows() != x.cols()) throw ShapeError("similarity matrix must be square");
  if (x.rows() < 2) throw std::invalid_argument("triplet loss needs C >= 2");
}

// Column of the largest off-diagonal entry in row i (first on ties).
std::size_t hardest_negative(const Matrix& x, std::size_t i) {
  std::size_t best = i == 0 ? 1 : 0;
  for (std::size_t j = 0; j < x.cols(); ++j)
    if (j != i && x(i, j) > x(i, best)) best = j;
  return best;
}

}  // namespace

void LossConfig::validate() const {
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (!(clip_temperature > 0.0)) throw std::invalid_argument("clip temperature must be > 0");
}

double phi_gamma(const Matrix& x, double gamma) {
  check_square(x);
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double hinge = x(i, hardest_negative(x, i)) - x(i, i) + gamma;
    total += std::max(hinge, 0.0);
  }
  return total / static_cast<double>(x.rows());
}

Matrix phi_gamma_grad(const Matrix& x, double gamma) {
  check_square(x);
  const double inv_c = 1.0 / static_cast<double>(x.rows());
  Matrix g(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const std::size_t j = hardest_negative(x, i);
    if (x(i, j) - x(i, i) + gamma > 0.0) {
      g(i, j) += inv_c;
      g(i, i) -= inv_c;
    }
  }
  return g;
}

double triplet_loss(const Matrix& q_bar, double gamma) {
  return phi_gamma(q_bar, gamma) + phi_gamma(q_bar.transposed(), gamma);
}

Matrix triplet_loss_grad(const Matrix& q_bar, double gamma) {
  Matrix g = phi_gamma_grad(q_bar, gamma);
  const Matrix gt = phi_gamma_grad(q_bar.transposed(), gamma);
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) += gt(j, i);
  return g;
}

double clip_loss(std::span<const Vector> image_globals, std::span<const Vector> text_globals,
                 double temperature) {
  const std::size_t c = image_globals.size();
  if (text_globals.size() != c) throw ShapeError("image and text global counts differ");
  if (c < 2) throw std::invalid_argument("CLIP loss needs C >= 2");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  std::vector<Vector> img, txt;
  for (std::size_t k = 0; k < c; ++k) {
    img.push_back(l2_normalize(image_globals[k]));
    txt.push_back(l2_normalize(text_globals[k]));
  }
  Matrix logits(c, c);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < c; ++j) logits(i, j) = dot(img[i], txt[j]) / temperature;

  double image_to_text = 0.0;
  double text_to_image = 0.0;
  std::vector<double> column(c);
  for (std::size_t k = 0; k < c; ++k) {
    image_to_text += special::log_sum_exp(logits.row(k)) - logits(k, k);
    for (std::size_t r = 0; r < c; ++r) column[r] = logits(r, k);
    text_to_image += special::log_sum_exp(column) - logits(k, k);
  }
  return 0.5 * (image_to_text + text_to_image) / static_cast<double>(c);
}

double total_loss(const MiniBatch& batch, const Matrix& similarity, const LossConfig& cfg) {
  cfg.validate();
  std::vector<Vector> img, txt;
  for (const auto& item : batch.items) {
    img.push_back(item.image.global);
    txt.push_back(item.text.global);
  }
  return clip_loss(img, txt, cfg.clip_temperature) + cfg.lambda * triplet_loss(similarity, cfg.gamma);
}

Matrix total_loss_grad(const Matrix& similarity, const LossConfig& cfg) {
  cfg.validate();
  Matrix g = triplet_loss_grad(similarity, cfg.gamma);
  for (double& v : g.data()) v *= cfg.lambda;
  return g;
}

}  // namespace powerset
