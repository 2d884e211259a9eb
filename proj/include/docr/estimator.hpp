#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "docr/metric.hpp"

namespace docr {

/// Confidence interval on a mismatch loss: lcb = mean - width, ucb = mean + width.
struct LossEstimate {
  double mean = 0.0;
  double width = 0.0;
  double lcb = 0.0;
  double ucb = 0.0;
};

/// Online ridge regression of observed losses on vec((x-f)(x-f)^T).
///
/// Keeps the regularized Gram matrix, its inverse (maintained with rank-one
/// Sherman-Morrison downdates and re-anchored by a full inversion every
/// kReinvertEvery updates), the response accumulator b and the current
/// point estimate w_hat = Gram^{-1} b. Widths are alpha * ||phi||_{Gram^{-1}}.
class RidgeEstimator {
 public:
  static constexpr std::uint64_t kReinvertEvery = 1000;

  RidgeEstimator(int d, double lambda, double alpha) : d_(d), lambda_(lambda), alpha_(alpha) {
    if (d < 2) throw std::invalid_argument("estimator: d must be >= 2");
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw std::invalid_argument("estimator: lambda must be > 0");
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw std::invalid_argument("estimator: alpha must be > 0");
    const Eigen::Index n = static_cast<Eigen::Index>(d) * d;
    gram_ = lambda * Matrix::Identity(n, n);
    gram_inv_ = (1.0 / lambda) * Matrix::Identity(n, n);
    b_ = Vector::Zero(n);
    w_hat_ = Vector::Zero(n);
  }

  int dim() const { return d_; }
  double lambda() const { return lambda_; }
  double alpha() const { return alpha_; }
  std::uint64_t update_count() const { return update_count_; }
  const Matrix& gram() const { return gram_; }
  const Matrix& gram_inverse() const { return gram_inv_; }
  const Vector& response() const { return b_; }

  /// Gram^{-1} b, the current estimate of vec(W).
  const Vector& estimated_w() const { return w_hat_; }

  LossEstimate predict_feature(const Feature& phi) const {
    if (phi.size() != b_.size()) throw std::invalid_argument("predict: dimension mismatch");
    LossEstimate e;
    e.mean = phi.dot(w_hat_);
    const double q = phi.dot(gram_inv_ * phi);
    e.width = alpha_ * std::sqrt(q > 0.0 ? q : 0.0);
    e.lcb = e.mean - e.width;
    e.ucb = e.mean + e.width;
    return e;
  }

  /// Lifted features of x against every column of `keys` (d x K), one column each.
  Matrix features_against(const Context& x, const Eigen::Ref<const Matrix>& keys) const {
    if (x.size() != d_ || keys.rows() != d_) throw std::invalid_argument("predict: dimension mismatch");
    const Eigen::Index K = keys.cols();
    Matrix phi(static_cast<Eigen::Index>(d_) * d_, K);
    for (Eigen::Index k = 0; k < K; ++k) {
      const Vector v = x - keys.col(k);
      for (int i = 0; i < d_; ++i)
        for (int j = 0; j < d_; ++j) phi(i * d_ + j, k) = v(i) * v(j);
    }
    return phi;
  }

  /// predict(x, keys.col(k)) for every k, computed with one matrix product.
  std::vector<LossEstimate> predict_batch(const Context& x, const Eigen::Ref<const Matrix>& keys) const {
    const Matrix phi = features_against(x, keys);
    const Vector means = phi.transpose() * w_hat_;
    const Matrix scaled = gram_inv_ * phi;
    std::vector<LossEstimate> out(static_cast<std::size_t>(keys.cols()));
    for (Eigen::Index k = 0; k < keys.cols(); ++k) {
      LossEstimate& e = out[static_cast<std::size_t>(k)];
      const double q = phi.col(k).dot(scaled.col(k));
      e.mean = means(k);
      e.width = alpha_ * std::sqrt(q > 0.0 ? q : 0.0);
      e.lcb = e.mean - e.width;
      e.ucb = e.mean + e.width;
    }
    return out;
  }

  LossEstimate predict(const Context& x, const Context& f) const {
    if (x.size() != d_ || f.size() != d_) throw std::invalid_argument("predict: dimension mismatch");
    return predict_feature(feature_map(x, f));
  }

  void update(const Context& x, const Context& f, double loss) {
    if (x.size() != d_ || f.size() != d_) throw std::invalid_argument("update: dimension mismatch");
    update_feature(feature_map(x, f), loss);
  }

  void update_feature(const Feature& phi, double loss) {
    if (!std::isfinite(loss)) throw std::invalid_argument("update: loss must be finite");
    if (phi.size() != b_.size()) throw std::invalid_argument("update: dimension mismatch");
    ++update_count_;
    if (phi.squaredNorm() == 0.0) return;
    gram_.noalias() += phi * phi.transpose();
    b_.noalias() += loss * phi;
    if (update_count_ % kReinvertEvery == 0) {
      reinvert();
    } else {
      const Vector u = gram_inv_ * phi;
      const double denom = 1.0 + phi.dot(u);
      gram_inv_.noalias() -= (u * u.transpose()) / denom;
    }
    w_hat_.noalias() = gram_inv_ * b_;
  }

  /// Recomputes the inverse from the Gram matrix.
  void reinvert() {
    gram_ = 0.5 * (gram_ + gram_.transpose());
    const Eigen::Index n = gram_.rows();
    gram_inv_ = gram_.llt().solve(Matrix::Identity(n, n));
    w_hat_.noalias() = gram_inv_ * b_;
  }

  /// max |Gram * Gram^{-1} - I|.
  double inverse_residual() const {
    const Eigen::Index n = gram_.rows();
    return (gram_ * gram_inv_ - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  }

  /// Snapshot with dense matrices for d <= 8; larger states omit them.
  nlohmann::json to_json() const {
    nlohmann::json j = {{"schema_version", 1}, {"d", d_}, {"lambda", lambda_},
                        {"alpha", alpha_}, {"update_count", update_count_},
                        {"b", vector_to_json(b_)}};
    if (d_ <= 8) {
      j["gram"] = matrix_to_json(gram_);
      j["gram_inverse"] = matrix_to_json(gram_inv_);
    }
    return j;
  }

  static RidgeEstimator from_json(const nlohmann::json& j) {
    RidgeEstimator est(j.at("d").get<int>(), j.at("lambda").get<double>(), j.at("alpha").get<double>());
    if (!j.contains("gram")) throw std::invalid_argument("estimator snapshot has no dense Gram matrix");
    est.gram_ = matrix_from_json(j.at("gram"));
    est.b_ = vector_from_json(j.at("b"));
    est.update_count_ = j.at("update_count").get<std::uint64_t>();
    const Eigen::Index n = static_cast<Eigen::Index>(est.d_) * est.d_;
    if (est.gram_.rows() != n || est.gram_.cols() != n || est.b_.size() != n)
      throw std::invalid_argument("estimator snapshot: inconsistent sizes");
    est.reinvert();
    return est;
  }

 private:
  int d_;
  double lambda_;
  double alpha_;
  std::uint64_t update_count_ = 0;
  Matrix gram_;
  Matrix gram_inv_;
  Vector b_;
  Vector w_hat_;
};

}  // namespace docr
