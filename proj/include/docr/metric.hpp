#pragma once

// Quadratic mismatch loss d(x, f) = (x - f)^T W (x - f) and its lifted
// linear form <vec((x - f)(x - f)^T), vec(W)>.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "docr/rng.hpp"

namespace docr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A context (query embedding or library key). Length d >= 2, norm <= 1.
using Context = Vector;
/// Row-major flattening of a d x d matrix, length d^2.
using Feature = Vector;

inline constexpr double kNormSlack = 1e-9;
inline constexpr double kPsdTol = 1e-9;

inline void require_same_dim(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size())
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
}

/// Throws unless x has dimension d >= 2 and lies in the closed unit ball.
inline void validate_context(const Context& x, Eigen::Index d) {
  if (d < 2) throw std::invalid_argument("context dimension must be >= 2");
  if (x.size() != d)
    throw std::invalid_argument("context has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(d));
  if (!x.allFinite()) throw std::invalid_argument("context has non-finite entries");
  if (x.norm() > 1.0 + kNormSlack)
    throw std::invalid_argument("context norm exceeds 1");
}

/// Row-major vec of a square matrix.
inline Feature vec(const Matrix& m) {
  const Eigen::Index d = m.rows();
  Feature out(d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) out(i * d + j) = m(i, j);
  return out;
}

inline Matrix unvec(const Feature& v) {
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  if (d * d != v.size()) throw std::invalid_argument("unvec: length is not a perfect square");
  Matrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = v(i * d + j);
  return m;
}

/// vec((x - f)(x - f)^T).
inline Feature feature_map(const Context& x, const Context& f) {
  require_same_dim(x, f, "feature_map");
  const Vector diff = x - f;
  const Eigen::Index d = diff.size();
  Feature phi(d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) phi(i * d + j) = diff(i) * diff(j);
  return phi;
}

struct GroundTruth {
  Matrix W;
  double sigma = 0.0;
  double w_max = 1.0;
  std::uint64_t seed = 0;

  Eigen::Index dim() const { return W.rows(); }
};

inline double quadratic_form(const Matrix& W, const Vector& x, const Vector& f) {
  const Vector diff = x - f;
  return diff.dot(W * diff);
}

inline double true_distance(const Context& x, const Context& f, const GroundTruth& gt) {
  require_same_dim(x, f, "true_distance");
  if (x.size() != gt.dim()) throw std::invalid_argument("true_distance: W dimension mismatch");
  return quadratic_form(gt.W, x, f);
}

/// W = A^T A with A i.i.d. standard normal, rescaled to spectral norm w_max.
inline GroundTruth sample_ground_truth(int d, double w_max, double sigma, std::uint64_t seed) {
  if (d < 2) throw std::invalid_argument("sample_ground_truth: d must be >= 2");
  if (!(w_max > 0.0)) throw std::invalid_argument("sample_ground_truth: w_max must be > 0");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sample_ground_truth: sigma must be >= 0");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix A(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) A(i, j) = normal(rng);
  Matrix W = A.transpose() * A;
  W = 0.5 * (W + W.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(W, Eigen::EigenvaluesOnly);
  const double top = eig.eigenvalues().maxCoeff();
  W *= w_max / top;
  return GroundTruth{std::move(W), sigma, w_max, seed};
}

inline bool is_psd(const Matrix& W, double tol = kPsdTol) {
  if (W.rows() != W.cols()) return false;
  if ((W - W.transpose()).cwiseAbs().maxCoeff() > tol) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(W, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -tol;
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("matrix must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw std::invalid_argument("ragged matrix");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
  }
  return m;
}

inline nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Vector vector_from_json(const nlohmann::json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
  return v;
}

inline nlohmann::json to_json(const GroundTruth& gt) {
  return {{"d", gt.dim()}, {"W", matrix_to_json(gt.W)}, {"sigma", gt.sigma},
          {"w_max", gt.w_max}, {"seed", gt.seed}};
}

inline GroundTruth ground_truth_from_json(const nlohmann::json& j) {
  GroundTruth gt;
  gt.W = matrix_from_json(j.at("W"));
  gt.sigma = j.value("sigma", 0.0);
  gt.w_max = j.value("w_max", 1.0);
  gt.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("d") && j.at("d").get<Eigen::Index>() != gt.dim())
    throw std::invalid_argument("ground truth: d does not match W");
  if (!is_psd(gt.W)) throw std::invalid_argument("ground truth: W is not symmetric PSD");
  return gt;
}

}  // namespace docr
