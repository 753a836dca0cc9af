#include "newsfactor/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "newsfactor/error.hpp"
#include "newsfactor/log.hpp"

namespace newsfactor::baselines {
namespace {

constexpr double kRankFallbackRidge = 1e-8;

Vector project_simplex(const Vector& z) {
  // Sort-based projection onto {w >= 0, sum w = 1}.
  std::vector<double> sorted(z.data(), z.data() + z.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) theta = candidate;
  }
  return (z.array() - theta).cwiseMax(0.0);
}

double one_step_mse(const CrossRegressor& model, const Matrix& series) {
  double sse = 0.0;
  for (Eigen::Index t = 1; t < series.cols(); ++t) {
    sse += (model.predict(series.col(t - 1)) - series.col(t)).squaredNorm();
  }
  return sse / static_cast<double>((series.cols() - 1) * series.rows());
}

}  // namespace

Matrix previous_x(const Matrix& close) {
  if (close.cols() < 2) throw DataError("previous_x needs at least two days of prices");
  return close.leftCols(close.cols() - 1);
}

Matrix previous_r(const Matrix& returns) {
  Matrix out = Matrix::Zero(returns.rows(), returns.cols());
  if (returns.cols() > 1) out.rightCols(returns.cols() - 1) = returns.leftCols(returns.cols() - 1);
  return out;
}

ArModel ar_fit(std::span<const double> series, int order) {
  if (order < 1) throw ConfigError("AR order must be at least 1");
  const auto p = static_cast<Eigen::Index>(order);
  const auto n = static_cast<Eigen::Index>(series.size());
  if (n < 2 * p + 1) {
    std::ostringstream msg;
    msg << "AR(" << order << ") needs at least " << 2 * order + 1 << " samples, got " << n;
    throw DataError(msg.str());
  }
  const Eigen::Index rows = n - p;
  Matrix x(rows, p);
  Vector y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index t = r + p;
    y(r) = series[static_cast<std::size_t>(t)];
    for (Eigen::Index k = 0; k < p; ++k) x(r, k) = series[static_cast<std::size_t>(t - 1 - k)];
  }
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Matrix xc = x.rowwise() - x_mean;
  const Vector yc = y.array() - y_mean;

  ArModel model;
  model.order = order;
  const Eigen::ColPivHouseholderQR<Matrix> qr(xc);
  if (qr.rank() == p) {
    model.coefficients = qr.solve(yc);
  } else {
    log::warn("AR design matrix is rank deficient; using a 1e-8 ridge");
    Matrix normal = xc.transpose() * xc;
    normal.diagonal().array() += kRankFallbackRidge;
    model.coefficients = normal.ldlt().solve(xc.transpose() * yc);
  }
  model.intercept = y_mean - x_mean.dot(model.coefficients);
  return model;
}

double ar_predict(const ArModel& model, std::span<const double> history) {
  const auto p = static_cast<std::size_t>(model.order);
  if (history.size() < p) throw DataError("AR forecast needs `order` values of history");
  double value = model.intercept;
  for (std::size_t k = 0; k < p; ++k) {
    value += model.coefficients(static_cast<Eigen::Index>(k)) * history[history.size() - 1 - k];
  }
  return value;
}

Vector CrossRegressor::predict(const Vector& previous) const {
  if (previous.size() != coefficients.cols()) {
    throw DimensionError("cross-sectional predictor: input length mismatch");
  }
  return coefficients * previous + intercept;
}

CrossRegressor cross_regress_fit(const Matrix& series, double penalty) {
  if (series.cols() < 2) throw DataError("cross-sectional regression needs two or more days");
  if (!(penalty > 0.0)) throw ConfigError("ridge penalty must be positive");
  const Eigen::Index pairs = series.cols() - 1;
  const Matrix features = series.leftCols(pairs).transpose();  // pairs x n
  const Matrix targets = series.rightCols(pairs).transpose();  // pairs x n
  const Eigen::RowVectorXd f_mean = features.colwise().mean();
  const Eigen::RowVectorXd t_mean = targets.colwise().mean();
  const Matrix fc = features.rowwise() - f_mean;
  const Matrix tc = targets.rowwise() - t_mean;

  Matrix normal = fc.transpose() * fc;
  normal.diagonal().array() += penalty;
  const Matrix beta = normal.llt().solve(fc.transpose() * tc);  // n x n, column i -> stock i

  CrossRegressor model;
  model.coefficients = beta.transpose();
  model.intercept = t_mean.transpose() - model.coefficients * f_mean.transpose();
  model.penalty = penalty;
  return model;
}

CrossRegressor cross_regress(const Matrix& train, const Matrix& validation,
                             std::span<const double> grid) {
  if (grid.empty()) throw ConfigError("ridge penalty grid is empty");
  if (validation.cols() < 2) return cross_regress_fit(train, 1.0);
  if (validation.rows() != train.rows()) {
    throw DimensionError("train and validation cover different stocks");
  }
  CrossRegressor best;
  double best_mse = std::numeric_limits<double>::infinity();
  for (const double penalty : grid) {
    CrossRegressor candidate = cross_regress_fit(train, penalty);
    const double mse = one_step_mse(candidate, validation);
    if (mse < best_mse) {
      best_mse = mse;
      best = std::move(candidate);
    }
  }
  return best;
}

Portfolio uniform_portfolio(Eigen::Index n) {
  if (n < 1) throw ConfigError("uniform portfolio needs at least one stock");
  return {Vector::Constant(n, 1.0 / static_cast<double>(n))};
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Vector project_simplex_halfspace(const Vector& z, const Vector& mean, double target) {
  const double scale = std::max(1.0, mean.cwiseAbs().maxCoeff());
  const double floor = target - 1e-12 * scale;
  Vector w = project_simplex(z);
  if (mean.dot(w) >= floor) return w;
  // w(theta) = P_simplex(z + theta * mean); mean'w(theta) is nondecreasing.
  double lo = 0.0;
  double hi = 1.0;
  while (mean.dot(project_simplex(z + hi * mean)) < floor) {
    hi *= 2.0;
    if (hi > 1e300 / scale) throw NumericalError("return floor is unreachable on the simplex");
  }
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (mean.dot(project_simplex(z + mid * mean)) >= floor) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return project_simplex(z + hi * mean);
}

Vector min_variance_weights(const Matrix& cov, const Vector& mean, double target,
                            double tolerance, int max_iters) {
  const Eigen::Index n = cov.rows();
  if (cov.cols() != n || mean.size() != n || n < 1) {
    throw DimensionError("min-variance: covariance and mean shapes differ");
  }
  if (n == 1) return Vector::Ones(1);
  const double top = Eigen::SelfAdjointEigenSolver<Matrix>(cov, Eigen::EigenvaluesOnly)
                         .eigenvalues()
                         .maxCoeff();
  if (!(top > 0.0)) {
    return project_simplex_halfspace(Vector::Constant(n, 1.0 / static_cast<double>(n)), mean, target);
  }
  const double step = 1.0 / (2.0 * top);
  Vector w = project_simplex_halfspace(Vector::Constant(n, 1.0 / static_cast<double>(n)), mean, target);
  for (int it = 0; it < max_iters; ++it) {
    Vector next = project_simplex_halfspace(w - step * 2.0 * (cov * w), mean, target);
    const double moved = (next - w).cwiseAbs().maxCoeff();
    w = std::move(next);
    if (moved < tolerance) return w / w.sum();
  }
  log::warn("min-variance projected gradient hit its iteration cap");
  return w / w.sum();
}

Portfolio min_variance_portfolio(const Matrix& window, const MvpOptions& options) {
  const Eigen::Index n = window.rows();
  const Eigen::Index days = window.cols();
  if (n < 1 || days < 2) throw DataError("min-variance portfolio needs a window of two or more days");
  if (!(options.shrinkage >= 0.0 && options.shrinkage <= 1.0)) {
    throw ConfigError("covariance shrinkage must lie in [0, 1]");
  }
  const Vector mean = window.rowwise().mean();
  const Matrix centered = window.colwise() - mean;
  Matrix cov = centered * centered.transpose() / static_cast<double>(days - 1);
  const Vector diag = cov.diagonal();
  cov *= (1.0 - options.shrinkage);
  cov.diagonal() += options.shrinkage * diag;

  double target = quantile(std::vector<double>(window.data(), window.data() + window.size()),
                           options.target_quantile);
  const double best = mean.maxCoeff();
  if (target > best) {
    std::ostringstream msg;
    msg << "MVP return floor " << target << " exceeds the best stock mean " << best
        << "; lowering it";
    log::warn(msg.str());
    target = best;
  }
  return {min_variance_weights(cov, mean, target, options.tolerance, options.max_iters)};
}

}  // namespace newsfactor::baselines
