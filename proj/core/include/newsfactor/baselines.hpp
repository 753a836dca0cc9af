#pragma once

// Reference predictors and portfolios the factor model is compared against.

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace newsfactor::baselines {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Previous-close predictor. `close` covers days 0..s; column t-1 of the
/// result predicts day t and equals close column t-1. The implied log return
/// is always 0.
Matrix previous_x(const Matrix& close);

/// Previous-return predictor over a days-1..s returns matrix. Column t of the
/// result is column t-1 of `returns`; the first column has no history and is
/// 0.
Matrix previous_r(const Matrix& returns);

inline constexpr int kDefaultArOrder = 10;

/// value_t ~ intercept + sum_k coefficients[k] * value_{t-1-k}.
struct ArModel {
  int order = 0;
  double intercept = 0.0;
  Vector coefficients;
};

/// Least squares on (value_{t-1..t-p}, 1). Requires 2p+1 samples. A rank
/// deficient design falls back to a 1e-8 ridge on the lag coefficients with a
/// warning; the intercept is never penalized.
ArModel ar_fit(std::span<const double> series, int order = kDefaultArOrder);

/// One-step-ahead forecast from the last `order` values of `history`.
double ar_predict(const ArModel& model, std::span<const double> history);

/// Per-stock linear predictor on the previous day's full cross section.
struct CrossRegressor {
  Matrix coefficients;  // n x n, row i predicts stock i
  Vector intercept;
  double penalty = 0.0;

  Vector predict(const Vector& previous) const;
};

inline constexpr double kRidgeGrid[] = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2};

/// Ridge regression of every column t >= 1 of `series` (n x T) on column t-1,
/// intercepts unpenalized.
CrossRegressor cross_regress_fit(const Matrix& series, double penalty);

/// Fits on `train` for each penalty in `grid` and keeps the one with the
/// lowest mean squared one-step error on `validation`, whose first column is
/// the day before the first validation target. With fewer than two
/// validation columns the penalty defaults to 1.
CrossRegressor cross_regress(const Matrix& train, const Matrix& validation,
                             std::span<const double> grid = kRidgeGrid);

/// Long-only weights summing to 1, or all zero for "hold cash".
struct Portfolio {
  Vector weights;
};

Portfolio uniform_portfolio(Eigen::Index n);

struct MvpOptions {
  double target_quantile = 0.95;
  double shrinkage = 0.1;  // covariance <- (1-s) cov + s diag(cov)
  double tolerance = 1e-8;
  int max_iters = 1'000'000;
};

/// Linear-interpolated quantile of `values` (q in [0, 1]).
double quantile(std::vector<double> values, double q);

/// Euclidean projection of z onto {w >= 0, sum w = 1, mean'w >= target}.
/// Requires target <= max(mean).
Vector project_simplex_halfspace(const Vector& z, const Vector& mean, double target);

/// min w' cov w over the set above, by projected gradient descent; stops when
/// an iteration moves w by less than `tolerance` (max norm).
Vector min_variance_weights(const Matrix& cov, const Vector& mean, double target,
                            double tolerance = 1e-8, int max_iters = 1'000'000);

/// Minimum-variance portfolio for a window of returns (n stocks x T days) with
/// the expected-return floor at the pooled target quantile of all returns in
/// the window. An unreachable floor is lowered to the best stock mean with a
/// warning.
Portfolio min_variance_portfolio(const Matrix& window, const MvpOptions& options = {});

}  // namespace newsfactor::baselines
