#pragma once

#include <vector>

#include <Eigen/Dense>

#include "newsfactor/admm.hpp"
#include "newsfactor/data.hpp"

namespace newsfactor::predict {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Direction { kDown, kUp };

/// Up iff the predicted log return is strictly positive; a flat prediction
/// counts as down (do not buy).
inline Direction direction_of(double r_hat) {
  return r_hat > 0.0 ? Direction::kUp : Direction::kDown;
}

const char* to_string(Direction d);

struct Prediction {
  int day = 0;
  Vector r_hat;
  Vector x_hat;  // previous close * exp(r_hat)
  std::vector<Direction> direction;
};

/// r_hat = U (W y_t).
Vector predict_returns(const admm::FactorModel& model, const Vector& y_t);

/// Predicted returns for every column of `intensity` (words x days).
Matrix predict_return_matrix(const admm::FactorModel& model, const Matrix& intensity);

Prediction make_prediction(const admm::FactorModel& model, const Vector& y_t,
                           const Vector& previous_close, int day);

/// Fraction of masked stock-days whose predicted direction matches the sign
/// of the realized return. Days with a zero realized return are skipped.
/// Throws UndefinedMetricError when nothing is left to score.
double directional_accuracy(const Matrix& predicted, const Matrix& actual,
                            const data::Mask& mask);

/// Same as directional_accuracy, one value per row; NaN for rows with no
/// scorable entries.
Vector per_stock_accuracy(const Matrix& predicted, const Matrix& actual,
                          const data::Mask& mask);

struct Neighbor {
  Eigen::Index stock = 0;
  double distance = 0.0;
};

/// 1 - Pearson correlation between two factor vectors. NaN if either has zero
/// variance.
double correlation_distance(const Vector& a, const Vector& b);

/// Pairwise correlation distance between rows of U (diagonal 0). Rows with
/// zero variance get NaN off the diagonal.
Matrix correlation_distance_matrix(const Matrix& u);

/// The k rows of U nearest to `target` by correlation distance, ties broken
/// by index. Zero-variance rows are skipped with a warning.
std::vector<Neighbor> closest_stocks(const Matrix& u, Eigen::Index target,
                                     Eigen::Index k);

}  // namespace newsfactor::predict
