#include "newsfactor/predict.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "newsfactor/error.hpp"
#include "newsfactor/log.hpp"

namespace newsfactor::predict {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool has_variance(const Vector& v) {
  return (v.array() - v.mean()).square().sum() > 0.0;
}

}  // namespace

const char* to_string(Direction d) { return d == Direction::kUp ? "up" : "down"; }

Vector predict_returns(const admm::FactorModel& model, const Vector& y_t) {
  if (y_t.size() != model.words()) {
    throw DimensionError("word vector length does not match the model");
  }
  return model.u * (model.w * y_t);
}

Matrix predict_return_matrix(const admm::FactorModel& model, const Matrix& intensity) {
  if (intensity.rows() != model.words()) {
    throw DimensionError("intensity rows do not match the model's word count");
  }
  return model.u * (model.w * intensity);
}

Prediction make_prediction(const admm::FactorModel& model, const Vector& y_t,
                           const Vector& previous_close, int day) {
  if (previous_close.size() != model.stocks()) {
    throw DimensionError("previous close vector does not match the model");
  }
  Prediction p;
  p.day = day;
  p.r_hat = predict_returns(model, y_t);
  p.x_hat = previous_close.array() * p.r_hat.array().exp();
  p.direction.reserve(static_cast<std::size_t>(p.r_hat.size()));
  for (Eigen::Index i = 0; i < p.r_hat.size(); ++i) {
    p.direction.push_back(direction_of(p.r_hat(i)));
  }
  return p;
}

Vector per_stock_accuracy(const Matrix& predicted, const Matrix& actual,
                          const data::Mask& mask) {
  if (predicted.rows() != actual.rows() || predicted.cols() != actual.cols() ||
      mask.rows() != actual.rows() || mask.cols() != actual.cols()) {
    throw DimensionError("accuracy: prediction, actual and mask shapes differ");
  }
  Vector out(actual.rows());
  for (Eigen::Index i = 0; i < actual.rows(); ++i) {
    long hits = 0, total = 0;
    for (Eigen::Index t = 0; t < actual.cols(); ++t) {
      if (!mask(i, t) || actual(i, t) == 0.0) continue;
      ++total;
      if ((direction_of(predicted(i, t)) == Direction::kUp) == (actual(i, t) > 0.0)) ++hits;
    }
    out(i) = total > 0 ? static_cast<double>(hits) / static_cast<double>(total) : kNaN;
  }
  return out;
}

double directional_accuracy(const Matrix& predicted, const Matrix& actual,
                            const data::Mask& mask) {
  if (predicted.rows() != actual.rows() || predicted.cols() != actual.cols() ||
      mask.rows() != actual.rows() || mask.cols() != actual.cols()) {
    throw DimensionError("accuracy: prediction, actual and mask shapes differ");
  }
  long hits = 0, total = 0;
  for (Eigen::Index t = 0; t < actual.cols(); ++t) {
    for (Eigen::Index i = 0; i < actual.rows(); ++i) {
      if (!mask(i, t) || actual(i, t) == 0.0) continue;
      ++total;
      if ((direction_of(predicted(i, t)) == Direction::kUp) == (actual(i, t) > 0.0)) ++hits;
    }
  }
  if (total == 0) throw UndefinedMetricError("directional accuracy over an empty mask");
  return static_cast<double>(hits) / static_cast<double>(total);
}

double correlation_distance(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("correlation distance: length mismatch");
  const Vector ca = a.array() - a.mean();
  const Vector cb = b.array() - b.mean();
  const double na = ca.norm();
  const double nb = cb.norm();
  if (na == 0.0 || nb == 0.0) return kNaN;
  const double corr = std::clamp(ca.dot(cb) / (na * nb), -1.0, 1.0);
  return 1.0 - corr;
}

Matrix correlation_distance_matrix(const Matrix& u) {
  const Eigen::Index n = u.rows();
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dist = correlation_distance(u.row(i).transpose(), u.row(j).transpose());
      out(i, j) = dist;
      out(j, i) = dist;
    }
  }
  return out;
}

std::vector<Neighbor> closest_stocks(const Matrix& u, Eigen::Index target,
                                     Eigen::Index k) {
  const Eigen::Index n = u.rows();
  if (target < 0 || target >= n) throw DimensionError("closest_stocks: target out of range");
  if (k < 0 || k >= n) throw ConfigError("closest_stocks: k must be below the stock count");

  const Vector row = u.row(target).transpose();
  if (!has_variance(row)) {
    throw DataError("closest_stocks: target factor row has zero variance");
  }
  std::vector<Neighbor> all;
  all.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == target) continue;
    const Vector other = u.row(i).transpose();
    if (!has_variance(other)) {
      std::ostringstream msg;
      msg << "closest_stocks: stock " << i << " has a zero-variance factor row, skipped";
      log::warn(msg.str());
      continue;
    }
    all.push_back({i, correlation_distance(row, other)});
  }
  std::stable_sort(all.begin(), all.end(), [](const Neighbor& x, const Neighbor& y) {
    if (x.distance != y.distance) return x.distance < y.distance;
    return x.stock < y.stock;
  });
  if (static_cast<Eigen::Index>(all.size()) > k) all.resize(static_cast<std::size_t>(k));
  return all;
}

}  // namespace newsfactor::predict
