#include "newsfactor/admm.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <sstream>

#include "newsfactor/error.hpp"
#include "newsfactor/prox.hpp"

namespace newsfactor::admm {
namespace {

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                   const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream msg;
    msg << name << " must be " << rows << "x" << cols << ", got " << m.rows()
        << "x" << m.cols();
    throw DimensionError(msg.str());
  }
}

void require_state_shape(const AdmmState& s, Eigen::Index n, Eigen::Index m,
                         Eigen::Index d) {
  require_shape(s.a, n, d, "A");
  require_shape(s.u, n, d, "U");
  require_shape(s.c, n, d, "C");
  require_shape(s.b, d, m, "B");
  require_shape(s.w, d, m, "W");
  require_shape(s.d, d, m, "D");
}

double relative_gap(const Matrix& x, const Matrix& target) {
  return (x - target).norm() / std::max(1.0, target.norm());
}

double penalty(const Matrix& w, const SolverConfig& cfg) {
  return cfg.lambda * w.colwise().norm().sum() + cfg.mu * w.cwiseAbs().sum();
}

bool all_finite(const AdmmState& s) {
  return s.a.allFinite() && s.b.allFinite() && s.u.allFinite() &&
         s.w.allFinite() && s.c.allFinite() && s.d.allFinite();
}

}  // namespace

void SolverConfig::validate() const {
  std::ostringstream bad;
  if (d < 1) bad << " d >= 1;";
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) bad << " lambda >= 0;";
  if (!(mu >= 0.0) || !std::isfinite(mu)) bad << " mu >= 0;";
  if (!(rho > 0.0) || !std::isfinite(rho)) bad << " rho > 0;";
  if (max_iters < 1) bad << " max_iters >= 1;";
  if (!(tol_primal > 0.0)) bad << " tol > 0;";
  const std::string msg = bad.str();
  if (!msg.empty()) throw ConfigError("invalid solver config, require" + msg);
}

TrainingData::TrainingData(Matrix returns, Matrix intensity)
    : r_(std::move(returns)), y_(std::move(intensity)) {
  if (r_.cols() != y_.cols()) {
    throw DimensionError("returns and word intensities cover different day counts");
  }
  if (r_.rows() < 1 || y_.rows() < 1 || r_.cols() < 1) {
    throw DimensionError("training data needs at least one stock, word and day");
  }
  linalg::require_finite(r_, "returns");
  linalg::require_finite(y_, "word intensities");
  if ((y_.array() < 0.0).any()) {
    throw DataError("word intensities must be nonnegative");
  }
  r_yt_ = r_ * y_.transpose();
  y_yt_ = y_ * y_.transpose();
  if (!r_yt_.allFinite() || !y_yt_.allFinite()) {
    throw NumericalError("training data products overflow double precision");
  }
  y_yt_schur_ =
      std::make_shared<const linalg::SchurFactors>(linalg::sylvester_schur(y_yt_));
}

double objective(const Matrix& r, const Matrix& y, const Matrix& u,
                 const Matrix& w, const SolverConfig& cfg) {
  if (u.cols() != w.rows() || u.rows() != r.rows() || w.cols() != y.rows() ||
      y.cols() != r.cols()) {
    throw DimensionError("objective: non-conformable R, Y, U, W");
  }
  const double loss = 0.5 * (r - u * (w * y)).squaredNorm();
  return loss + penalty(w, cfg);
}

double augmented_lagrangian(const TrainingData& data, const AdmmState& s,
                            const SolverConfig& cfg) {
  require_state_shape(s, data.stocks(), data.words(), s.a.cols());
  if ((s.u.array() < 0.0).any()) return std::numeric_limits<double>::infinity();
  const Matrix gap_a = s.a - s.u;
  const Matrix gap_b = s.b - s.w;
  return 0.5 * (data.returns() - s.a * (s.b * data.intensity())).squaredNorm() +
         penalty(s.w, cfg) + (s.c.array() * gap_a.array()).sum() +
         (s.d.array() * gap_b.array()).sum() + 0.5 * cfg.rho * gap_a.squaredNorm() +
         0.5 * cfg.rho * gap_b.squaredNorm();
}

AdmmState initial_state(Eigen::Index stocks, Eigen::Index words,
                        const SolverConfig& cfg) {
  cfg.validate();
  const Eigen::Index d = cfg.d;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  AdmmState s;
  s.u.resize(stocks, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < stocks; ++i) s.u(i, j) = unit(rng) * scale;
  }
  s.a = s.u;
  s.b = Matrix::Zero(d, words);
  s.w = Matrix::Zero(d, words);
  s.c = Matrix::Zero(stocks, d);
  s.d = Matrix::Zero(d, words);
  return s;
}

Matrix update_a(const AdmmState& s, const TrainingData& data,
                const SolverConfig& cfg) {
  const Eigen::Index d = s.a.cols();
  require_state_shape(s, data.stocks(), data.words(), d);
  const Matrix by = s.b * data.intensity();
  Matrix normal = by * by.transpose();
  normal.diagonal().array() += cfg.rho;
  const Matrix rhs = data.r_yt() * s.b.transpose() - s.c + cfg.rho * s.u;
  // A normal = rhs with normal symmetric positive definite.
  const Eigen::LLT<Matrix> llt(normal);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("update_a: normal matrix is not positive definite");
  }
  return llt.solve(rhs.transpose()).transpose();
}

Matrix update_b(const AdmmState& s, const TrainingData& data,
                const SolverConfig& cfg) {
  const Eigen::Index d = s.a.cols();
  require_state_shape(s, data.stocks(), data.words(), d);
  linalg::SylvesterProblem p;
  p.a = (s.a.transpose() * s.a) / cfg.rho;
  p.b = data.y_yt();
  p.c = (s.a.transpose() * data.r_yt() - s.d) / cfg.rho + s.w;
  p.b_schur = data.y_yt_schur();
  return linalg::solve_sylvester(p);
}

Matrix update_u(const AdmmState& s, const SolverConfig& cfg) {
  return prox::nonneg_project(s.a + s.c / cfg.rho);
}

Matrix update_w(const AdmmState& s, const SolverConfig& cfg) {
  const prox::ProxParams params{cfg.lambda, cfg.mu, cfg.rho};
  Matrix w(s.b.rows(), s.b.cols());
  for (Eigen::Index j = 0; j < s.b.cols(); ++j) {
    w.col(j) = prox::sparse_group_prox(s.b.col(j) + s.d.col(j) / cfg.rho, params);
  }
  return w;
}

std::pair<Matrix, Matrix> update_duals(const AdmmState& s, const SolverConfig& cfg) {
  return {s.c + cfg.rho * (s.a - s.u), s.d + cfg.rho * (s.b - s.w)};
}

void step(AdmmState& s, const TrainingData& data, const SolverConfig& cfg) {
  const Matrix u_prev = s.u;
  const Matrix w_prev = s.w;
  s.a = update_a(s, data, cfg);
  s.b = update_b(s, data, cfg);
  s.u = update_u(s, cfg);
  s.w = update_w(s, cfg);
  auto [c, d] = update_duals(s, cfg);
  s.c = std::move(c);
  s.d = std::move(d);
  ++s.iter;

  if (!all_finite(s)) {
    std::ostringstream msg;
    msg << "ADMM diverged: non-finite iterate at iteration " << s.iter;
    throw DivergenceError(msg.str(), s.iter);
  }

  IterationRecord rec;
  rec.iter = s.iter;
  rec.objective = objective(data.returns(), data.intensity(), s.u, s.w, cfg);
  rec.primal_a = relative_gap(s.a, s.u);
  rec.primal_b = relative_gap(s.b, s.w);
  rec.change_u = relative_gap(u_prev, s.u);
  rec.change_w = relative_gap(w_prev, s.w);
  s.history.push_back(rec);
}

FitResult fit(const TrainingData& data, const SolverConfig& cfg) {
  cfg.validate();
  AdmmState s = initial_state(data.stocks(), data.words(), cfg);
  s.history.reserve(static_cast<std::size_t>(cfg.max_iters));
  while (s.iter < cfg.max_iters) {
    step(s, data, cfg);
    const IterationRecord& last = s.history.back();
    // Without the change test an unregularized run stops on its first step,
    // where A = U and B = W hold exactly.
    if (last.primal_a < cfg.tol_primal && last.primal_b < cfg.tol_primal &&
        last.change_u < cfg.tol_primal && last.change_w < cfg.tol_primal) {
      s.converged = true;
      break;
    }
  }
  FactorModel model{s.u, s.w};
  return {std::move(model), std::move(s)};
}

FitResult fit(const Matrix& r, const Matrix& y, const SolverConfig& cfg) {
  cfg.validate();
  return fit(TrainingData(r, y), cfg);
}

}  // namespace newsfactor::admm
