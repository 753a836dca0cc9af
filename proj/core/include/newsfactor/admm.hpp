#pragma once

// Sparse factorization of daily returns against news word intensities:
//
//   minimize_{U >= 0, W}  1/2 ||R - U W Y||_F^2
//                         + lambda * sum_j ||W_j||_2 + mu * ||W||_1
//
// solved by ADMM on the split A = U, B = W. Each iteration performs six
// updates in fixed order: A (closed form), B (Sylvester solve), U
// (nonnegative projection), W (column-wise sparse group prox), then the dual
// ascent steps for C and D.

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "newsfactor/linalg.hpp"

namespace newsfactor::admm {

using Matrix = Eigen::MatrixXd;

struct SolverConfig {
  int d = 10;               // latent factors
  double lambda = 1e-3;     // group (column) lasso weight
  double mu = 1e-4;         // elementwise lasso weight
  double rho = 0.01;        // augmented Lagrangian penalty, fixed
  int max_iters = 500;
  double tol_primal = 1e-4;  // relative primal residuals and iterate changes
  std::uint64_t seed = 0;

  /// Throws ConfigError when any field is out of range.
  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;  // evaluated at (U, W)
  double primal_a = 0.0;   // ||A - U||_F / max(1, ||U||_F)
  double primal_b = 0.0;   // ||B - W||_F / max(1, ||W||_F)
  double change_u = 0.0;   // ||U - U_prev||_F / max(1, ||U||_F)
  double change_w = 0.0;   // ||W - W_prev||_F / max(1, ||W||_F)
};

struct AdmmState {
  Matrix a;  // n x d, auxiliary copy of U
  Matrix b;  // d x m, auxiliary copy of W
  Matrix u;  // n x d, nonnegative
  Matrix w;  // d x m
  Matrix c;  // n x d, multiplier for A = U
  Matrix d;  // d x m, multiplier for B = W
  int iter = 0;
  bool converged = false;
  std::vector<IterationRecord> history;
};

struct FactorModel {
  Matrix u;  // n x d stock factors, nonnegative
  Matrix w;  // d x m word-to-factor mapping

  Eigen::Index stocks() const { return u.rows(); }
  Eigen::Index factors() const { return u.cols(); }
  Eigen::Index words() const { return w.cols(); }
};

/// R (n x s) and Y (m x s) together with the products that stay fixed for the
/// whole fit: R Y', Y Y' and the Schur factors of Y Y'.
class TrainingData {
 public:
  TrainingData(Matrix returns, Matrix intensity);

  const Matrix& returns() const { return r_; }
  const Matrix& intensity() const { return y_; }
  const Matrix& r_yt() const { return r_yt_; }
  const Matrix& y_yt() const { return y_yt_; }
  const std::shared_ptr<const linalg::SchurFactors>& y_yt_schur() const {
    return y_yt_schur_;
  }

  Eigen::Index stocks() const { return r_.rows(); }
  Eigen::Index words() const { return y_.rows(); }
  Eigen::Index days() const { return r_.cols(); }

 private:
  Matrix r_;
  Matrix y_;
  Matrix r_yt_;
  Matrix y_yt_;
  std::shared_ptr<const linalg::SchurFactors> y_yt_schur_;
};

/// 1/2 ||R - U W Y||_F^2 + lambda sum_j ||W_j||_2 + mu ||W||_1.
double objective(const Matrix& r, const Matrix& y, const Matrix& u,
                 const Matrix& w, const SolverConfig& cfg);

/// L_rho(A, B, U, W, C, D); +infinity when U has a negative entry.
double augmented_lagrangian(const TrainingData& data, const AdmmState& state,
                            const SolverConfig& cfg);

/// U = A ~ uniform[0, 1) / sqrt(d) from the seeded generator; B = W = C = D = 0.
AdmmState initial_state(Eigen::Index stocks, Eigen::Index words,
                        const SolverConfig& cfg);

/// argmin_A L_rho = (R Y' B' - C + rho U)(B Y Y' B' + rho I)^{-1}.
Matrix update_a(const AdmmState& state, const TrainingData& data,
                const SolverConfig& cfg);

/// Solves (A'A / rho) B (Y Y') + B = (A' R Y' - D) / rho + W.
Matrix update_b(const AdmmState& state, const TrainingData& data,
                const SolverConfig& cfg);

/// (A + C / rho)^+.
Matrix update_u(const AdmmState& state, const SolverConfig& cfg);

/// Column j becomes sparse_group_prox(B_j + D_j / rho, {lambda, mu, rho}).
Matrix update_w(const AdmmState& state, const SolverConfig& cfg);

/// (C + rho (A - U), D + rho (B - W)).
std::pair<Matrix, Matrix> update_duals(const AdmmState& state,
                                       const SolverConfig& cfg);

/// Runs one full A, B, U, W, C, D sweep in place and appends a history record.
void step(AdmmState& state, const TrainingData& data, const SolverConfig& cfg);

struct FitResult {
  FactorModel model;
  AdmmState state;
};

/// Iterates until both relative primal residuals and the relative changes of
/// U and W fall below cfg.tol_primal, or cfg.max_iters sweeps ran. Throws DivergenceError on non-finite iterates.
FitResult fit(const TrainingData& data, const SolverConfig& cfg);
FitResult fit(const Matrix& r, const Matrix& y, const SolverConfig& cfg);

}  // namespace newsfactor::admm
