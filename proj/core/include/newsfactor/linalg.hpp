#pragma once

// Dense kernels for the generalized Sylvester equation A X B + X = C.
//
// The solver follows the Hessenberg-Schur approach: A is reduced to upper
// Hessenberg form H = Qa' A Qa, B' is reduced to real Schur form
// S = Qb' B' Qb, the transformed system H Y S' + Y = F is solved column by
// column from the right, and X = Qa Y Qb' is recovered. Because the Schur
// factors of B' do not depend on A or C they can be computed once and reused.

#include <memory>
#include <string_view>

#include <Eigen/Dense>

namespace newsfactor::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Orthogonal similarity t = q' a q. `t` is upper Hessenberg or quasi upper
/// triangular depending on the producer.
struct SchurFactors {
  Matrix q;
  Matrix t;
};

/// Throws DataError if any entry of `m` is NaN or infinite.
void require_finite(const Matrix& m, std::string_view name);

/// Householder reduction to upper Hessenberg form. Entries below the first
/// subdiagonal of the result are exactly zero.
SchurFactors hessenberg_reduce(const Matrix& a);

/// Real Schur decomposition by Hessenberg reduction followed by Francis
/// double-shift QR with deflation. Diagonal blocks are 1x1, or 2x2 for complex
/// conjugate eigenvalue pairs; every other subdiagonal entry is exactly zero.
/// Throws ConvergenceError after 30*n QR sweeps.
SchurFactors real_schur(const Matrix& b);

/// Schur factors of b', the form consumed by solve_sylvester and
/// back_substitute. Equal to real_schur(b) when b is symmetric.
SchurFactors sylvester_schur(const Matrix& b);

struct SylvesterProblem {
  Matrix a;  // d x d
  Matrix b;  // s x s
  Matrix c;  // d x s
  // Optional result of sylvester_schur(b), shared across solves.
  std::shared_ptr<const SchurFactors> b_schur;
};

/// Solves A X B + X = C. Throws DimensionError on non-conformable input and
/// SingularityError when some eigenvalue product lambda_i(A) * lambda_j(B)
/// is (numerically) -1.
Matrix solve_sylvester(const SylvesterProblem& p);

/// Solves H Y S' + Y = F for Y, with H upper Hessenberg (d x d) and S quasi
/// upper triangular (s x s). Columns are resolved from last to first; a 2x2
/// diagonal block of S couples two columns, which are then solved together.
Matrix back_substitute(const Matrix& h, const Matrix& s, const Matrix& f);

/// Reference solver: (B' kron A + I) vec(X) = vec(C) by dense LU.
/// Requires d * s <= kMaxOracleUnknowns.
Matrix kronecker_oracle(const SylvesterProblem& p);
inline constexpr Eigen::Index kMaxOracleUnknowns = 400;

/// Gaussian elimination with partial pivoting for a dense square system.
/// A pivot smaller than 1e-12 times the largest entry of its original row is
/// treated as singular; `context` is prefixed to the resulting error message.
Vector gauss_solve(Matrix m, Vector rhs, std::string_view context);

}  // namespace newsfactor::linalg
