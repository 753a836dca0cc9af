#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these call into the code they are used to check.

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "newsfactor/admm.hpp"
#include "newsfactor/linalg.hpp"
#include "newsfactor/prox.hpp"

namespace newsfactor::testing {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                double scale = 1.0);

/// Minimizes lambda||u|| + mu||u||_1 + rho/2 ||u - v||^2 by subgradient
/// descent with step 1/(rho k), starting from 0.
Vector prox_subgradient_oracle(const Vector& v, const prox::ProxParams& p,
                               int iterations = 100000);

/// Largest violation of 0 in dF(u). For u != 0: nonzero coordinates must zero
/// the gradient, zero coordinates need |rho v_i| <= mu. For u = 0 the
/// soft-thresholded group norm must not exceed lambda.
double prox_certificate(const Vector& u, const Vector& v, const prox::ProxParams& p);

/// Real roots of det(m - x I) for a symmetric m, by sign scanning and
/// bisection inside the Gershgorin interval.
std::vector<double> symmetric_eigenvalues_by_bisection(const Matrix& m);

/// L_rho written out term by term.
double lagrangian(const Matrix& r, const Matrix& y, const admm::AdmmState& s,
                  const admm::SolverConfig& cfg);

/// Central-difference gradient of L_rho with respect to A (which = 'a') or
/// B (which = 'b') at the given state.
Matrix lagrangian_gradient_fd(const Matrix& r, const Matrix& y, const admm::AdmmState& s,
                              const admm::SolverConfig& cfg, char which, double h = 1e-6);

/// Random ADMM state with U >= 0 for the given shapes.
admm::AdmmState random_state(std::mt19937_64& rng, Eigen::Index n, Eigen::Index m,
                             Eigen::Index d);

/// Real Schur form has a 2x2 block.
bool has_complex_block(const Matrix& t);

/// Random Sylvester instance whose eigenvalue products stay away from -1.
linalg::SylvesterProblem random_sylvester(std::mt19937_64& rng, Eigen::Index d, Eigen::Index s);

/// Coefficients a_1..a_p of x_t = sum a_k x_{t-k} whose characteristic roots
/// are the given conjugate pairs r e^{+-i theta}.
Vector ar_coefficients_from_roots(const std::vector<std::pair<double, double>>& pairs);

}  // namespace newsfactor::testing
