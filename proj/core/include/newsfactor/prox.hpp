#pragma once

#include <Eigen/Dense>

namespace newsfactor::prox {

/// Weights of F(u) = lambda ||u||_2 + mu ||u||_1 + rho/2 ||u - v||_2^2.
struct ProxParams {
  double lambda = 0.0;
  double mu = 0.0;
  double rho = 1.0;

  /// Throws ConfigError unless lambda >= 0, mu >= 0 and rho > 0.
  void validate() const;
};

/// Closed-form minimizer of F for a given v: soft-threshold v elementwise at
/// mu/rho, then shrink the resulting group toward zero by lambda. Returns the
/// zero vector whenever the thresholded group norm does not exceed lambda.
Eigen::VectorXd sparse_group_prox(const Eigen::Ref<const Eigen::VectorXd>& v,
                                  const ProxParams& params);

/// Value of F at u, used by tests and diagnostics.
double sparse_group_objective(const Eigen::Ref<const Eigen::VectorXd>& u,
                              const Eigen::Ref<const Eigen::VectorXd>& v,
                              const ProxParams& params);

/// Euclidean projection onto the nonnegative orthant (elementwise max(x, 0)).
Eigen::MatrixXd nonneg_project(const Eigen::Ref<const Eigen::MatrixXd>& a);

}  // namespace newsfactor::prox
