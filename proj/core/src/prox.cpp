#include "newsfactor/prox.hpp"

#include <cmath>

#include "newsfactor/error.hpp"

namespace newsfactor::prox {

void ProxParams::validate() const {
  if (!(lambda >= 0.0) || !(mu >= 0.0) || !(rho > 0.0) || !std::isfinite(lambda) ||
      !std::isfinite(mu) || !std::isfinite(rho)) {
    throw ConfigError("prox parameters require lambda >= 0, mu >= 0, rho > 0");
  }
}

Eigen::VectorXd sparse_group_prox(const Eigen::Ref<const Eigen::VectorXd>& v,
                                  const ProxParams& params) {
  params.validate();
  const double cut = params.mu / params.rho;
  // w_i = rho * sgn(v_i) * (|v_i| - mu/rho)^+, with sgn(0) = 0.
  Eigen::VectorXd w(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v(i)) - cut;
    w(i) = mag > 0.0 ? params.rho * std::copysign(mag, v(i)) : 0.0;
  }
  const double norm = w.norm();
  if (norm <= params.lambda) return Eigen::VectorXd::Zero(v.size());
  return ((norm - params.lambda) / (params.rho * norm)) * w;
}

double sparse_group_objective(const Eigen::Ref<const Eigen::VectorXd>& u,
                              const Eigen::Ref<const Eigen::VectorXd>& v,
                              const ProxParams& params) {
  return params.lambda * u.norm() + params.mu * u.lpNorm<1>() +
         0.5 * params.rho * (u - v).squaredNorm();
}

Eigen::MatrixXd nonneg_project(const Eigen::Ref<const Eigen::MatrixXd>& a) {
  return a.cwiseMax(0.0);
}

}  // namespace newsfactor::prox
