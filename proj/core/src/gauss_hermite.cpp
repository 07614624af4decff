#include "smolux/gauss_hermite.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "smolux/errors.hpp"

namespace smolux {

GaussHermite gauss_hermite(int order) {
  if (order < 1) throw ConfigError("gauss_hermite: order must be >= 1");
  const double root_pi = std::sqrt(3.14159265358979323846);
  GaussHermite out;
  if (order == 1) {
    out.nodes = {0.0};
    out.weights = {root_pi};
    return out;
  }
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(order, order);
  for (int i = 1; i < order; ++i) {
    const double beta = std::sqrt(i / 2.0);
    jac(i, i - 1) = beta;
    jac(i - 1, i) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  out.nodes.resize(order);
  out.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    out.nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    out.weights[i] = root_pi * v0 * v0;
  }
  return out;
}

}  // namespace smolux
