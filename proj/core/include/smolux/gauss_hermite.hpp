#ifndef SMOLUX_GAUSS_HERMITE_HPP_
#define SMOLUX_GAUSS_HERMITE_HPP_

#include <vector>

namespace smolux {

// Nodes and weights for integrals against exp(-z^2) on the real line:
// integral of exp(-z^2) h(z) dz ~ sum_i weights[i] * h(nodes[i]).
// For Z ~ N(0,1): E[g(Z)] = pi^{-1/2} sum_i weights[i] * g(sqrt(2) nodes[i]).
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Golub-Welsch on the symmetric tridiagonal Jacobi matrix; exact for
// polynomials of degree 2*order - 1.
GaussHermite gauss_hermite(int order);

}  // namespace smolux

#endif  // SMOLUX_GAUSS_HERMITE_HPP_
