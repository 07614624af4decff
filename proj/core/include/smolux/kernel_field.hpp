#ifndef SMOLUX_KERNEL_FIELD_HPP_
#define SMOLUX_KERNEL_FIELD_HPP_

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "smolux/mass_measure.hpp"

namespace smolux {

enum class ExtensionPolicy { kClamp, kWrap };

// Finite box [0, L)^dim sampled at n_x nodes per axis, spacing h = L/n_x.
// Node i sits at coordinate i*h. Points outside the box are mapped by the
// extension policy: clamp projects each coordinate into [0, L-h] (so the
// boundary value continues flat), wrap reduces modulo L.
struct SpatialGrid {
  int dim = 1;
  int n_x = 2;        // per-axis node count
  double extent = 1.0;  // per-axis box length L
  ExtensionPolicy policy = ExtensionPolicy::kClamp;

  double spacing() const { return extent / n_x; }
  std::size_t n_sites() const {
    std::size_t s = 1;
    for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(n_x);
    return s;
  }
  bool operator==(const SpatialGrid& o) const {
    return dim == o.dim && n_x == o.n_x && extent == o.extent &&
           policy == o.policy;
  }
};

// Dense density table f(x; y) on spatial grid x mass bins. The value at
// (site, mass bin k) is the density of the measure against w_k, so the
// field norm below realizes sup_x ess-sup_y |f|.
class KernelField {
 public:
  KernelField(SpatialGrid grid, BaseMeasure base, double fill = 0.0);

  const SpatialGrid& grid() const { return grid_; }
  const BaseMeasure& base() const { return base_; }
  int n_mass() const { return base_.n_mass(); }
  std::size_t n_sites() const { return grid_.n_sites(); }

  double& at(std::size_t site, int k) { return values_[site * n_mass() + k]; }
  double at(std::size_t site, int k) const {
    return values_[site * n_mass() + k];
  }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  // Site <-> integer coordinates, row-major with axis 0 outermost.
  std::size_t site_index(const std::array<int, 3>& ix) const;
  std::array<int, 3> site_coords(std::size_t site) const;
  std::array<double, 3> node_position(std::size_t site) const;

  // Multilinear interpolation at an arbitrary point; exact at nodes and
  // bounded by the surrounding corner values, which keeps the transport
  // estimator's pathwise decay bound intact.
  double eval(const std::array<double, 3>& point, int k) const;

  bool same_shape(const KernelField& o) const {
    return grid_ == o.grid_ && base_.grid() == o.base_.grid();
  }

 private:
  SpatialGrid grid_;
  BaseMeasure base_;
  std::vector<double> values_;
};

// max |f| over all entries; 0 for the zero field.
double norm(const KernelField& field);

// smallest entry; 0 for the zero field. Certifies nonnegativity of outputs.
double min_value(const KernelField& field);

KernelField scale(double alpha, const KernelField& x);
KernelField axpy(double alpha, const KernelField& x, const KernelField& y);

// Largest |f(x;.) - f(x';.)| over node pairs with Euclidean distance <= delta
// (in-box pairs only; the policy extension is flat or periodic and adds no
// new increments). Diagnostic for the uniform-in-mass spatial modulus.
double equicontinuity_modulus(const KernelField& field, double delta);

// Flat binary snapshot: header (i32 dim, i32 n_x per axis, i32 n_mass,
// f64 unit, f64 extent, u8 policy), then row-major f64 values with the
// spatial index outer and the mass index inner.
void save_snapshot(const KernelField& field, const std::string& path);
KernelField load_snapshot(const std::string& path, const BaseMeasure& base);

}  // namespace smolux

#endif  // SMOLUX_KERNEL_FIELD_HPP_
