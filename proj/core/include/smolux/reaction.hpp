#ifndef SMOLUX_REACTION_HPP_
#define SMOLUX_REACTION_HPP_

#include <optional>
#include <vector>

#include "smolux/mass_measure.hpp"

namespace smolux {

// What to do with coagulation products heavier than the top bin.
// drop discards them, absorb_top adds a (i+j)/n_mass-scaled lump to the top
// bin (first moment preserved), cutoff excludes the pairs entirely (they
// belong to the scattering channel), extend keeps them as plain measure
// masses in the MassFlux tail (diagnostics; not density-representable).
enum class OverflowPolicy { kDrop, kAbsorbTop, kCutoff, kExtend };

// Reaction output: signed density on the grid bins plus, under extend, the
// measure masses that landed above the top bin (bin n_mass + 1 onward).
struct MassFlux {
  std::vector<double> density;
  std::vector<double> tail;
};

// First moment including the tail mass.
double first_moment(const MassFlux& flux, const BaseMeasure& base);

// Symmetric bounded table K(y, y'), optionally with the maximum-mass cutoff
// bin used by the scattering channel.
class CoagKernel {
 public:
  static CoagKernel constant(int n_mass, double value);
  // table is row-major n x n, validated symmetric and nonnegative
  static CoagKernel from_table(int n_mass, std::vector<double> table);

  double operator()(int i, int j) const {  // 1-based bins
    return table_[(i - 1) * n_mass_ + (j - 1)];
  }
  int n_mass() const { return n_mass_; }
  double bound() const { return bound_M_; }
  std::optional<int> cutoff() const { return cutoff_y0_; }
  void set_cutoff(int y0);

 private:
  CoagKernel(int n_mass, std::vector<double> table);
  int n_mass_ = 0;
  std::vector<double> table_;
  double bound_M_ = 0.0;
  std::optional<int> cutoff_y0_;
};

// Gain density plus the per-bin loss rate lambda_z = sum_i K(i, z) f_i w_i,
// so the full operator row is gain_z - lambda_z f_z. The split form feeds
// the positivity-preserving fixed-point scheme, whose integrand is
// gain + (alpha - lambda) f.
struct CoagParts {
  MassFlux gain;
  std::vector<double> loss_rate;
};
CoagParts coag_parts(const CoagKernel& kernel, const std::vector<double>& f,
                     const BaseMeasure& base, OverflowPolicy overflow);
MassFlux coag_apply(const CoagKernel& kernel, const std::vector<double>& f,
                    const BaseMeasure& base, OverflowPolicy overflow);

// Both sides of the total-variation Lipschitz estimate for the coagulation
// operator. The printed form of the estimate carries constant M; the sharp
// elementary constant is (3/2)M (the gain contributes M/2 and the loss M,
// attained by monodisperse input against zero), so the check certifies the
// 3/2 form and reports the ratio against the plain-M form for reference.
struct TvLipschitzReport {
  double lhs = 0.0;          // |K(f,f) - K(g,g)|_TV, extended range
  double rhs_printed = 0.0;  // M (|f| + |g|) |f - g|
  double rhs_sharp = 0.0;    // 1.5 * rhs_printed
  bool pass = false;         // lhs <= rhs_sharp (1 + 1e-9)
};
TvLipschitzReport coag_tv_lipschitz_check(const CoagKernel& kernel,
                                          const std::vector<double>& f,
                                          const std::vector<double>& g,
                                          const BaseMeasure& base);

// Simultaneous coagulation of n particles, n = 2..n_max. Kernels are
// constants or separable products prod_i phi(y_i); anything richer for
// n >= 3 would need an n-way table, which the bound structure never uses.
class MultiCoagKernel {
 public:
  explicit MultiCoagKernel(int n_mass) : n_mass_(n_mass) {}
  void add_constant(int order, double kappa);
  void add_separable(int order, std::vector<double> phi);  // phi per bin
  int n_mass() const { return n_mass_; }
  double bound() const { return bound_M_; }
  int max_order() const;

  struct Term {
    int order = 2;
    double kappa = 0.0;          // constant value, or 1 for separable
    std::vector<double> phi;     // empty for constant terms
  };
  const std::vector<Term>& terms() const { return terms_; }

 private:
  int n_mass_;
  std::vector<Term> terms_;
  double bound_M_ = 0.0;
};

struct MultiCoagParts {
  MassFlux gain;
  std::vector<double> loss_rate;
};
MultiCoagParts multi_coag_parts(const MultiCoagKernel& kernels,
                                const std::vector<double>& f,
                                const BaseMeasure& base,
                                OverflowPolicy overflow);
MassFlux multi_coag_apply(const MultiCoagKernel& kernels,
                          const std::vector<double>& f,
                          const BaseMeasure& base, OverflowPolicy overflow);

// Mass y breaks at rate B(y) into fragments distributed with density
// frag(y; z) against the base weights, supported on z < y and carrying the
// whole mass back: sum_z mass(z) frag(y;z) w_z = mass(y) for every rated y.
class Fragmentation {
 public:
  // F(k; {j}) = 2/(k-1) for j < k: exact mass balance on integer bins
  static Fragmentation uniform_binary(const BaseMeasure& base,
                                      std::vector<double> rates);
  static Fragmentation from_tables(const BaseMeasure& base,
                                   std::vector<double> rates,
                                   std::vector<double> frag_density);

  double rate(int y) const { return rates_[y - 1]; }  // 1-based
  double density(int y, int z) const {
    return density_[(y - 1) * n_mass_ + (z - 1)];
  }
  int n_mass() const { return n_mass_; }
  double sup_rate() const { return sup_rate_; }
  double sup_density() const { return sup_density_; }
  // the smallness condition against the transport decay floor:
  // sup_B (1 + sup_f) < eps
  bool condition_holds(double eps_floor) const {
    return sup_rate_ * (1.0 + sup_density_) < eps_floor;
  }

 private:
  Fragmentation(const BaseMeasure& base, std::vector<double> rates,
                std::vector<double> frag_density);
  int n_mass_ = 0;
  std::vector<double> rates_;
  std::vector<double> density_;
  double sup_rate_ = 0.0;
  double sup_density_ = 0.0;
};

std::vector<double> fragmentation_apply(const Fragmentation& frag,
                                        const std::vector<double>& f,
                                        const BaseMeasure& base);

// Redistribution of coagulation products that exceed the top admissible
// mass y0: a crossing pair (i, j) reacts at rate K(i,j) f_i f_j w_i w_j,
// its mass i+j re-enters as the measure S(i+j; dz) on bins <= y0 and both
// parents are lost. Rows cover a = y0+1 .. 2 y0.
class Scattering {
 public:
  // two fragments floor(a/2), ceil(a/2): integer-exact mass balance
  static Scattering half_split(int y0);
  // flat measure on 1..y0 scaled to carry mass a
  static Scattering uniform(int y0);
  static Scattering from_table(int y0, std::vector<double> table);

  double s(int a, int z) const {  // measure mass of S(a; {z})
    return table_[(a - y0_ - 1) * y0_ + (z - 1)];
  }
  int y0() const { return y0_; }
  // sum_z mass(z) S(a;z) = mass(a) for every row, to 1e-10 relative
  bool mass_conserving() const { return mass_conserving_; }

 private:
  Scattering(int y0, std::vector<double> table);
  int y0_ = 0;
  std::vector<double> table_;
  bool mass_conserving_ = false;
};

// The formula carries no 1/2 symmetrization factor (each ordered pair
// counts once on each side); symmetrize halves the whole operator for
// callers who want the paired convention.
std::vector<double> scattering_apply(const Scattering& scat,
                                     const CoagKernel& kernel,
                                     const std::vector<double>& f,
                                     const BaseMeasure& base,
                                     bool symmetrize = false);
struct ScatteringParts {
  std::vector<double> gain;
  std::vector<double> loss_rate;
};
ScatteringParts scattering_parts(const Scattering& scat,
                                 const CoagKernel& kernel,
                                 const std::vector<double>& f,
                                 const BaseMeasure& base,
                                 bool symmetrize = false);

// Exact max over z of sum_{i,j <= y0, i+j > y0} S(i+j; z) w_i w_j / w_z.
double certify_scattering(const Scattering& scat, const BaseMeasure& base);

// Everything the solver applies sitewise, with the loss split needed by the
// positivity scheme.
struct ReactionModel {
  std::optional<CoagKernel> coag;
  std::optional<MultiCoagKernel> multi;
  std::optional<Fragmentation> frag;
  std::optional<Scattering> scat;
  OverflowPolicy overflow = OverflowPolicy::kAbsorbTop;
  bool symmetrize_scattering = false;

  double bound_M() const;  // sup of all coagulation kernels, 0 when none
  bool empty() const { return !coag && !multi && !frag && !scat; }

  struct Parts {
    std::vector<double> gain;
    std::vector<double> loss_rate;
  };
  Parts parts_row(const std::vector<double>& f, const BaseMeasure& base) const;
  std::vector<double> apply_row(const std::vector<double>& f,
                                const BaseMeasure& base) const;
  // upper bound for the loss rate when the density stays below z_ref;
  // sizes the positivity shift alpha
  double loss_rate_bound(double z_ref, const BaseMeasure& base) const;
};

}  // namespace smolux

#endif  // SMOLUX_REACTION_HPP_
