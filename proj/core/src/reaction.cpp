#include "smolux/reaction.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "smolux/errors.hpp"

namespace smolux {
namespace {

double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

// bins add: (a*b)_k = sum_{i+j=k} a_i b_j, output covers bins 1..La+Lb
std::vector<double> conv_grow(const std::vector<double>& a,
                              const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size(), 0.0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    const double ai = a[i - 1];
    if (ai == 0.0) continue;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      out[i + j - 1] += ai * b[j - 1];
    }
  }
  return out;
}

}  // namespace

double first_moment(const MassFlux& flux, const BaseMeasure& base) {
  double m = first_moment(flux.density, base);
  const int n = base.n_mass();
  for (std::size_t k = 0; k < flux.tail.size(); ++k) {
    m += base.grid().mass(n + 1 + static_cast<int>(k)) * flux.tail[k];
  }
  return m;
}

CoagKernel::CoagKernel(int n_mass, std::vector<double> table)
    : n_mass_(n_mass), table_(std::move(table)) {
  if (n_mass_ < 1) throw ConfigError("coagulation kernel needs n_mass >= 1");
  if (table_.size() != static_cast<std::size_t>(n_mass_) * n_mass_) {
    throw ConfigError("coagulation table must be n_mass x n_mass");
  }
  for (int i = 0; i < n_mass_; ++i) {
    for (int j = 0; j < n_mass_; ++j) {
      const double v = table_[i * n_mass_ + j];
      if (!(v >= 0.0)) {
        throw ConfigError("coagulation rate at (" + std::to_string(i + 1) +
                          ", " + std::to_string(j + 1) +
                          ") must be finite and nonnegative");
      }
      if (v != table_[j * n_mass_ + i]) {
        throw ConfigError("coagulation table must be symmetric; entry (" +
                          std::to_string(i + 1) + ", " + std::to_string(j + 1) +
                          ") differs from its transpose");
      }
      bound_M_ = std::max(bound_M_, v);
    }
  }
}

CoagKernel CoagKernel::constant(int n_mass, double value) {
  if (!(value >= 0.0)) {
    throw ConfigError("constant coagulation rate must be nonnegative");
  }
  return CoagKernel(n_mass,
                    std::vector<double>(static_cast<std::size_t>(n_mass) *
                                            static_cast<std::size_t>(n_mass),
                                        value));
}

CoagKernel CoagKernel::from_table(int n_mass, std::vector<double> table) {
  return CoagKernel(n_mass, std::move(table));
}

void CoagKernel::set_cutoff(int y0) {
  if (y0 < 1 || y0 > n_mass_) {
    throw ConfigError("cutoff mass must lie within the grid");
  }
  cutoff_y0_ = y0;
}

CoagParts coag_parts(const CoagKernel& kernel, const std::vector<double>& f,
                     const BaseMeasure& base, OverflowPolicy overflow) {
  const int n = base.n_mass();
  if (kernel.n_mass() != n) {
    throw ConfigError("coagulation kernel and base measure grids differ");
  }
  if (f.size() != static_cast<std::size_t>(n)) {
    throw ConfigError("density length must equal n_mass");
  }
  const bool cut = overflow == OverflowPolicy::kCutoff;
  int y0 = n;
  if (cut) {
    if (!kernel.cutoff()) {
      throw ConfigError("cutoff overflow needs a kernel cutoff mass");
    }
    y0 = *kernel.cutoff();
  }

  CoagParts out;
  out.gain.density.assign(n, 0.0);
  if (overflow == OverflowPolicy::kExtend) out.gain.tail.assign(n, 0.0);
  out.loss_rate.assign(n, 0.0);

  // Ordered pairs at half weight; each unordered pair is counted twice so
  // the net gain carries the conventional 1/2.
  for (int i = 1; i <= n; ++i) {
    const double fi = f[i - 1];
    if (fi == 0.0) continue;
    const double wi = base.weight(i);
    for (int j = 1; j <= n; ++j) {
      const double fj = f[j - 1];
      if (fj == 0.0) continue;
      const double rate = 0.5 * kernel(i, j) * fi * fj * wi * base.weight(j);
      if (rate == 0.0) continue;
      const int a = i + j;
      if (cut) {
        if (a <= y0) out.gain.density[a - 1] += rate / base.weight(a);
        continue;  // crossing pairs belong to the scattering channel
      }
      if (a <= n) {
        out.gain.density[a - 1] += rate / base.weight(a);
        continue;
      }
      switch (overflow) {
        case OverflowPolicy::kDrop:
          break;
        case OverflowPolicy::kAbsorbTop:
          // lump scaled by a/n so the first moment is preserved
          out.gain.density[n - 1] +=
              rate * (static_cast<double>(a) / n) / base.weight(n);
          break;
        case OverflowPolicy::kExtend:
          out.gain.tail[a - n - 1] += rate;
          break;
        case OverflowPolicy::kCutoff:
          break;  // unreachable, handled above
      }
    }
  }

  for (int z = 1; z <= n; ++z) {
    // under the cutoff only partners with i + z <= y0 react
    const int i_max = cut ? y0 - z : n;
    double lam = 0.0;
    for (int i = 1; i <= i_max; ++i) {
      lam += kernel(i, z) * f[i - 1] * base.weight(i);
    }
    out.loss_rate[z - 1] = lam;
  }
  return out;
}

MassFlux coag_apply(const CoagKernel& kernel, const std::vector<double>& f,
                    const BaseMeasure& base, OverflowPolicy overflow) {
  CoagParts parts = coag_parts(kernel, f, base, overflow);
  MassFlux out = std::move(parts.gain);
  for (int z = 0; z < base.n_mass(); ++z) {
    out.density[z] -= parts.loss_rate[z] * f[z];
  }
  return out;
}

TvLipschitzReport coag_tv_lipschitz_check(const CoagKernel& kernel,
                                          const std::vector<double>& f,
                                          const std::vector<double>& g,
                                          const BaseMeasure& base) {
  // extend keeps every product bin, so the difference is measured in full
  const MassFlux kf = coag_apply(kernel, f, base, OverflowPolicy::kExtend);
  const MassFlux kg = coag_apply(kernel, g, base, OverflowPolicy::kExtend);

  TvLipschitzReport rep;
  const int n = base.n_mass();
  for (int z = 0; z < n; ++z) {
    rep.lhs += std::abs(kf.density[z] - kg.density[z]) * base.weight(z + 1);
  }
  for (std::size_t k = 0; k < kf.tail.size(); ++k) {
    rep.lhs += std::abs(kf.tail[k] - kg.tail[k]);
  }

  std::vector<double> diff(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) diff[k] = f[k] - g[k];
  rep.rhs_printed =
      kernel.bound() * (tv_norm(f, base) + tv_norm(g, base)) *
      tv_norm(diff, base);
  rep.rhs_sharp = 1.5 * rep.rhs_printed;
  rep.pass = rep.lhs <= rep.rhs_sharp * (1.0 + 1e-9);
  return rep;
}

void MultiCoagKernel::add_constant(int order, double kappa) {
  if (order < 2 || order > 8) {
    throw ConfigError("simultaneous coagulation order must be in [2, 8]");
  }
  if (!(kappa >= 0.0)) {
    throw ConfigError("simultaneous coagulation rate must be nonnegative");
  }
  terms_.push_back(Term{order, kappa, {}});
  bound_M_ = std::max(bound_M_, kappa);
}

void MultiCoagKernel::add_separable(int order, std::vector<double> phi) {
  if (order < 2 || order > 8) {
    throw ConfigError("simultaneous coagulation order must be in [2, 8]");
  }
  if (phi.size() != static_cast<std::size_t>(n_mass_)) {
    throw ConfigError("separable factor length must equal n_mass");
  }
  double phi_max = 0.0;
  for (double v : phi) {
    if (!(v >= 0.0)) {
      throw ConfigError("separable factor entries must be nonnegative");
    }
    phi_max = std::max(phi_max, v);
  }
  terms_.push_back(Term{order, 1.0, std::move(phi)});
  bound_M_ = std::max(bound_M_, std::pow(phi_max, order));
}

int MultiCoagKernel::max_order() const {
  int m = 0;
  for (const Term& t : terms_) m = std::max(m, t.order);
  return m;
}

MultiCoagParts multi_coag_parts(const MultiCoagKernel& kernels,
                                const std::vector<double>& f,
                                const BaseMeasure& base,
                                OverflowPolicy overflow) {
  const int n = base.n_mass();
  if (kernels.n_mass() != n) {
    throw ConfigError("simultaneous kernel and base measure grids differ");
  }
  if (f.size() != static_cast<std::size_t>(n)) {
    throw ConfigError("density length must equal n_mass");
  }
  if (overflow == OverflowPolicy::kCutoff) {
    throw ConfigError(
        "cutoff overflow is only defined for the pair coagulation kernel");
  }

  MultiCoagParts out;
  out.gain.density.assign(n, 0.0);
  out.loss_rate.assign(n, 0.0);
  const int max_order = kernels.max_order();
  if (overflow == OverflowPolicy::kExtend && max_order >= 2) {
    out.gain.tail.assign(static_cast<std::size_t>(max_order) * n - n, 0.0);
  }

  for (const MultiCoagKernel::Term& term : kernels.terms()) {
    if (term.order == 2) {
      // route through the pair path so a two-body term and the equivalent
      // pair kernel agree to the last bit
      CoagKernel pair = term.phi.empty()
                            ? CoagKernel::constant(n, term.kappa)
                            : [&] {
                                std::vector<double> tab(
                                    static_cast<std::size_t>(n) * n);
                                for (int i = 0; i < n; ++i) {
                                  for (int j = 0; j < n; ++j) {
                                    tab[i * n + j] = term.phi[i] * term.phi[j];
                                  }
                                }
                                return CoagKernel::from_table(n,
                                                              std::move(tab));
                              }();
      CoagParts pp = coag_parts(pair, f, base, overflow);
      for (int z = 0; z < n; ++z) {
        out.gain.density[z] += pp.gain.density[z];
        out.loss_rate[z] += pp.loss_rate[z];
      }
      for (std::size_t k = 0; k < pp.gain.tail.size(); ++k) {
        out.gain.tail[k] += pp.gain.tail[k];
      }
      continue;
    }

    // measure masses of the reacting species
    std::vector<double> h(n);
    for (int k = 0; k < n; ++k) {
      h[k] = (term.phi.empty() ? 1.0 : term.phi[k]) * f[k] * base.weight(k + 1);
    }
    double s = 0.0;
    for (double v : h) s += v;

    std::vector<double> acc = h;
    for (int k = 2; k <= term.order; ++k) acc = conv_grow(acc, h);
    const double gain_factor = term.kappa / factorial(term.order);
    for (std::size_t a = 2; a <= acc.size(); ++a) {
      const double mass = gain_factor * acc[a - 1];
      if (mass == 0.0) continue;
      if (a <= static_cast<std::size_t>(n)) {
        out.gain.density[a - 1] += mass / base.weight(static_cast<int>(a));
        continue;
      }
      switch (overflow) {
        case OverflowPolicy::kDrop:
          break;
        case OverflowPolicy::kAbsorbTop:
          out.gain.density[n - 1] +=
              mass * (static_cast<double>(a) / n) / base.weight(n);
          break;
        case OverflowPolicy::kExtend:
          out.gain.tail[a - n - 1] += mass;
          break;
        case OverflowPolicy::kCutoff:
          break;  // rejected above
      }
    }

    const double loss_factor =
        term.kappa * std::pow(s, term.order - 1) / factorial(term.order - 1);
    for (int z = 0; z < n; ++z) {
      out.loss_rate[z] += (term.phi.empty() ? 1.0 : term.phi[z]) * loss_factor;
    }
  }
  return out;
}

MassFlux multi_coag_apply(const MultiCoagKernel& kernels,
                          const std::vector<double>& f,
                          const BaseMeasure& base, OverflowPolicy overflow) {
  MultiCoagParts parts = multi_coag_parts(kernels, f, base, overflow);
  MassFlux out = std::move(parts.gain);
  for (int z = 0; z < base.n_mass(); ++z) {
    out.density[z] -= parts.loss_rate[z] * f[z];
  }
  return out;
}

Fragmentation::Fragmentation(const BaseMeasure& base,
                             std::vector<double> rates,
                             std::vector<double> frag_density)
    : n_mass_(base.n_mass()),
      rates_(std::move(rates)),
      density_(std::move(frag_density)) {
  if (rates_.size() != static_cast<std::size_t>(n_mass_)) {
    throw ConfigError("fragmentation rates length must equal n_mass");
  }
  if (density_.size() != static_cast<std::size_t>(n_mass_) * n_mass_) {
    throw ConfigError("fragment table must be n_mass x n_mass");
  }
  for (double r : rates_) {
    if (!(r >= 0.0)) {
      throw ConfigError("fragmentation rates must be finite and nonnegative");
    }
  }
  if (rates_[0] != 0.0) {
    throw ConfigError("the unit mass has nothing to fragment into");
  }
  for (double v : density_) {
    if (!(v >= 0.0)) {
      throw ConfigError("fragment densities must be finite and nonnegative");
    }
  }
  for (int y = 1; y <= n_mass_; ++y) {
    sup_rate_ = std::max(sup_rate_, rates_[y - 1]);
    if (rates_[y - 1] == 0.0) continue;
    double carried = 0.0;
    for (int z = 1; z <= n_mass_; ++z) {
      const double d = density_[(y - 1) * n_mass_ + (z - 1)];
      if (z >= y && d != 0.0) {
        throw ConfigError("fragments of mass " + std::to_string(y) +
                          " must be strictly lighter than the parent");
      }
      carried += base.grid().mass(z) * d * base.weight(z);
      sup_density_ = std::max(sup_density_, d);
    }
    const double want = base.grid().mass(y);
    if (std::abs(carried - want) > 1e-10 * want) {
      throw ConfigError("fragments of mass " + std::to_string(y) +
                        " carry " + std::to_string(carried) +
                        " instead of the parent mass");
    }
  }
}

Fragmentation Fragmentation::uniform_binary(const BaseMeasure& base,
                                            std::vector<double> rates) {
  const int n = base.n_mass();
  std::vector<double> density(static_cast<std::size_t>(n) * n, 0.0);
  for (int y = 2; y <= n; ++y) {
    // measure mass 2/(y-1) on each bin below y sums the parent mass exactly
    const double m = 2.0 / (y - 1);
    for (int z = 1; z < y; ++z) {
      density[(y - 1) * n + (z - 1)] = m / base.weight(z);
    }
  }
  return Fragmentation(base, std::move(rates), std::move(density));
}

Fragmentation Fragmentation::from_tables(const BaseMeasure& base,
                                         std::vector<double> rates,
                                         std::vector<double> frag_density) {
  return Fragmentation(base, std::move(rates), std::move(frag_density));
}

std::vector<double> fragmentation_apply(const Fragmentation& frag,
                                        const std::vector<double>& f,
                                        const BaseMeasure& base) {
  const int n = base.n_mass();
  if (frag.n_mass() != n) {
    throw ConfigError("fragmentation and base measure grids differ");
  }
  if (f.size() != static_cast<std::size_t>(n)) {
    throw ConfigError("density length must equal n_mass");
  }
  std::vector<double> out(n, 0.0);
  for (int y = 1; y <= n; ++y) {
    const double rate = frag.rate(y) * f[y - 1] * base.weight(y);
    if (rate == 0.0) continue;
    for (int z = 1; z < y; ++z) {
      out[z - 1] += frag.density(y, z) * rate;
    }
  }
  for (int z = 1; z <= n; ++z) {
    out[z - 1] -= frag.rate(z) * f[z - 1];
  }
  return out;
}

Scattering::Scattering(int y0, std::vector<double> table)
    : y0_(y0), table_(std::move(table)) {
  if (y0_ < 1) throw ConfigError("scattering cutoff must be at least 1");
  if (table_.size() != static_cast<std::size_t>(y0_) * y0_) {
    throw ConfigError("scattering table must be y0 rows by y0 columns");
  }
  for (double v : table_) {
    if (!(v >= 0.0)) {
      throw ConfigError("scattering masses must be finite and nonnegative");
    }
  }
  mass_conserving_ = true;
  for (int a = y0_ + 1; a <= 2 * y0_; ++a) {
    double carried = 0.0;
    for (int z = 1; z <= y0_; ++z) carried += z * s(a, z);
    if (std::abs(carried - a) > 1e-10 * a) mass_conserving_ = false;
  }
}

Scattering Scattering::half_split(int y0) {
  if (y0 < 1) throw ConfigError("scattering cutoff must be at least 1");
  std::vector<double> table(static_cast<std::size_t>(y0) * y0, 0.0);
  for (int a = y0 + 1; a <= 2 * y0; ++a) {
    const int lo = a / 2;
    const int hi = a - lo;
    table[(a - y0 - 1) * static_cast<std::size_t>(y0) + (lo - 1)] += 1.0;
    table[(a - y0 - 1) * static_cast<std::size_t>(y0) + (hi - 1)] += 1.0;
  }
  return Scattering(y0, std::move(table));
}

Scattering Scattering::uniform(int y0) {
  if (y0 < 1) throw ConfigError("scattering cutoff must be at least 1");
  std::vector<double> table(static_cast<std::size_t>(y0) * y0, 0.0);
  for (int a = y0 + 1; a <= 2 * y0; ++a) {
    const double c = 2.0 * a / (static_cast<double>(y0) * (y0 + 1));
    for (int z = 1; z <= y0; ++z) {
      table[(a - y0 - 1) * static_cast<std::size_t>(y0) + (z - 1)] = c;
    }
  }
  return Scattering(y0, std::move(table));
}

Scattering Scattering::from_table(int y0, std::vector<double> table) {
  return Scattering(y0, std::move(table));
}

ScatteringParts scattering_parts(const Scattering& scat,
                                 const CoagKernel& kernel,
                                 const std::vector<double>& f,
                                 const BaseMeasure& base, bool symmetrize) {
  const int n = base.n_mass();
  const int y0 = scat.y0();
  if (y0 > n) throw ConfigError("scattering cutoff exceeds the mass grid");
  if (kernel.n_mass() != n) {
    throw ConfigError("scattering kernel and base measure grids differ");
  }
  if (f.size() != static_cast<std::size_t>(n)) {
    throw ConfigError("density length must equal n_mass");
  }
  const double factor = symmetrize ? 0.5 : 1.0;

  ScatteringParts out;
  out.gain.assign(n, 0.0);
  out.loss_rate.assign(n, 0.0);
  for (int i = 1; i <= y0; ++i) {
    const double fi = f[i - 1];
    if (fi == 0.0) continue;
    const double wi = base.weight(i);
    for (int j = std::max(1, y0 + 1 - i); j <= y0; ++j) {
      const double fj = f[j - 1];
      if (fj == 0.0) continue;
      const double rate =
          factor * kernel(i, j) * fi * fj * wi * base.weight(j);
      if (rate == 0.0) continue;
      const int a = i + j;
      for (int z = 1; z <= y0; ++z) {
        const double sv = scat.s(a, z);
        if (sv != 0.0) out.gain[z - 1] += rate * sv / base.weight(z);
      }
    }
  }
  // both parents of an ordered pair are lost, hence the factor 2
  for (int z = 1; z <= y0; ++z) {
    double lam = 0.0;
    for (int j = std::max(1, y0 + 1 - z); j <= y0; ++j) {
      lam += kernel(z, j) * f[j - 1] * base.weight(j);
    }
    out.loss_rate[z - 1] = 2.0 * factor * lam;
  }
  return out;
}

std::vector<double> scattering_apply(const Scattering& scat,
                                     const CoagKernel& kernel,
                                     const std::vector<double>& f,
                                     const BaseMeasure& base,
                                     bool symmetrize) {
  ScatteringParts parts = scattering_parts(scat, kernel, f, base, symmetrize);
  std::vector<double> out = std::move(parts.gain);
  for (int z = 0; z < base.n_mass(); ++z) {
    out[z] -= parts.loss_rate[z] * f[z];
  }
  return out;
}

double certify_scattering(const Scattering& scat, const BaseMeasure& base) {
  const int y0 = scat.y0();
  if (y0 > base.n_mass()) {
    throw ConfigError("scattering cutoff exceeds the mass grid");
  }
  double best = 0.0;
  for (int z = 1; z <= y0; ++z) {
    double num = 0.0;
    for (int i = 1; i <= y0; ++i) {
      for (int j = std::max(1, y0 + 1 - i); j <= y0; ++j) {
        num += scat.s(i + j, z) * base.weight(i) * base.weight(j);
      }
    }
    best = std::max(best, num / base.weight(z));
  }
  return best;
}

double ReactionModel::bound_M() const {
  double m = 0.0;
  if (coag) m = std::max(m, coag->bound());
  if (multi) m = std::max(m, multi->bound());
  return m;
}

ReactionModel::Parts ReactionModel::parts_row(const std::vector<double>& f,
                                              const BaseMeasure& base) const {
  const int n = base.n_mass();
  if (f.size() != static_cast<std::size_t>(n)) {
    throw ConfigError("density length must equal n_mass");
  }
  if (overflow == OverflowPolicy::kExtend) {
    throw ConfigError(
        "extend overflow is limited to the standalone coagulation routines");
  }
  if (overflow == OverflowPolicy::kCutoff) {
    if (!coag || !coag->cutoff()) {
      throw ConfigError("cutoff overflow needs a pair kernel with a cutoff");
    }
    if (multi) {
      throw ConfigError(
          "simultaneous coagulation does not support the cutoff channel");
    }
  }
  if (scat) {
    if (overflow != OverflowPolicy::kCutoff) {
      throw ConfigError("scattering requires the cutoff overflow policy");
    }
    if (*coag->cutoff() != scat->y0()) {
      throw ConfigError("scattering cutoff must match the kernel cutoff");
    }
  }

  Parts out;
  out.gain.assign(n, 0.0);
  out.loss_rate.assign(n, 0.0);
  if (coag) {
    CoagParts cp = coag_parts(*coag, f, base, overflow);
    for (int z = 0; z < n; ++z) {
      out.gain[z] += cp.gain.density[z];
      out.loss_rate[z] += cp.loss_rate[z];
    }
  }
  if (multi) {
    MultiCoagParts mp = multi_coag_parts(*multi, f, base, overflow);
    for (int z = 0; z < n; ++z) {
      out.gain[z] += mp.gain.density[z];
      out.loss_rate[z] += mp.loss_rate[z];
    }
  }
  if (frag) {
    for (int y = 2; y <= n; ++y) {
      const double rate = frag->rate(y) * f[y - 1] * base.weight(y);
      if (rate == 0.0) continue;
      for (int z = 1; z < y; ++z) {
        out.gain[z - 1] += frag->density(y, z) * rate;
      }
    }
    for (int z = 1; z <= n; ++z) out.loss_rate[z - 1] += frag->rate(z);
  }
  if (scat) {
    ScatteringParts sp =
        scattering_parts(*scat, *coag, f, base, symmetrize_scattering);
    for (int z = 0; z < n; ++z) {
      out.gain[z] += sp.gain[z];
      out.loss_rate[z] += sp.loss_rate[z];
    }
  }
  return out;
}

std::vector<double> ReactionModel::apply_row(const std::vector<double>& f,
                                             const BaseMeasure& base) const {
  Parts parts = parts_row(f, base);
  std::vector<double> out = std::move(parts.gain);
  for (int z = 0; z < base.n_mass(); ++z) {
    out[z] -= parts.loss_rate[z] * f[z];
  }
  return out;
}

double ReactionModel::loss_rate_bound(double z_ref,
                                      const BaseMeasure& base) const {
  (void)base;
  double b = 0.0;
  if (coag) b += coag->bound() * z_ref;
  if (multi) {
    for (const MultiCoagKernel::Term& term : multi->terms()) {
      double sup = term.kappa;
      if (!term.phi.empty()) {
        double phi_max = 0.0;
        for (double v : term.phi) phi_max = std::max(phi_max, v);
        sup = std::pow(phi_max, term.order);
      }
      b += sup * std::pow(z_ref, term.order - 1) / factorial(term.order - 1);
    }
  }
  if (frag) b += frag->sup_rate();
  if (scat && coag) {
    b += (symmetrize_scattering ? 1.0 : 2.0) * coag->bound() * z_ref;
  }
  return b;
}

}  // namespace smolux
