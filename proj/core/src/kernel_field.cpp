#include "smolux/kernel_field.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <utility>

#include "smolux/errors.hpp"

namespace smolux {

KernelField::KernelField(SpatialGrid grid, BaseMeasure base, double fill)
    : grid_(grid), base_(std::move(base)) {
  if (grid_.dim < 1 || grid_.dim > 3)
    throw ConfigError("KernelField: dim must be 1, 2 or 3");
  if (grid_.n_x < 2) throw ConfigError("KernelField: n_x must be >= 2");
  if (!(grid_.extent > 0.0))
    throw ConfigError("KernelField: extent must be > 0");
  values_.assign(grid_.n_sites() * static_cast<std::size_t>(n_mass()), fill);
}

std::size_t KernelField::site_index(const std::array<int, 3>& ix) const {
  std::size_t s = 0;
  for (int a = 0; a < grid_.dim; ++a)
    s = s * static_cast<std::size_t>(grid_.n_x) +
        static_cast<std::size_t>(ix[a]);
  return s;
}

std::array<int, 3> KernelField::site_coords(std::size_t site) const {
  std::array<int, 3> ix = {0, 0, 0};
  for (int a = grid_.dim - 1; a >= 0; --a) {
    ix[a] = static_cast<int>(site % static_cast<std::size_t>(grid_.n_x));
    site /= static_cast<std::size_t>(grid_.n_x);
  }
  return ix;
}

std::array<double, 3> KernelField::node_position(std::size_t site) const {
  const std::array<int, 3> ix = site_coords(site);
  std::array<double, 3> p = {0.0, 0.0, 0.0};
  for (int a = 0; a < grid_.dim; ++a) p[a] = ix[a] * grid_.spacing();
  return p;
}

double KernelField::eval(const std::array<double, 3>& point, int k) const {
  const double h = grid_.spacing();
  const int n = grid_.n_x;
  int lo[3] = {0, 0, 0};
  int hi[3] = {0, 0, 0};
  double frac[3] = {0.0, 0.0, 0.0};
  for (int a = 0; a < grid_.dim; ++a) {
    if (!std::isfinite(point[a]))
      throw NumericError("eval: non-finite coordinate on axis " +
                         std::to_string(a));
    double c = point[a] / h;
    if (grid_.policy == ExtensionPolicy::kClamp) {
      if (c < 0.0) c = 0.0;
      if (c > n - 1) c = n - 1;
      int i0 = static_cast<int>(c);
      if (i0 > n - 2) i0 = n - 2;
      lo[a] = i0;
      hi[a] = i0 + 1;
      frac[a] = c - i0;
    } else {
      c = std::fmod(c, static_cast<double>(n));
      if (c < 0.0) c += n;
      if (c >= n) c = 0.0;  // fmod + rounding can land exactly on n
      int i0 = static_cast<int>(c);
      if (i0 > n - 1) i0 = n - 1;
      lo[a] = i0;
      hi[a] = i0 + 1 == n ? 0 : i0 + 1;
      frac[a] = c - i0;
    }
  }
  // gather the 2^dim corners, then lerp axis by axis
  double corner[8];
  const int n_corners = 1 << grid_.dim;
  for (int c = 0; c < n_corners; ++c) {
    std::array<int, 3> ix = {0, 0, 0};
    for (int a = 0; a < grid_.dim; ++a)
      ix[a] = (c >> a) & 1 ? hi[a] : lo[a];
    corner[c] = at(site_index(ix), k);
  }
  for (int a = grid_.dim - 1; a >= 0; --a) {
    const int half = 1 << a;
    for (int c = 0; c < half; ++c)
      corner[c] = std::lerp(corner[c], corner[c + half], frac[a]);
  }
  return corner[0];
}

double norm(const KernelField& field) {
  double m = 0.0;
  for (double v : field.values()) {
    const double a = std::abs(v);
    if (a > m) m = a;
  }
  return m;
}

double min_value(const KernelField& field) {
  double m = 0.0;
  bool first = true;
  for (double v : field.values()) {
    if (first || v < m) m = v;
    first = false;
  }
  return m;
}

KernelField scale(double alpha, const KernelField& x) {
  KernelField out = x;
  for (double& v : out.values()) v *= alpha;
  return out;
}

KernelField axpy(double alpha, const KernelField& x, const KernelField& y) {
  if (!x.same_shape(y)) throw ConfigError("axpy: field shapes differ");
  KernelField out = y;
  for (std::size_t i = 0; i < out.values().size(); ++i)
    out.values()[i] += alpha * x.values()[i];
  return out;
}

double equicontinuity_modulus(const KernelField& field, double delta) {
  const SpatialGrid& g = field.grid();
  const double h = g.spacing();
  if (delta < h)
    throw ConfigError("equicontinuity_modulus: delta must be >= spacing");
  const int reach = static_cast<int>(delta / h);
  // offsets with lexicographically positive leading entry cover every
  // unordered pair once
  std::vector<std::array<int, 3>> offsets;
  std::array<int, 3> d = {0, 0, 0};
  const int lo = -reach;
  auto within = [&](const std::array<int, 3>& v) {
    double r2 = 0.0;
    for (int a = 0; a < g.dim; ++a) r2 += (v[a] * h) * (v[a] * h);
    return r2 <= delta * delta;
  };
  for (d[0] = g.dim > 0 ? lo : 0; d[0] <= reach; ++d[0])
    for (d[1] = g.dim > 1 ? lo : 0; d[1] <= (g.dim > 1 ? reach : 0); ++d[1])
      for (d[2] = g.dim > 2 ? lo : 0; d[2] <= (g.dim > 2 ? reach : 0);
           ++d[2]) {
        bool positive = false;
        for (int a = 0; a < g.dim; ++a) {
          if (d[a] > 0) {
            positive = true;
            break;
          }
          if (d[a] < 0) break;
        }
        if (positive && within(d)) offsets.push_back(d);
      }
  double worst = 0.0;
  const std::size_t n_sites = field.n_sites();
  for (std::size_t s = 0; s < n_sites; ++s) {
    const std::array<int, 3> ix = field.site_coords(s);
    for (const auto& off : offsets) {
      std::array<int, 3> jx = ix;
      bool in = true;
      for (int a = 0; a < g.dim; ++a) {
        jx[a] += off[a];
        if (jx[a] < 0 || jx[a] >= g.n_x) {
          in = false;
          break;
        }
      }
      if (!in) continue;
      const std::size_t t = field.site_index(jx);
      for (int k = 0; k < field.n_mass(); ++k) {
        const double diff = std::abs(field.at(s, k) - field.at(t, k));
        if (diff > worst) worst = diff;
      }
    }
  }
  return worst;
}

void save_snapshot(const KernelField& field, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw ConfigError("save_snapshot: cannot open " + path);
  const SpatialGrid& g = field.grid();
  const std::int32_t dim = g.dim;
  std::fwrite(&dim, sizeof dim, 1, fp);
  for (int a = 0; a < g.dim; ++a) {
    const std::int32_t nx = g.n_x;
    std::fwrite(&nx, sizeof nx, 1, fp);
  }
  const std::int32_t n_mass = field.n_mass();
  std::fwrite(&n_mass, sizeof n_mass, 1, fp);
  const double unit = field.base().unit();
  std::fwrite(&unit, sizeof unit, 1, fp);
  std::fwrite(&g.extent, sizeof g.extent, 1, fp);
  const std::uint8_t policy =
      g.policy == ExtensionPolicy::kWrap ? 1 : 0;
  std::fwrite(&policy, sizeof policy, 1, fp);
  const std::size_t n = field.values().size();
  const std::size_t written = std::fwrite(field.values().data(),
                                          sizeof(double), n, fp);
  std::fclose(fp);
  if (written != n) throw ConfigError("save_snapshot: short write to " + path);
}

KernelField load_snapshot(const std::string& path, const BaseMeasure& base) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw ConfigError("load_snapshot: cannot open " + path);
  auto fail = [&](const std::string& msg) {
    std::fclose(fp);
    throw ConfigError("load_snapshot: " + msg + " in " + path);
  };
  std::int32_t dim = 0;
  if (std::fread(&dim, sizeof dim, 1, fp) != 1) fail("truncated header");
  if (dim < 1 || dim > 3) fail("bad dimension");
  std::int32_t nx = 0;
  for (int a = 0; a < dim; ++a) {
    std::int32_t v = 0;
    if (std::fread(&v, sizeof v, 1, fp) != 1) fail("truncated header");
    if (a == 0)
      nx = v;
    else if (v != nx)
      fail("anisotropic axis counts are not supported");
  }
  std::int32_t n_mass = 0;
  double unit = 0.0, extent = 0.0;
  std::uint8_t policy = 0;
  if (std::fread(&n_mass, sizeof n_mass, 1, fp) != 1 ||
      std::fread(&unit, sizeof unit, 1, fp) != 1 ||
      std::fread(&extent, sizeof extent, 1, fp) != 1 ||
      std::fread(&policy, sizeof policy, 1, fp) != 1)
    fail("truncated header");
  if (n_mass != base.n_mass() || unit != base.unit())
    fail("mass grid does not match the supplied base measure");
  SpatialGrid grid{dim, nx, extent,
                   policy ? ExtensionPolicy::kWrap : ExtensionPolicy::kClamp};
  KernelField out(grid, base);
  const std::size_t n = out.values().size();
  if (std::fread(out.values().data(), sizeof(double), n, fp) != n)
    fail("truncated payload");
  std::fclose(fp);
  return out;
}

}  // namespace smolux
