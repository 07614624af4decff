#include "smolux/mass_measure.hpp"

#include <cmath>
#include <cstddef>
#include <utility>

#include "smolux/errors.hpp"
#include "json_detail.hpp"

namespace smolux {

std::vector<double> convolve(const std::vector<double>& a,
                             const std::vector<double>& b,
                             RangePolicy policy) {
  if (a.size() != b.size() || a.empty())
    throw ConfigError("convolve: weight vectors live on different mass grids");
  const std::size_t n = a.size();
  const std::size_t out_n = policy == RangePolicy::kExtend ? 2 * n : n;
  std::vector<double> out(out_n, 0.0);
  // bins are 1-based: (i0+1) + (j0+1) lands in slot i0+j0+1
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] == 0.0) continue;
    const std::size_t j_max =
        policy == RangePolicy::kExtend ? n : (n >= i + 2 ? n - i - 2 + 1 : 0);
    for (std::size_t j = 0; j < j_max; ++j)
      out[i + j + 1] += a[i] * b[j];
  }
  return out;
}

BaseMeasure::BaseMeasure(MassGrid grid, std::vector<double> weights)
    : grid_(grid), weights_(std::move(weights)) {
  if (grid_.n_mass < 1) throw ConfigError("BaseMeasure: n_mass must be >= 1");
  if (!(grid_.unit > 0.0)) throw ConfigError("BaseMeasure: unit must be > 0");
  if (static_cast<int>(weights_.size()) != grid_.n_mass)
    throw ConfigError("BaseMeasure: weight count does not match n_mass");
  for (int k = 0; k < grid_.n_mass; ++k) {
    // 1e-300 floor: density ratios divide by w_k and must stay finite
    if (!(weights_[k] >= 1e-300) || !std::isfinite(weights_[k]))
      throw ConfigError("BaseMeasure: weight " + std::to_string(k + 1) +
                        " violates positivity");
  }
  for (double w : weights_) total_mass_ += w;
  conv_constant_ = certify(2).ratio;
}

ConvCertificate BaseMeasure::certify(int order) const {
  if (order < 2 || order > kMaxCertifyOrder)
    throw ConfigError("certify: order must be in [2, " +
                      std::to_string(kMaxCertifyOrder) + "]");
  ConvCertificate cert;
  cert.order = order;
  // Truncated iterated convolution is exact in range: a bin k <= n_mass only
  // receives pairs with both parts < k, so no dropped term can reach it.
  std::vector<double> power = weights_;
  for (int level = 2; level <= order; ++level)
    power = convolve(power, weights_, RangePolicy::kTruncate);
  for (int k = 0; k < grid_.n_mass; ++k) {
    const double r = power[k] / weights_[k];
    if (r > cert.ratio) {
      cert.ratio = r;
      cert.argmax_bin = k + 1;
    }
  }
  const double r2 = order == 2 ? cert.ratio : conv_constant_;
  cert.pair_power = std::pow(r2, order - 1);
  cert.within_pair_power = cert.ratio <= cert.pair_power * (1.0 + 1e-12);
  return cert;
}

BaseMeasure BaseMeasure::power_law(int n_mass, double exponent, double unit) {
  if (exponent < 0.0)
    throw ConfigError("power_law: exponent must be >= 0");
  std::vector<double> w(static_cast<std::size_t>(n_mass > 0 ? n_mass : 0));
  for (int k = 1; k <= n_mass; ++k)
    w[k - 1] = std::pow(static_cast<double>(k), -exponent);
  return BaseMeasure({n_mass, unit}, std::move(w));
}

BaseMeasure BaseMeasure::laplace(int n_mass, double unit, double rate) {
  if (rate < 0.0) throw ConfigError("laplace: rate must be >= 0");
  std::vector<double> w(static_cast<std::size_t>(n_mass > 0 ? n_mass : 0));
  for (int k = 1; k <= n_mass; ++k) {
    const double y = k * unit;
    w[k - 1] = std::exp(-rate * y) / ((1.0 + y) * (1.0 + y)) * unit;
  }
  return BaseMeasure({n_mass, unit}, std::move(w));
}

double tv_norm(const std::vector<double>& density, const BaseMeasure& base) {
  if (static_cast<int>(density.size()) != base.n_mass())
    throw ConfigError("tv_norm: density length does not match the grid");
  double s = 0.0;
  for (int k = 0; k < base.n_mass(); ++k)
    s += std::abs(density[k]) * base.weights()[k];
  return s;
}

double first_moment(const std::vector<double>& density,
                    const BaseMeasure& base) {
  if (static_cast<int>(density.size()) != base.n_mass())
    throw ConfigError("first_moment: density length does not match the grid");
  double s = 0.0;
  for (int k = 0; k < base.n_mass(); ++k)
    s += base.grid().mass(k + 1) * density[k] * base.weights()[k];
  return s;
}

namespace detail {

BaseMeasure base_measure_from_json(const json& obj) {
  require_keys(obj, "base measure",
               {"n_mass", "unit", "weights", "family", "exponent", "rate"});
  const int n_mass = get_int(obj, "n_mass", "base measure");
  const double unit = get_number_or(obj, "unit", 1.0);
  if (obj.contains("weights")) {
    if (obj.contains("family"))
      throw ConfigError("base measure: give either weights or a family");
    std::vector<double> w = obj["weights"].get<std::vector<double>>();
    return BaseMeasure({n_mass, unit}, std::move(w));
  }
  if (!obj.contains("family"))
    throw ConfigError("base measure: needs weights or a family");
  const std::string family = obj["family"].get<std::string>();
  if (family == "power_law")
    return BaseMeasure::power_law(n_mass, get_number_or(obj, "exponent", 2.0),
                                  unit);
  if (family == "laplace")
    return BaseMeasure::laplace(n_mass, unit, get_number_or(obj, "rate", 1.0));
  throw ConfigError("base measure: unknown family \"" + family + "\"");
}

json base_measure_to_json(const BaseMeasure& base) {
  json j;
  j["n_mass"] = base.n_mass();
  j["unit"] = base.unit();
  j["weights"] = base.weights();
  return j;
}

}  // namespace detail

std::string BaseMeasure::to_json() const {
  return detail::base_measure_to_json(*this).dump();
}

BaseMeasure BaseMeasure::from_json(const std::string& text) {
  return detail::base_measure_from_json(
      detail::parse_json(text, "base measure"));
}

}  // namespace smolux
