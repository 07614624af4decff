#ifndef SMOLUX_MASS_MEASURE_HPP_
#define SMOLUX_MASS_MEASURE_HPP_

#include <string>
#include <vector>

namespace smolux {

// Uniform mass grid: bin k (1-based) carries mass k*unit, so bin indices add
// under coagulation: mass(i) + mass(j) = mass(i+j).
struct MassGrid {
  int n_mass = 1;
  double unit = 1.0;

  double mass(int bin) const { return bin * unit; }  // bin is 1-based
  bool operator==(const MassGrid& o) const {
    return n_mass == o.n_mass && unit == o.unit;
  }
};

enum class RangePolicy { kTruncate, kExtend };

// (a*b)_k = sum_{i+j=k} a_i b_j in 1-based bin arithmetic.
// truncate keeps bins 1..n (entry for bin 1 is always 0); extend keeps
// bins 1..2n. Inputs must live on one grid, i.e. have equal length.
std::vector<double> convolve(const std::vector<double>& a,
                             const std::vector<double>& b, RangePolicy policy);

struct ConvCertificate {
  int order = 2;           // n in w^{*n}
  double ratio = 0.0;      // R_n = max_k (w^{*n})_k / w_k over k <= n_mass
  int argmax_bin = 0;      // 1-based k attaining R_n, 0 if all zero
  double pair_power = 0.0; // R_2^{n-1}, the bound implied by the pair constant
  bool within_pair_power = true;  // R_n <= R_2^{n-1}
};

// Reference measure on the mass grid with strictly positive weights
// w_k = nu0({k*unit}). Construction certifies the pair convolution bound
// (w*w)_k <= C w_k with C = R_2 computed exactly over the truncated range.
class BaseMeasure {
 public:
  BaseMeasure(MassGrid grid, std::vector<double> weights);

  // w_k = k^{-p}, unit 1 unless given. p = 0 is the uniform measure.
  static BaseMeasure power_law(int n_mass, double exponent, double unit = 1.0);
  // w_k = g(k*unit)*unit with g(y) = exp(-rate*y)/(1+y)^2, a standard
  // instance whose continuum self-convolution is dominated by a multiple of
  // itself; the discrete constant is certified rather than assumed.
  static BaseMeasure laplace(int n_mass, double unit, double rate);

  const MassGrid& grid() const { return grid_; }
  int n_mass() const { return grid_.n_mass; }
  double unit() const { return grid_.unit; }
  const std::vector<double>& weights() const { return weights_; }
  double weight(int bin) const { return weights_[bin - 1]; }  // 1-based

  double total_mass() const { return total_mass_; }    // m = sum w_k
  double conv_constant() const { return conv_constant_; }  // C = R_2

  // R_order with an exhaustive iterated convolution; order capped at 6
  // (cost n_mass^2 per level, diagnostics only beyond the pair bound).
  ConvCertificate certify(int order) const;
  static constexpr int kMaxCertifyOrder = 6;

  std::string to_json() const;
  static BaseMeasure from_json(const std::string& text);

  bool operator==(const BaseMeasure& o) const {
    return grid_ == o.grid_ && weights_ == o.weights_;
  }

 private:
  MassGrid grid_;
  std::vector<double> weights_;
  double total_mass_ = 0.0;
  double conv_constant_ = 0.0;
};

// Total variation of a density vector against the base weights:
// sum_k |f_k| w_k. The vector length must equal n_mass.
double tv_norm(const std::vector<double>& density, const BaseMeasure& base);

// First moment sum_k mass(k) f_k w_k of a density vector of length n_mass.
double first_moment(const std::vector<double>& density,
                    const BaseMeasure& base);

}  // namespace smolux

#endif  // SMOLUX_MASS_MEASURE_HPP_
