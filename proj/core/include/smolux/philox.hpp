#ifndef SMOLUX_PHILOX_HPP_
#define SMOLUX_PHILOX_HPP_

#include <cmath>
#include <cstdint>

namespace smolux {

// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
// Streams are addressed, not advanced: the 128-bit counter encodes
// (block, path, mass, site) and the 64-bit key is the master seed, so any
// (site, mass, path) stream can be opened at cost O(1) from any thread.
struct Philox4x32 {
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  static void round(std::uint32_t ctr[4], const std::uint32_t key[2]) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    const std::uint32_t out[4] = {hi1 ^ ctr[1] ^ key[0], lo1,
                                  hi0 ^ ctr[3] ^ key[1], lo0};
    ctr[0] = out[0];
    ctr[1] = out[1];
    ctr[2] = out[2];
    ctr[3] = out[3];
  }

  // 10 rounds of the block function; ctr/key are not modified.
  static void block(const std::uint32_t ctr_in[4], const std::uint32_t key_in[2],
                    std::uint32_t out[4]) {
    std::uint32_t key[2] = {key_in[0], key_in[1]};
    out[0] = ctr_in[0];
    out[1] = ctr_in[1];
    out[2] = ctr_in[2];
    out[3] = ctr_in[3];
    for (int r = 0; r < 10; ++r) {
      round(out, key);
      key[0] += kW0;
      key[1] += kW1;
    }
  }
};

// splitmix64, used to derive well-mixed sub-seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0) {
  return splitmix64(splitmix64(master ^ splitmix64(a)) ^ splitmix64(~b));
}

// Standard-normal stream for one (site, mass, path) triple. Draws come in
// Box-Muller pairs from consecutive Philox blocks; consumption order is part
// of the estimator definition and never depends on threading.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint32_t site, std::uint32_t mass,
                 std::uint32_t path, double sign = 1.0)
      : sign_(sign) {
    key_[0] = static_cast<std::uint32_t>(seed);
    key_[1] = static_cast<std::uint32_t>(seed >> 32);
    base_[0] = 0;  // block index, incremented per pair
    base_[1] = path;
    base_[2] = mass;
    base_[3] = site;
  }

  double next() {
    if (!have_spare_) {
      std::uint32_t out[4];
      Philox4x32::block(base_, key_, out);
      ++base_[0];
      const std::uint64_t a =
          (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
      const std::uint64_t b =
          (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
      // u1 in (0,1], u2 in [0,1): log(u1) stays finite.
      const double u1 = ((a >> 11) + 1) * 0x1.0p-53;
      const double u2 = (b >> 11) * 0x1.0p-53;
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double th = 2.0 * 3.14159265358979323846 * u2;
      value_ = r * std::cos(th);
      spare_ = r * std::sin(th);
      have_spare_ = true;
      return sign_ * value_;
    }
    have_spare_ = false;
    return sign_ * spare_;
  }

 private:
  std::uint32_t key_[2];
  std::uint32_t base_[4];
  double value_ = 0.0;
  double spare_ = 0.0;
  double sign_;
  bool have_spare_ = false;
};

}  // namespace smolux

#endif  // SMOLUX_PHILOX_HPP_
