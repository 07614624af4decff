#include <array>
#include <cmath>
#include <cstdint>

#include "doctest.h"
#include "smolux/dynamics.hpp"
#include "smolux/errors.hpp"
#include "smolux/kernel_field.hpp"
#include "smolux/philox.hpp"

using namespace smolux;

namespace {

DynamicsModel radial_model(int dim, double eps, double sigma_iso) {
  SigmaSpec sigma;
  if (sigma_iso > 0.0) {
    sigma.family = SigmaSpec::Family::kConstantIso;
    sigma.diag = {sigma_iso, sigma_iso, sigma_iso};
  }
  DriftSpec drift;
  drift.family = DriftSpec::Family::kRadial;
  for (int i = 0; i < dim; ++i) drift.matrix[i * dim + i] = eps / dim;
  const double a = sigma_iso * sigma_iso;
  return DynamicsModel(dim, sigma, drift, eps, a, a);
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("counter rng known answers") {
  // Philox4x32-10 reference vectors (independently recomputed)
  std::uint32_t out[4];
  {
    const std::uint32_t ctr[4] = {0, 0, 0, 0};
    const std::uint32_t key[2] = {0, 0};
    Philox4x32::block(ctr, key, out);
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);
  }
  {
    const std::uint32_t ctr[4] = {0xffffffffu, 0xffffffffu, 0xffffffffu,
                                  0xffffffffu};
    const std::uint32_t key[2] = {0xffffffffu, 0xffffffffu};
    Philox4x32::block(ctr, key, out);
    CHECK(out[0] == 0x408f276du);
    CHECK(out[1] == 0x41c83b0eu);
    CHECK(out[2] == 0xa20bc7c6u);
    CHECK(out[3] == 0x6d5451fdu);
  }
  {
    const std::uint32_t ctr[4] = {0x243f6a88u, 0x85a308d3u, 0x13198a2eu,
                                  0x03707344u};
    const std::uint32_t key[2] = {0xa4093822u, 0x299f31d0u};
    Philox4x32::block(ctr, key, out);
    CHECK(out[0] == 0xd16cfe09u);
    CHECK(out[1] == 0x94fdccebu);
    CHECK(out[2] == 0x5001e420u);
    CHECK(out[3] == 0x24126ea1u);
  }
}

TEST_CASE("gaussian streams are reproducible and addressable") {
  GaussianStream a(123, 4, 2, 9);
  GaussianStream b(123, 4, 2, 9);
  for (int i = 0; i < 16; ++i) CHECK(a.next() == b.next());
  GaussianStream c(123, 4, 2, 10);
  bool differs = false;
  GaussianStream a2(123, 4, 2, 9);
  for (int i = 0; i < 16; ++i) differs = differs || (a2.next() != c.next());
  CHECK(differs);
  // antithetic sign flips the draw exactly
  GaussianStream plus(5, 0, 0, 0, 1.0);
  GaussianStream minus(5, 0, 0, 0, -1.0);
  for (int i = 0; i < 8; ++i) CHECK(plus.next() == -minus.next());
}

TEST_CASE("gaussian moments") {
  GaussianStream g(2024, 0, 0, 0);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = g.next();
    s1 += x;
    s2 += x * x;
  }
  CHECK(std::abs(s1 / n) < 0.01);
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("divergence of the drift families") {
  SUBCASE("radial has constant divergence equal to eps") {
    const DynamicsModel m = radial_model(2, 1.0, 0.3);
    CHECK(m.div_drift({0.4, -1.2, 0.0}, 1.0) == 1.0);
    CHECK(m.div_drift({100.0, 3.0, 0.0}, 2.0) == 1.0);
  }
  SUBCASE("linear divergence is the trace") {
    DriftSpec drift;
    drift.family = DriftSpec::Family::kLinear;
    drift.matrix = {2.0, 0.5, -1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    const DynamicsModel m(2, SigmaSpec{}, drift, 1.0, 0.0, 0.0);
    CHECK(m.div_drift({3.0, 4.0, 0.0}, 1.0) == 1.0);
    CHECK(m.trace_drift_matrix() == 1.0);
  }
  SUBCASE("sine term divergence matches a finite difference") {
    DriftSpec drift;
    drift.family = DriftSpec::Family::kRadialSine;
    drift.matrix[0] = 2.0;
    drift.sine_amp = 0.3;
    drift.sine_freq = 1.7;
    const DynamicsModel m(1, SigmaSpec{}, drift, 0.1, 0.0, 0.0);
    const std::array<double, 3> x = {0.37, 0.0, 0.0};
    const double h = 1e-6;
    std::array<double, 3> bp{}, bm{};
    m.drift({x[0] + h, 0.0, 0.0}, 1.0, bp);
    m.drift({x[0] - h, 0.0, 0.0}, 1.0, bm);
    CHECK(m.div_drift(x, 1.0) ==
          doctest::Approx((bp[0] - bm[0]) / (2.0 * h)).epsilon(1e-6));
  }
}

TEST_CASE("divergence certification flags a violated floor") {
  SpatialGrid g;
  g.dim = 2;
  g.n_x = 8;
  g.extent = 4.0;
  const BaseMeasure base = BaseMeasure::power_law(4, 2.0);
  const auto samples = certification_samples(g, base);
  CHECK(!samples.empty());
  SUBCASE("honest floor passes") {
    const DynamicsModel ok = radial_model(2, 0.5, 0.0);
    const DivergenceReport rep = certify_divergence_bound(ok, samples);
    CHECK(rep.pass);
    CHECK(rep.min_div == 0.5);
  }
  SUBCASE("overclaimed floor fails") {
    DriftSpec drift;
    drift.family = DriftSpec::Family::kLinear;
    drift.matrix = {0.25, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    const DynamicsModel bad(2, SigmaSpec{}, drift, 1.0, 0.0, 0.0);
    const DivergenceReport rep = certify_divergence_bound(bad, samples);
    CHECK(!rep.pass);
    CHECK(rep.min_div == 0.25);
  }
}

TEST_CASE("ellipticity certification") {
  SpatialGrid g;
  g.dim = 2;
  g.n_x = 6;
  g.extent = 3.0;
  const BaseMeasure base = BaseMeasure::power_law(2, 2.0);
  const auto samples = certification_samples(g, base);
  SUBCASE("constant diagonal") {
    SigmaSpec sigma;
    sigma.family = SigmaSpec::Family::kConstantDiag;
    sigma.diag = {0.5, 0.2, 0.0};
    const DynamicsModel m(2, sigma, DriftSpec{}, 0.0, 0.04, 0.25);
    const EllipticityReport rep = certify_ellipticity(m, samples);
    CHECK(rep.pass);
    CHECK(rep.min_eig == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(rep.max_eig == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("declared window too narrow fails") {
    SigmaSpec sigma;
    sigma.family = SigmaSpec::Family::kDiagSine;
    sigma.diag = {0.5, 0.5, 0.0};
    sigma.sine_amp = 0.2;
    sigma.sine_freq = 2.0;
    const DynamicsModel m(2, sigma, DriftSpec{}, 0.0, 0.2, 0.3);
    const EllipticityReport rep = certify_ellipticity(m, samples);
    CHECK(!rep.pass);  // (0.5 + 0.2)^2 = 0.49 exceeds the declared 0.3
  }
}

TEST_CASE("deterministic flow matches the diagonal linear solution") {
  // dx/dt = a x + c with a = 0.3, c = 0.1: x_t = e^{at} x0 + c(e^{at}-1)/a
  DriftSpec drift;
  drift.family = DriftSpec::Family::kLinear;
  drift.matrix[0] = 0.3;
  drift.offset[0] = 0.1;
  const DynamicsModel m(1, SigmaSpec{}, drift, 0.3, 0.0, 0.0);
  const double t = 1.25;
  const PathSample ps = deterministic_flow(m, {0.7, 0.0, 0.0}, 1.0, t, 1e-4);
  const double exact =
      std::exp(0.3 * t) * 0.7 + 0.1 * (std::exp(0.3 * t) - 1.0) / 0.3;
  CHECK(ps.endpoint[0] == doctest::Approx(exact).epsilon(1e-9));
  CHECK(ps.weight == doctest::Approx(std::exp(-0.3 * t)).epsilon(1e-12));
}

TEST_CASE("path weight equals the exponential of the divergence integral") {
  const DynamicsModel m = radial_model(2, 0.8, 0.25);
  GaussianStream stream(99, 1, 1, 1);
  const PathSample ps =
      simulate_path(m, {1.0, 1.0, 0.0}, 2.0, 0.5, 1e-2, stream);
  CHECK(ps.weight == doctest::Approx(std::exp(-ps.div_integral)).epsilon(1e-15));
  CHECK(ps.div_integral == doctest::Approx(0.8 * 0.5).epsilon(1e-12));
}

TEST_CASE("model validation") {
  CHECK_THROWS_AS(DynamicsModel(4, SigmaSpec{}, DriftSpec{}, 0.0, 0.0, 0.0),
                  ConfigError);
  CHECK_THROWS_AS(DynamicsModel(2, SigmaSpec{}, DriftSpec{}, 0.0, 1.0, 0.5),
                  ConfigError);
}

TEST_CASE("json round trip") {
  const DynamicsModel m = radial_model(2, 1.0, 0.3);
  const DynamicsModel back = DynamicsModel::from_json(m.to_json());
  CHECK(back.dim() == 2);
  CHECK(back.eps_floor() == 1.0);
  CHECK(back.div_drift({0.3, 0.4, 0.0}, 1.0) == 1.0);
  CHECK_THROWS_AS(DynamicsModel::from_json(
                      R"({"dim":1,"sigma":{"family":"box"},"drift":{},)"
                      R"("eps_floor":0.0})"),
                  ConfigError);
}

}  // TEST_SUITE
