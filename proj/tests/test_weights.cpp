#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fockrb/moments.hpp"
#include "fockrb/nodes.hpp"
#include "fockrb/testing/oracles.hpp"
#include "fockrb/weights.hpp"

using namespace fockrb;

namespace {

using oracle::big;

// phi written out in 50 digits, independently of RadialWeight.
big phi_big(const RadialWeight& w, const big& r) {
  if (w.kind() == RadialWeight::Kind::power) return pow(r, big(w.param()));
  return r <= 1 ? big(0) : pow(log(r), big(w.param()));
}

// Central finite-difference Laplacian phi'/r + phi'' at step h = r 1e-5. The
// two terms nearly cancel for log-power weights, hence the extended precision.
double fd_rho(const RadialWeight& w, double r) {
  const big R(r), h = R * big(1e-5);
  const big p = phi_big(w, R + h), m = phi_big(w, R - h), c = phi_big(w, R);
  const big lap = (p - m) / (2 * h) / R + (p - 2 * c + m) / (h * h);
  return static_cast<double>(1 / sqrt(lap));
}

std::vector<Polar> disk_probes(double radius, double step) {
  std::vector<Polar> out;
  for (double x = -radius; x <= radius; x += step)
    for (double y = -radius; y <= radius; y += step)
      if (std::hypot(x, y) <= radius && std::hypot(x, y) > 0)
        out.push_back(Polar::from_complex({x, y}));
  return out;
}

}  // namespace

TEST(Phi, Examples) {
  EXPECT_EQ(RadialWeight::log_power(2).phi(1.0), 0.0);
  EXPECT_EQ(RadialWeight::power(2).phi(3.0), 9.0);
  EXPECT_NEAR(RadialWeight::log_power(1.5).phi(std::exp(2.0)), 2.8284271247461903, 1e-13);
  EXPECT_EQ(RadialWeight::log_power(2).phi(0.5), 0.0);
}

TEST(Phi, ParameterDomain) {
  EXPECT_THROW(RadialWeight::log_power(1.0), domain_error);
  EXPECT_THROW(RadialWeight::power(0.0), domain_error);
  EXPECT_THROW(RadialWeight::power(2).phi(-1.0), domain_error);
  EXPECT_THROW(RadialWeight::from_spec("gauss", 2.0), config_error);
  EXPECT_EQ(RadialWeight::from_spec("logpower", 1.5).descriptor(), "logpower:1.5");
}

TEST(Phi, NondecreasingAndSubharmonic) {
  for (const auto& w : {RadialWeight::log_power(1.5), RadialWeight::log_power(2.5),
                        RadialWeight::power(0.5), RadialWeight::power(2)})
    for (double r : geometric_grid(1e-3, 9, 7)) {
      EXPECT_GE(w.dphi(r), 0.0) << w.descriptor() << " r=" << r;
      EXPECT_GE(w.laplacian(r), -1e-12) << w.descriptor() << " r=" << r;
    }
}

TEST(Phi, LogScaleMatchesDirect) {
  const auto w = RadialWeight::log_power(2.5);
  for (double s : {-3.0, 0.5, 4.0, 30.0}) EXPECT_NEAR(w.phi_at_log(s), w.phi(std::exp(s)), 1e-9 * (1 + w.phi(std::exp(s))));
  // Far beyond the double range of r.
  EXPECT_NEAR(w.phi_at_log(1000.0), std::pow(1000.0, 2.5), 1e-6);
}

TEST(Rho, PowerTwoIsOneHalfEverywhere) {
  const auto w = RadialWeight::power(2);
  for (double r : geometric_grid(1e-4, 10, 3)) EXPECT_EQ(w.rho(r), 0.5);
  EXPECT_EQ(w.rho(5.0), 0.5);
}

TEST(Rho, LogPowerTwoIsLinear) {
  const auto w = RadialWeight::log_power(2);
  EXPECT_NEAR(w.rho(std::numbers::e), std::numbers::e / std::sqrt(2.0), 1e-12);
  for (double r : geometric_grid(2.0, 8, 5))
    EXPECT_NEAR(w.rho(r) / r, 1.0 / std::sqrt(2.0), 1e-10 / std::sqrt(2.0));
}

TEST(Rho, LogPowerTwoPointFiveFrozen) {
  // Frozen from the finite-difference oracle at r = e^4; equals e^4 / sqrt(7.5).
  const auto w = RadialWeight::log_power(2.5);
  const double r = std::exp(4.0);
  EXPECT_NEAR(w.rho(r), 19.936438759291679, 1e-6 * 19.936438759291679);
  EXPECT_NEAR(fd_rho(w, r) / 19.936438759291679, 1.0, 1e-6);
}

TEST(Rho, AgreesWithFiniteDifference) {
  for (const auto& w : {RadialWeight::log_power(1.5), RadialWeight::log_power(2),
                        RadialWeight::log_power(2.5), RadialWeight::power(0.5),
                        RadialWeight::power(2)})
    for (double r : geometric_grid(2.0, std::log10(5e5), 6))
      EXPECT_NEAR(w.rho(r) / fd_rho(w, r), 1.0, 1e-6) << w.descriptor() << " r=" << r;
}

TEST(Rho, UndefinedWhereLogPowerVanishes) {
  const auto w = RadialWeight::log_power(2);
  EXPECT_THROW(w.rho(0.5), undefined_scale_error);
  EXPECT_THROW(w.rho(1.0), undefined_scale_error);
  EXPECT_THROW(w.rho(0.0), domain_error);
  // Laplacian is beta (beta - 1) (log r)^{beta-2} / r^2 > 0 for r > 1.
  EXPECT_GT(RadialWeight::log_power(1.5).rho(10.0), 0.0);
}

TEST(Regularity, PowerTwoPasses) {
  const auto rep = check_regularity(RadialWeight::power(2), geometric_grid(10, 5, 10));
  EXPECT_TRUE(rep.all_ok());
  EXPECT_FALSE(rep.rho_inf_witness.empty());
}

TEST(Regularity, LogPowerTwoFailsLittleO) {
  const auto rep = check_regularity(RadialWeight::log_power(2), geometric_grid(10, 5, 10));
  EXPECT_TRUE(rep.subharmonic_ok);
  EXPECT_FALSE(rep.rho_little_o_ok);
  EXPECT_FALSE(rep.rho_little_o_witness.empty());
}

TEST(Regularity, LogPowerTwoPointFivePasses) {
  const auto rep = check_regularity(RadialWeight::log_power(2.5), geometric_grid(10, 6, 10));
  EXPECT_TRUE(rep.subharmonic_ok);
  EXPECT_TRUE(rep.rho_inf_positive);
  EXPECT_TRUE(rep.rho_little_o_ok);
  EXPECT_TRUE(rep.rho_slowly_varying_ok);
  EXPECT_TRUE(rep.rho_doubling_ok);
  EXPECT_FALSE(rep.rho_slowly_varying_witness.empty());
}

TEST(SeparationDensity, LatticeForPowerTwoPasses) {
  const auto nodes = square_lattice(std::sqrt(std::numbers::pi), 15.0);
  const auto rep = separation_density_check(RadialWeight::power(2), nodes, 0.5, 3.0,
                                            disk_probes(12.0, 0.37));
  EXPECT_TRUE(rep.separation_ok);
  EXPECT_TRUE(rep.density_ok);
  // Nearest neighbour is the spacing; deepest hole is spacing / sqrt 2.
  EXPECT_NEAR(rep.min_separation_ratio, 2.0 * std::sqrt(std::numbers::pi), 1e-12);
  EXPECT_LE(rep.max_density_ratio, 2.0 * std::sqrt(std::numbers::pi / 2.0) + 1e-12);
}

TEST(SeparationDensity, DuplicateGivesZeroSeparation) {
  const auto nodes = NodeSequence::custom({Polar::from_radius(1.0), Polar::from_radius(2.0, 1.0),
                                           Polar::from_radius(2.0, 1.0)});
  const auto rep = separation_density_check(RadialWeight::power(2), nodes, 0.5, 3.0,
                                            {Polar::from_radius(1.5)});
  EXPECT_FALSE(rep.separation_ok);
  EXPECT_EQ(rep.min_separation_ratio, 0.0);
}

TEST(SeparationDensity, RingSequenceFailsDensityForLogPowerTwoPointFive) {
  const auto w = RadialWeight::log_power(2.5);
  const auto t = build_moment_table(w, 80, 1e-12);
  const auto nodes = nodes_partC(t, 60);
  std::vector<Polar> probes;
  for (double s = nodes[5].log_r; s < nodes[50].log_r; s += 0.25) probes.push_back({s, std::numbers::pi});
  const auto rep = separation_density_check(w, nodes, 0.5, 3.0, probes);
  EXPECT_FALSE(rep.density_ok);
  // dist / rho grows like (log r)^{1/4} between the rings.
  for (std::size_t i = 1; i < probes.size(); ++i)
    EXPECT_GT(rep.density_ratio[i], rep.density_ratio[i - 1]) << "probe " << i;
}
