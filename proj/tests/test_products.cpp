#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fockrb/products.hpp"
#include "fockrb/testing/oracles.hpp"

using namespace fockrb;
namespace oracle = fockrb::oracle;

namespace {

std::complex<double> eval_c(const NodeSequence& nodes, std::complex<double> z) {
  return product_eval(nodes, Polar::from_complex(z)).value.to_complex();
}

}  // namespace

TEST(ProductEval, OneAtOrigin) {
  for (const auto& nodes : {nodes_partB(5), nodes_partB(30, ThetaRule::seeded_uniform(2))}) {
    const auto v = product_eval(nodes, Polar::origin());
    EXPECT_EQ(v.value.logmag(), 0.0);
    EXPECT_EQ(v.value.phase(), 0.0);
  }
}

TEST(ProductEval, ZeroAtEveryNode) {
  const auto nodes = nodes_partB(40);
  EXPECT_TRUE(product_eval(nodes, Polar::from_radius(std::numbers::e)).value.is_zero());
  for (const auto& seq : {nodes, nodes_partB(40, ThetaRule::seeded_uniform(5))})
    for (std::size_t k = 0; k < seq.size(); ++k)
      EXPECT_TRUE(product_eval(seq, seq[k]).value.is_zero()) << "k=" << k;
}

TEST(ProductEval, MatchesHighPrecisionProduct) {
  const auto nodes = nodes_partB(200);
  const Polar z{3.0, std::numbers::pi};
  const auto v = product_eval(nodes, z).value;
  // Frozen from a 50-digit product over 200 factors.
  EXPECT_NEAR(v.logmag(), 10.706910685478137, 1e-8 * 10.7);
  EXPECT_NEAR(wrap_phase(v.phase()), 0.0, 1e-10);
  const auto ref = oracle::product_direct(nodes.nodes(), oracle::to_big(z));
  EXPECT_NEAR(v.logmag(), oracle::log_abs(ref), 1e-10 * 10.7);
}

TEST(ProductEval, FarBeyondDoubleRange) {
  const auto nodes = nodes_partB(10);
  const Polar z{800.5 + 0.25, 0.3};
  const auto v = product_eval(nodes, z);
  EXPECT_TRUE(std::isfinite(v.value.logmag()));
  EXPECT_GT(v.value.logmag(), 1e5);
}

TEST(ProductDerivative, SingleNode) {
  const Polar lam = Polar::from_radius(2.0, 0.5);
  const auto d = product_derivative_at_node(NodeSequence::custom({lam}), 0).value.to_complex();
  const auto expect = -1.0 / lam.to_complex();
  EXPECT_NEAR(std::abs(d - expect), 0.0, 1e-15);
}

TEST(ProductDerivative, MatchesFiniteDifference) {
  for (const auto& nodes : {nodes_partB(30), nodes_partB(30, ThetaRule::seeded_uniform(9))})
    for (std::size_t k = 0; k < 12; ++k) {
      const auto lam = nodes[k].to_complex();
      const double h = nodes[k].radius() * 1e-6;
      // Step along the direction of lambda keeps the difference well conditioned.
      const auto dir = std::polar(1.0, nodes[k].theta);
      const auto fd = (eval_c(nodes, lam + h * dir) - eval_c(nodes, lam - h * dir)) / (2.0 * h * dir);
      const auto d = product_derivative_at_node(nodes, k).value.to_complex();
      EXPECT_NEAR(std::abs(d - fd) / std::abs(d), 0.0, 1e-5) << "k=" << k;
    }
}

TEST(ProductDerivative, MatchesHighPrecision) {
  const auto nodes = nodes_partB(60, ThetaRule::seeded_uniform(4));
  for (std::size_t k : {0u, 5u, 20u}) {
    const auto d = product_derivative_at_node(nodes, k).value;
    // Nodes past 60 contribute below 1e-12 at these radii.
    const auto ref = oracle::product_derivative_direct(nodes_partB(120, ThetaRule::seeded_uniform(4)).nodes(), k);
    EXPECT_NEAR(d.logmag(), oracle::log_abs(ref), 1e-10 * std::max(1.0, std::abs(d.logmag())));
    EXPECT_NEAR(wrap_phase(d.phase() - oracle::arg_of(ref)), 0.0, 1e-9);
  }
}

TEST(ProductDerivative, DuplicateNodeIsDegenerate) {
  const auto nodes = NodeSequence::custom({Polar::from_radius(1.0), Polar::from_radius(2.0),
                                           Polar::from_radius(2.0)});
  EXPECT_THROW(product_derivative_at_node(nodes, 1), degenerate_error);
}

TEST(ProductEval, CustomNodesWithoutGrowthAreRejected) {
  std::vector<Polar> pts;
  for (int k = 1; k <= 40; ++k) pts.push_back(Polar::from_radius(1.0 + 0.001 * k));
  EXPECT_THROW(product_eval(NodeSequence::custom(pts), Polar::from_radius(0.5)),
               truncation_unsound_error);
}

TEST(ProductEval, ConjugateSymmetryForRealNodes) {
  const auto nodes = nodes_partB(50);
  for (const Polar z : {Polar{2.3, 0.4}, Polar{9.1, 2.9}, Polar{-1.0, -1.2}}) {
    const auto a = product_eval(nodes, z).value, b = product_eval(nodes, z.conjugate()).value;
    EXPECT_NEAR(a.logmag(), b.logmag(), 1e-12 * std::max(1.0, std::abs(a.logmag())));
    EXPECT_NEAR(wrap_phase(a.phase() + b.phase()), 0.0, 1e-12);
  }
}

TEST(ProductEval, TailBoundHonored) {
  const auto nodes = nodes_partB(20, ThetaRule::seeded_uniform(1));
  for (const Polar z : {Polar{1.7, 0.3}, Polar{6.2, -2.0}}) {
    const auto loose = product_eval(nodes, z, 1e-5);
    const auto tight = product_eval(nodes, z, 1e-13);
    EXPECT_LE(std::abs(loose.value.logmag() - tight.value.logmag()),
              loose.tail_bound + tight.tail_bound);
    EXPECT_GT(tight.terms_used, loose.terms_used);
  }
  EXPECT_THROW(product_eval(nodes, Polar{1.0, 0.0}, 0.5), domain_error);
}

TEST(ProductEstimate, SinglePoint) {
  const auto st = verify_product_estimate(nodes_partB(40), RadialWeight::log_power(2), {Polar{5.25, 1.0}});
  EXPECT_EQ(st.min(), st.max());
}

TEST(ProductEstimate, MidwayPointsInsideBand) {
  const auto nodes = nodes_partB(40);
  const auto w = RadialWeight::log_power(2);
  std::vector<Polar> grid;
  for (double s = 1.0; s <= 19.0; s += 0.125)
    for (int j = 0; j < 256; ++j) grid.push_back({s, wrap_phase(two_pi * j / 256)});
  const auto band = verify_product_estimate(nodes, w, grid);
  EXPECT_LE(band.width(), 9.0);
  for (std::size_t n = 2; n < 36; ++n) {
    const Polar mid{0.5 * (nodes[n].log_r + nodes[n + 1].log_r), std::numbers::pi};
    const double v = verify_product_estimate(nodes, w, {mid}).min();
    EXPECT_GE(v, band.min() - 1e-9);
    EXPECT_LE(v, band.max() + 1e-9);
  }
}

TEST(ProductEstimate, CoverageAndWeightChecks) {
  const auto nodes = nodes_partB(20);
  EXPECT_THROW(verify_product_estimate(nodes, RadialWeight::log_power(2), {Polar{30.0, 0.0}}),
               coverage_error);
  EXPECT_THROW(verify_product_estimate(nodes, RadialWeight::log_power(2), {Polar::origin()}),
               coverage_error);
  EXPECT_THROW(verify_product_estimate(nodes, RadialWeight::power(2), {Polar{3.0, 0.0}}),
               config_error);
}

TEST(DerivativeEstimate, BoundedBand) {
  const auto st = verify_derivative_estimate(nodes_partB(40), RadialWeight::log_power(2));
  EXPECT_LE(st.width(), 4.5);
  EXPECT_EQ(st.samples().size(), 40u);
}

TEST(DerivativeEstimate, SeededAnglesWithinTwoNatsOfZeros) {
  const auto w = RadialWeight::log_power(2);
  const auto zeros = verify_derivative_estimate(nodes_partB(40), w);
  const auto seeded = verify_derivative_estimate(nodes_partB(40, ThetaRule::seeded_uniform(1)), w);
  EXPECT_TRUE(zeros.band_close(seeded, 2.0))
      << "zeros [" << zeros.min() << ", " << zeros.max() << "] seeded [" << seeded.min() << ", "
      << seeded.max() << "]";
}

TEST(DerivativeEstimate, NeedsTenNodes) {
  EXPECT_THROW(verify_derivative_estimate(nodes_partB(5), RadialWeight::log_power(2)), config_error);
}
