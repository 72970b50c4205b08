// The oracles are checked against frozen high-precision values before they
// are used to judge the library.
#include "frozen.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>

namespace {

class OracleCase : public ::testing::TestWithParam<frozen::MassCase> {};

TEST_P(OracleCase, CollinearBisectionMatchesFrozenRoots) {
    const auto &f = GetParam();
    const auto c = oracle::collinear(f.mu);
    EXPECT_NEAR(double(c.l1), f.l1, 1e-15);
    EXPECT_NEAR(double(c.l2), f.l2, 1e-15);
    EXPECT_NEAR(double(c.l3), f.l3, 1e-15);
}

TEST_P(OracleCase, EnergiesMatchFrozenThresholds) {
    const auto &f = GetParam();
    const auto c = oracle::collinear(f.mu);
    EXPECT_NEAR(double(oracle::axis_equilibrium_energy(f.mu, c.l1)), f.e1, 1e-14);
    EXPECT_NEAR(double(oracle::axis_equilibrium_energy(f.mu, c.l2)), f.e2, 1e-14);
    EXPECT_NEAR(double(oracle::axis_equilibrium_energy(f.mu, c.l3)), f.e3, 1e-14);
    EXPECT_NEAR(double(oracle::l4_energy(f.mu)), f.e4, 1e-14);
}

TEST_P(OracleCase, ClosedFormRatesMatchFrozen) {
    const auto &f = GetParam();
    const auto [lambda, nu] = oracle::saddle_center_rates(f.mu, oracle::collinear(f.mu).l1);
    EXPECT_NEAR(double(lambda), f.lambda, 1e-13);
    EXPECT_NEAR(double(nu), f.nu, 1e-13);
}

TEST_P(OracleCase, AxisJacobianHasClosedFormSpectrum) {
    const auto &f = GetParam();
    const auto x = oracle::collinear(f.mu).l1;
    Eigen::EigenSolver<oracle::Mat4> es(oracle::axis_jacobian(f.mu, x));
    double max_re = 0, max_im = 0;
    for (int i = 0; i < 4; ++i) {
        max_re = std::max(max_re, es.eigenvalues()(i).real());
        max_im = std::max(max_im, es.eigenvalues()(i).imag());
    }
    EXPECT_NEAR(max_re, f.lambda, 1e-12);
    EXPECT_NEAR(max_im, f.nu, 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Frozen, OracleCase, ::testing::ValuesIn(frozen::kCases),
                         [](const auto &info) { return "case" + std::to_string(info.index); });

TEST(OracleExpm, RotationGeneratorGivesExactRotation) {
    oracle::Mat4 a = oracle::Mat4::Zero();
    a(0, 1) = 1.3;
    a(1, 0) = -1.3;
    a(2, 2) = 0.7;
    a(3, 3) = -0.7;
    const double t = 5.0;
    const oracle::Mat4 e = oracle::expm(a * t);
    EXPECT_NEAR(e(0, 0), std::cos(1.3 * t), 1e-14);
    EXPECT_NEAR(e(0, 1), std::sin(1.3 * t), 1e-14);
    EXPECT_NEAR(e(2, 2) / std::exp(0.7 * t), 1.0, 1e-14);
    EXPECT_NEAR(e(3, 3) / std::exp(-0.7 * t), 1.0, 1e-13);
}

TEST(OracleTrueAnomaly, CircularCaseAdvancesUniformly) {
    EXPECT_NEAR(oracle::true_anomaly_rk4(0.0, 0.4, 3.0), 3.4, 1e-14);
}

TEST(OracleTrueAnomaly, FullPeriodAdvancesByTwoPi) {
    EXPECT_NEAR(oracle::true_anomaly_rk4(0.0549006, 0.0, 2.0 * std::numbers::pi),
                2.0 * std::numbers::pi, 1e-12);
}

TEST(OracleFiniteDifference, LinearMapIsReproduced) {
    oracle::Mat4 a;
    a << 1, 2, 3, 4, 0, -1, 5, 2, 7, 1, 0, 3, -2, 4, 1, 1;
    const auto j = oracle::fd_jacobian([&](const oracle::Vec4 &x) { return oracle::Vec4(a * x); },
                                       oracle::Vec4(0.1, 0.2, 0.3, 0.4));
    EXPECT_LT((j - a).cwiseAbs().maxCoeff(), 1e-8);
}

} // namespace
