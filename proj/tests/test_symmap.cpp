#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace ptransit;

namespace {

// Maps local (q1, p1, q2, p2) to physical (x, y, px, py) ordering symplectically.
Mat4 local_to_physical() {
    Mat4 p = Mat4::Zero();
    p(0, 0) = 1;
    p(2, 1) = 1;
    p(1, 2) = 1;
    p(3, 3) = 1;
    return p;
}

Mat4 random_symplectic(unsigned seed, double scale = 0.4) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Mat4 b;
    for (int i = 0; i < 16; ++i) b(i) = g(rng);
    const Mat4 sym = b + b.transpose();
    return oracle::expm(physical_j() * sym * scale);
}

Mat4 conjugated(double sigma, double psi, unsigned seed) {
    const Mat4 s = random_symplectic(seed) * local_to_physical();
    return s * normal_form_matrix(sigma, psi) * s.inverse();
}

TEST(NormalFormMatrix, IsSymplecticInLocalOrdering) {
    const Mat4 l = normal_form_matrix(7.5, 1.1);
    EXPECT_LT((l.transpose() * local_j() * l - local_j()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(NormalForm, RecoversSigmaAndPsiFromLambda) {
    const auto nf = normal_form(normal_form_matrix(2.0, 1.0), 1.0);
    EXPECT_NEAR(nf.sigma, 2.0, 1e-14);
    EXPECT_NEAR(nf.psi, 1.0, 1e-14);
}

TEST(NormalForm, LambdaItselfHasIdentityBasis) {
    const Mat4 l = normal_form_matrix(3.0, 0.8);
    const auto nf = normal_form(l, 1.0);
    const auto b = symplectic_eigenbasis(l, nf, std::nullopt, local_j());
    EXPECT_LT((b.c - Mat4::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(b.psi_basis, 0.8, 1e-12);
}

TEST(NormalForm, ConjugatedMapsAreReduced) {
    for (unsigned seed = 1; seed <= 20; ++seed) {
        const double sigma = 1.5 + seed, psi = 0.15 * seed;
        const Mat4 m = conjugated(sigma, psi, seed);
        const auto nf = normal_form(m, 2.0);
        EXPECT_NEAR(nf.sigma / sigma, 1.0, 1e-10);
        EXPECT_NEAR(nf.psi, psi, 1e-10);
        const auto b = symplectic_eigenbasis(m, nf);
        EXPECT_NEAR(b.psi_basis, psi, 1e-10);
        const auto res = eigenbasis_residuals(m, nf, b);
        EXPECT_LT(res.symplectic, 1e-9);
        EXPECT_LT(res.similarity, 1e-9);
    }
}

TEST(NormalForm, KreinSignatureFixesTheRotationSense) {
    // Same multipliers, opposite rotation: psi stays in (0, pi) but the
    // realizable block turns the other way.
    const double psi = 1.2;
    const Mat4 m = conjugated(4.0, kTwoPi - psi, 7);
    const auto nf = normal_form(m, 1.0);
    EXPECT_NEAR(nf.psi, psi, 1e-10);
    const auto b = symplectic_eigenbasis(m, nf);
    EXPECT_NEAR(b.psi_basis, kTwoPi - psi, 1e-10);
    EXPECT_LT(eigenbasis_residuals(m, nf, b).similarity, 1e-9);
}

TEST(NormalForm, IntegratedInverseGivesTheSameBasis) {
    const Mat4 m = conjugated(50.0, 2.0, 3);
    const auto nf = normal_form(m, 1.0);
    const auto a = symplectic_eigenbasis(m, nf);
    const auto b = symplectic_eigenbasis(m, nf, Mat4(m.inverse()));
    EXPECT_LT((a.c - b.c).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(NormalForm, RejectsWrongSpectra) {
    // fully elliptic
    Mat4 r = Mat4::Identity();
    r.block<2, 2>(0, 0) << std::cos(0.3), std::sin(0.3), -std::sin(0.3), std::cos(0.3);
    r.block<2, 2>(2, 2) << std::cos(1.3), std::sin(1.3), -std::sin(1.3), std::cos(1.3);
    EXPECT_THROW(normal_form(r, 1.0), ClassificationError);
    // fully hyperbolic
    Mat4 h = Mat4::Zero();
    h.diagonal() << 3.0, 1.0 / 3.0, 5.0, 0.2;
    EXPECT_THROW(normal_form(h, 1.0), ClassificationError);
    // unit-circle pair at -1 and at +1
    EXPECT_THROW(normal_form(normal_form_matrix(3.0, std::numbers::pi), 1.0), ClassificationError);
    EXPECT_THROW(normal_form(normal_form_matrix(3.0, 0.0), 1.0), ClassificationError);
    // sigma too close to 1
    EXPECT_THROW(normal_form(normal_form_matrix(1.0 + 1e-10, 1.0), 1.0), ClassificationError);
    // not symplectic
    Mat4 n = normal_form_matrix(3.0, 1.0);
    n(0, 0) *= 2.0;
    EXPECT_THROW(normal_form(n, 1.0), ValidationError);
    EXPECT_THROW(normal_form(normal_form_matrix(3.0, 1.0), 0.0), ValidationError);
}

TEST(EffectiveHamiltonian, RatesFollowTheMultipliers) {
    NormalForm nf;
    nf.sigma = std::exp(2.0);
    nf.psi = 0.5;
    const auto eh = effective_hamiltonian(nf, 2.0);
    EXPECT_NEAR(eh.lambda_tilde, 1.0, 1e-15);
    EXPECT_NEAR(eh.nu_tilde, 0.25, 1e-15);
    nf.sigma = 1.0;
    EXPECT_THROW(effective_hamiltonian(nf, 2.0), ValidationError);
    nf.sigma = 2.0;
    EXPECT_THROW(effective_hamiltonian(nf, -1.0), ValidationError);
}

TEST(EffectiveHamiltonian, GeneratorExponentiatesToLambda) {
    for (double psi : {0.1, 1.0, 2.5, 3.1}) {
        NormalForm nf;
        nf.sigma = 1e8;
        nf.psi = psi;
        nf.lambda_matrix = normal_form_matrix(nf.sigma, psi);
        const auto eh = effective_hamiltonian(nf, 6.79);
        EXPECT_LT(verify_proposition_1(eh, nf), 1e-12);
        const Mat4 ref = oracle::expm(eh.generator() * eh.period);
        EXPECT_LT((ref - nf.lambda_matrix).norm() / nf.lambda_matrix.norm(), 1e-12);
    }
}

TEST(EffectiveHamiltonian, ZeroRotationEdgeCase) {
    NormalForm nf;
    nf.sigma = 10.0;
    nf.psi = 0.0;
    nf.lambda_matrix = normal_form_matrix(10.0, 0.0);
    const auto eh = effective_hamiltonian(nf, 1.0);
    EXPECT_EQ(eh.nu_tilde, 0.0);
    EXPECT_LT(verify_proposition_1(eh, nf), 1e-14);
}

TEST(EffectiveHamiltonian, LambdaPreservesTheQuadraticHamiltonian) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1e-3, 1e-3);
    NormalForm nf;
    nf.sigma = 4.2874e8;
    nf.psi = 3.0273;
    const auto eh = effective_hamiltonian(nf, 6.79);
    for (int i = 0; i < 200; ++i) {
        const Vec4 q(u(rng), u(rng), u(rng), u(rng));
        const Vec4 lq = normal_form_matrix(nf.sigma, nf.psi) * q;
        const double h0 = eh(q), h1 = eh(lq);
        EXPECT_NEAR(h1, h0, 1e-12 * (std::abs(eh.lambda_tilde * q(0) * q(1)) + eh.nu_tilde * q.squaredNorm()));
    }
}

struct SpectrumCase {
    const char *name;
    const fixtures::Reduced &(*get)();
    double sigma, psi;
};

void PrintTo(const SpectrumCase &c, std::ostream *os) { *os << c.name; }

class PipelineSpectrum : public ::testing::TestWithParam<SpectrumCase> {};

TEST_P(PipelineSpectrum, MatchesReferenceMultipliers) {
    const auto &c = GetParam();
    const auto &r = c.get();
    EXPECT_NEAR(r.nf.sigma / c.sigma, 1.0, 1e-3);
    EXPECT_NEAR(r.nf.psi, c.psi, 1e-3);
}

TEST_P(PipelineSpectrum, EigenbasisIsSymplecticAndDiagonalizing) {
    const auto &r = GetParam().get();
    const auto res = eigenbasis_residuals(r.m, r.nf, r.basis);
    EXPECT_LT(res.symplectic, 1e-8);
    EXPECT_LT(res.similarity, 1e-6);
    // the saddle and center blocks decouple
    const Mat4 g = r.basis.c.inverse() * r.m * r.basis.c;
    const double upper = g.topRightCorner(2, 2).cwiseAbs().maxCoeff();
    const double lower = g.bottomLeftCorner(2, 2).cwiseAbs().maxCoeff();
    EXPECT_LT(upper, 1e-6 * r.nf.sigma);
    EXPECT_LT(lower, 1e-6);
}

TEST_P(PipelineSpectrum, RotationSenseIsEitherPsiOrItsComplement) {
    const auto &r = GetParam().get();
    const double direct = std::abs(r.basis.psi_basis - r.nf.psi);
    const double flipped = std::abs(r.basis.psi_basis - (kTwoPi - r.nf.psi));
    // two estimators of one angle; the eigenvalue route carries eps * |M|
    EXPECT_LT(std::min(direct, flipped), 1e-7);
}

TEST_P(PipelineSpectrum, MultipliersAreReciprocal) {
    const auto &r = GetParam().get();
    EXPECT_LT(spectrum(r.m, r.m_inv).reciprocity, 1e-8);
    EXPECT_LT(verify_proposition_1(r.eh, r.nf), 1e-9);
}

INSTANTIATE_TEST_SUITE_P(Models, PipelineSpectrum,
                         ::testing::Values(SpectrumCase{"bcp", &fixtures::bcp, 4.2874e8, 3.0273},
                                           SpectrumCase{"er3bp", &fixtures::er3bp, 8.3659e7, 1.9863}),
                         [](const auto &info) { return std::string(info.param.name); });

} // namespace
