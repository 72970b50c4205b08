#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace ptransit;

namespace {

EffectiveHamiltonian sample_eh() { return {2.9268, 0.4617, 6.79}; }

TEST(ClassifyLocal, SignOfSaddleProductDecides) {
    EXPECT_EQ(classify_local({1e-4, 2e-4, 0, 0}), LocalClass::Transit);
    EXPECT_EQ(classify_local({-1e-4, -2e-4, 0, 0}), LocalClass::Transit);
    EXPECT_EQ(classify_local({1e-4, -2e-4, 0, 0}), LocalClass::NonTransit);
    EXPECT_EQ(classify_local({0, 1e-4, 3e-4, 0}), LocalClass::Asymptotic);
    EXPECT_EQ(classify_local({0, 0, 3e-4, 1e-4}), LocalClass::Center);
}

TEST(Boundary, SamplesLieOnTheLineAndTheEnergySurface) {
    const auto eh = sample_eh();
    const double h = 1e-6, c = 1e-4;
    for (auto side : {BoundarySide::N1, BoundarySide::N2}) {
        const auto set = boundary_set(eh, h, c, 40, side, 0.3);
        ASSERT_EQ(set.transit.size(), 40u);
        ASSERT_EQ(set.nontransit.size(), 40u);
        const double sign = side == BoundarySide::N1 ? 1.0 : -1.0;
        for (const auto *v : {&set.transit, &set.nontransit}) {
            for (const auto &s : *v) {
                EXPECT_NEAR(s.p1 - s.q1, sign * c, 1e-14);
                EXPECT_NEAR(local_energy(eh, s), h, 1e-14);
            }
        }
        for (const auto &s : set.transit) EXPECT_EQ(classify_local(s), LocalClass::Transit);
        for (const auto &s : set.nontransit) EXPECT_EQ(classify_local(s), LocalClass::NonTransit);
        EXPECT_EQ(classify_local(set.asymptotic), LocalClass::Asymptotic);
    }
}

TEST(Boundary, TransitEndpointHasNoCenterEnergy) {
    const auto eh = sample_eh();
    const auto set = boundary_set(eh, 1e-6, 1e-4, 10);
    const auto &end = set.transit.back();
    EXPECT_NEAR(std::hypot(end.q2, end.p2), 0.0, 1e-9);
    EXPECT_NEAR(eh.lambda_tilde * end.q1 * end.p1, 1e-6, 1e-18);
}

TEST(Boundary, SideSwapMirrorsTheSaddlePlane) {
    const auto eh = sample_eh();
    const auto a = boundary_set(eh, 1e-6, 1e-4, 5, BoundarySide::N1);
    const auto b = boundary_set(eh, 1e-6, 1e-4, 5, BoundarySide::N2);
    for (int i = 0; i < 5; ++i) {
        EXPECT_EQ(a.transit[i].q1, -b.transit[i].q1);
        EXPECT_EQ(a.transit[i].q2, b.transit[i].q2);
    }
}

TEST(Boundary, InvalidInputsAreRejected) {
    const auto eh = sample_eh();
    EXPECT_THROW(boundary_set(eh, 0.0, 1e-4, 5), ValidationError);
    EXPECT_THROW(boundary_set(eh, 1e-6, -1.0, 5), ValidationError);
    EXPECT_THROW(boundary_set(eh, 1e-6, 1e-4, 0), ValidationError);
}

TEST(Boundary, CircleSweepKeepsRadius) {
    const auto set = boundary_set(sample_eh(), 1e-6, 1e-4, 3);
    const auto swept = sweep_circle(set.transit, 8);
    ASSERT_EQ(swept.size(), 24u);
    for (int i = 0; i < 24; ++i) {
        const auto &src = set.transit[i / 8];
        EXPECT_NEAR(std::hypot(swept[i].q2, swept[i].p2), std::hypot(src.q2, src.p2), 1e-18);
    }
}

TEST(Lift, OriginMapsToTheFixedPoint) {
    const auto &r = fixtures::bcp();
    const auto f = phase_frame(r.basis, r.orbit, 0.0);
    EXPECT_EQ(to_physical(f, LocalState{}), r.orbit.x_bar);
}

TEST(Lift, RoundTripThroughPhysicalCoordinates) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1e-4, 1e-4);
    for (const auto *r : {&fixtures::bcp(), &fixtures::er3bp()}) {
        for (double theta : {0.0, std::numbers::pi / 3}) {
            const auto f = phase_frame(r->basis, r->orbit, theta);
            for (int i = 0; i < 50; ++i) {
                const LocalState s{u(rng), u(rng), u(rng), u(rng)};
                const LocalState back = to_local(f, to_physical(f, s));
                EXPECT_LT((back.vec() - s.vec()).norm(), 1e-12);
            }
        }
    }
}

TEST(Lift, TransportedFrameStaysSymplectic) {
    const auto &r = fixtures::er3bp();
    const auto f = phase_frame(r.basis, r.orbit, 2.0 * std::numbers::pi / 3);
    EXPECT_LT((f.c.transpose() * physical_j() * f.c - local_j()).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((propagate(r.orbit.model, r.orbit.x_bar, 0.0, f.time) - f.x_bar).norm(), 1e-9);
}

TEST(Lift, LargeDisplacementsAreFlagged) {
    EXPECT_FALSE(exceeds_linear_bound({1e-4, 1e-4, 0, 0}));
    EXPECT_TRUE(exceeds_linear_bound({2e-2, 0, 0, 0}));
}

int mismatches(const fixtures::Reduced &r, double h, double c, double theta, BoundarySide side, int n) {
    const auto set = boundary_set(r.eh, h, c, n, side);
    const auto f = phase_frame(r.basis, r.orbit, theta);
    const auto win = TransitWindow::around_l1(r.orbit.model);
    int bad = 0;
    for (const auto *v : {&set.transit, &set.nontransit})
        for (const auto &s : *v) {
            TransitWindow w = win;
            w.keep_trajectory = false;
            const auto out = verify_transit(r.orbit.model, to_physical(f, s), theta, w);
            if (expected_outcome(classify_local(s)) != out.classification) ++bad;
        }
    return bad;
}

TEST(Verify, BcpEarthToMoonLineAgreesWithTheLinearModel) {
    EXPECT_EQ(mismatches(fixtures::bcp(), 1e-6, 1e-4, 0.0, BoundarySide::N1, 12), 0);
}

TEST(Verify, Er3bpAgreesAtAShiftedPhase) {
    EXPECT_EQ(mismatches(fixtures::er3bp(), 1e-8, 4e-5, std::numbers::pi / 3, BoundarySide::N2, 12), 0);
}

TEST(Verify, TransitCrossesBetweenRealms) {
    const auto &r = fixtures::bcp();
    const auto set = boundary_set(r.eh, 1e-6, 1e-4, 4, BoundarySide::N1);
    const auto f = phase_frame(r.basis, r.orbit, 0.0);
    const auto out = verify_transit(r.orbit.model, to_physical(f, set.transit[1]), 0.0,
                                    TransitWindow::around_l1(r.orbit.model));
    EXPECT_EQ(out.classification, TransitClass::Transit);
    EXPECT_NE(out.entry_side, out.exit_side);
    EXPECT_GT(out.exit_time, 0.0);
    EXPECT_LT(out.entry_time, 0.0);
    ASSERT_GT(out.trajectory.size(), 2u);
    for (std::size_t i = 1; i < out.trajectory.size(); ++i)
        EXPECT_GT(out.trajectory.times[i], out.trajectory.times[i - 1]);
}

TEST(Verify, FixedPointItselfStaysBounded) {
    const auto &r = fixtures::er3bp();
    TransitWindow w = TransitWindow::around_l1(r.orbit.model);
    w.max_time = r.orbit.period;
    const auto out = verify_transit(r.orbit.model, r.orbit.x_bar, 0.0, w);
    EXPECT_EQ(out.classification, TransitClass::Bounded);
}

TEST(Verify, CollisionIsUndecided) {
    const Model m = Model(BcpParams{}).with_collision_radius(1e-2);
    TransitWindow w = TransitWindow::around_l1(m);
    w.half_width = 0.5;
    const auto out = verify_transit(m, PhaseState(0.97, 0.0, 0.0, 0.97), 0.0, w);
    EXPECT_EQ(out.classification, TransitClass::Undecided);
    EXPECT_FALSE(out.note.empty());
}

TEST(Cap, GridHasEveryPointInTheTransitClass) {
    const auto &r = fixtures::bcp();
    const auto f = phase_frame(r.basis, r.orbit, 0.0);
    const auto cap = transit_cap(f, r.eh, 1e-6, 1e-4, 20, 16);
    ASSERT_EQ(cap.size(), 320u);
    for (const auto &p : cap) {
        EXPECT_EQ(classify_local(p.local), LocalClass::Transit);
        EXPECT_NEAR(local_energy(r.eh, p.local), 1e-6, 1e-14);
    }
}

TEST(Iterate, SaddleBlockScalesBySigma) {
    const LocalState s{1e-6, 2e-6, 3e-6, 0};
    const auto a = apply_normal_form(s, 5.0, 0.5, 2);
    EXPECT_NEAR(a.q1, 25e-6, 1e-18);
    EXPECT_NEAR(a.p1, 2e-6 / 25, 1e-20);
    EXPECT_NEAR(std::hypot(a.q2, a.p2), 3e-6, 1e-20);
    const auto back = apply_normal_form(a, 5.0, 0.5, -2);
    EXPECT_LT((back.vec() - s.vec()).norm(), 1e-20);
}

TEST(Iterate, CountToLeaveTheStrip) {
    EXPECT_EQ(iterates_to_exceed(1e-9, 1e-4, 10.0), 5);
    EXPECT_EQ(iterates_to_exceed(1e-12, 1e-4, 4.2874e8), 1);
    EXPECT_THROW(iterates_to_exceed(0.0, 1e-4, 10.0), ValidationError);
}

TEST(Iterate, TransitPointsCrossTheStripAndNonTransitPointsDoNot) {
    NormalForm nf;
    nf.sigma = 10.0;
    nf.psi = 1.0;
    const double c = 1e-4;
    const auto set = boundary_set({std::log(10.0), 1.0, 1.0}, 1e-9, c, 10, BoundarySide::N2);
    // Forward images of n2 transit points end up beyond n1; non-transit
    // points leave through n2 again.
    for (const auto &s : set.transit) {
        EXPECT_TRUE(iterate_region(s, nf, 8, c).crossed_opposite);
        EXPECT_FALSE(iterate_region(s, nf, -8, c).crossed_opposite);
    }
    for (const auto &s : set.nontransit) {
        EXPECT_FALSE(iterate_region(s, nf, 8, c).crossed_opposite);
        EXPECT_FALSE(iterate_region(s, nf, -8, c).crossed_opposite);
    }
}

TEST(Iterate, LinearMapPreservesClassAndEnergy) {
    const auto &r = fixtures::bcp();
    const auto set = boundary_set(r.eh, 1e-6, 1e-4, 20);
    for (const auto *v : {&set.transit, &set.nontransit})
        for (const auto &s : *v)
            for (int k : {-1, 1}) {
                const auto img = apply_normal_form(s, r.nf.sigma, r.basis.psi_basis, k);
                EXPECT_EQ(classify_local(img), classify_local(s));
                EXPECT_NEAR(local_energy(r.eh, img), local_energy(r.eh, s), 1e-16);
            }
}

} // namespace
