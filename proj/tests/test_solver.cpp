#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "nlsc/initial_data.hpp"
#include "nlsc/riccati.hpp"
#include "nlsc/solver.hpp"
#include "nlsc/threshold.hpp"

using namespace nlsc;

namespace {

Grid1D periodic(std::size_t n, double length) { return Grid1D::uniform(0.0, length, n, Boundary::Periodic); }

// Runs to time t with the detector off and returns the cell averages.
std::vector<double> solve_to(const FvSolver& s, const InitialData& ic, double t) {
    RunOptions ro;
    ro.t_final = t;
    ro.detector.enabled = false;
    return s.run(s.initial_state(cell_averages(ic, s.grid())), ro).state.u;
}

double l1_to_reference(const std::vector<double>& u, const std::vector<double>& ref, double length) {
    const std::size_t r = ref.size() / u.size();
    double e = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        double avg = 0.0;
        for (std::size_t j = 0; j < r; ++j) avg += ref[i * r + j];
        e += std::abs(u[i] - avg / static_cast<double>(r));
    }
    return e * length / static_cast<double>(u.size());
}

double observed_order(int order) {
    // Amplitude large enough that the CFL step, not the 0.1 gamma cap, sets dt on every grid.
    const double L = 10.0, T = 1.0;
    const auto ic = sine_ic(0.5, 0.3, L);
    auto at = [&](std::size_t n) {
        return solve_to(FvSolver(arrhenius(), KernelSpec::constant(1.0), periodic(n, L), {0.45, order}), ic, T);
    };
    const auto ref = at(6400);
    const double e1 = l1_to_reference(at(200), ref, L), e2 = l1_to_reference(at(400), ref, L);
    return std::log2(e1 / e2);
}

} // namespace

TEST(FvSolver, RejectsBadOptions) {
    EXPECT_THROW(FvSolver(arrhenius(), KernelSpec::constant(1.0), periodic(64, 8.0), {0.0, 1}), DomainError);
    EXPECT_THROW(FvSolver(arrhenius(), KernelSpec::constant(1.0), periodic(64, 8.0), {0.95, 1}), DomainError);
    EXPECT_THROW(FvSolver(arrhenius(), KernelSpec::constant(1.0), periodic(64, 8.0), {0.45, 3}), DomainError);
    const FvSolver s(arrhenius(), KernelSpec::constant(1.0), periodic(64, 8.0));
    EXPECT_THROW(s.initial_state(std::vector<double>(63, 0.5)), DomainError);
    EXPECT_THROW(s.initial_state(std::vector<double>(64, 1.5)), DomainError);
    EXPECT_THROW(s.initial_state(std::vector<double>(64, -0.01)), DomainError);
}

TEST(FvSolver, ConstantStatesAreFixed) {
    for (auto b : {Boundary::Periodic, Boundary::ConstantExtension}) {
        for (int order : {1, 2}) {
            const FvSolver s(arrhenius(), KernelSpec::linear(1.0), Grid1D::uniform(0.0, 8.0, 100, b), {0.45, order});
            for (double c : {0.0, 0.3, 1.0}) {
                auto st = s.initial_state(std::vector<double>(100, c));
                for (int k = 0; k < 50; ++k) {
                    const auto next = s.step(st);
                    for (std::size_t i = 0; i < 100; ++i) ASSERT_NEAR(next.u[i], st.u[i], 1e-14);
                    st = next;
                }
                EXPECT_EQ(st.M, 0.0);
                EXPECT_EQ(st.N, 0.0);
            }
        }
    }
}

TEST(FvSolver, MassAndMaximumPrinciple) {
    const double L = 10.0;
    for (int order : {1, 2}) {
        const FvSolver s(arrhenius(), KernelSpec::constant(1.0), periodic(400, L), {0.45, order});
        auto st = s.initial_state(cell_averages(random_smooth_ic(L, 0.5, 0.45, 8, 5), s.grid()));
        const double m0 = st.mass();
        for (int k = 0; k < 2000; ++k) {
            st = s.step(st);
            ASSERT_GE(st.umin(), -1e-10);
            ASSERT_LE(st.umax(), 1.0 + 1e-10);
        }
        EXPECT_LE(std::abs(st.mass() - m0) / m0, 1e-12) << "order " << order;
    }
}

TEST(FvSolver, TimeStepRespectsCflAndWindow) {
    const FvSolver s(arrhenius(), KernelSpec::constant(0.05), periodic(100, 10.0));
    const auto st = s.initial_state(std::vector<double>(100, 0.5));
    // F_u = 0 at u = 1/2, so only the look-ahead cap 0.1 gamma binds.
    EXPECT_NEAR(s.stable_dt(st), 0.005, 1e-15);
    const FvSolver s2(local_flux(), KernelSpec::constant(1.0), periodic(100, 10.0));
    const auto st2 = s2.initial_state(std::vector<double>(100, 0.0));
    EXPECT_NEAR(s2.stable_dt(st2), 0.45 * 0.1, 1e-15);
}

TEST(FvSolver, FirstOrderConvergence) { EXPECT_GE(observed_order(1), 0.8); }

TEST(FvSolver, SecondOrderConvergence) { EXPECT_GE(observed_order(2), 1.5); }

TEST(FvSolver, NonFiniteUpdateRaisesWithLastValidState) {
    const FvSolver s(arrhenius(), KernelSpec::constant(1.0), periodic(64, 8.0));
    auto st = s.initial_state(std::vector<double>(64, 0.5));
    st.u[3] = std::numeric_limits<double>::quiet_NaN();
    try {
        s.step(st);
        FAIL() << "expected an error";
    } catch (const Error&) {
    }
}

TEST(FvSolver, TraceSlopesMoveContinuously) {
    const FvSolver s(arrhenius(), KernelSpec::constant(1.0), periodic(800, 10.0));
    RunOptions ro;
    ro.t_final = 2.0;
    ro.trace_stride = 1;
    ro.detector.enabled = false;
    const auto r = s.run(s.initial_state(cell_averages(sine_ic(0.5, 0.2, 10.0), s.grid())), ro);
    ASSERT_GT(r.trace.size(), 10u);
    double scale = 0.0;
    for (const auto& row : r.trace) scale = std::max({scale, row.M, -row.N});
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
        EXPECT_LE(std::abs(r.trace[i].M - r.trace[i - 1].M), 0.02 * scale);
        EXPECT_LE(std::abs(r.trace[i].N - r.trace[i - 1].N), 0.02 * scale);
    }
    EXPECT_NEAR(r.trace.back().t, 2.0, 1e-12);
}

TEST(FvSolver, SnapshotsLandOnRequestedTimes) {
    const FvSolver s(arrhenius(), KernelSpec::constant(1.0), periodic(200, 10.0));
    RunOptions ro;
    ro.t_final = 1.0;
    ro.snapshot_times = {0.0, 0.333, 1.0};
    ro.detector.enabled = false;
    const auto r = s.run(s.initial_state(cell_averages(sine_ic(0.5, 0.2, 10.0), s.grid())), ro);
    ASSERT_EQ(r.snapshots.size(), 3u);
    EXPECT_DOUBLE_EQ(r.snapshots[0].t, 0.0);
    EXPECT_NEAR(r.snapshots[1].t, 0.333, 1e-12);
    EXPECT_NEAR(r.snapshots[2].t, 1.0, 1e-12);
    EXPECT_EQ(r.snapshots[1].x.size(), 200u);
}

TEST(Detector, CeilingRule) {
    DetectorConfig d;
    EXPECT_EQ(d.ceiling(1.0, 0.0, 0.01), std::numeric_limits<double>::infinity());
    EXPECT_DOUBLE_EQ(d.ceiling(1.0, 0.6, 0.01), 12.0);
    EXPECT_DOUBLE_EQ(d.ceiling(1.0, 0.6, 1e-6), 1e3);
    EXPECT_DOUBLE_EQ(d.ceiling(20.0, 0.6, 1e-6), 2e3);
    d.slope_ceiling = 7.0;
    EXPECT_DOUBLE_EQ(d.ceiling(1.0, 0.6, 0.01), 7.0);
}

TEST(Detector, GrowthGuard) {
    DetectorConfig d;
    EXPECT_TRUE(d.growing(std::vector<double>{1, 3, 2, 4}));
    EXPECT_FALSE(d.growing(std::vector<double>{1, 5, 2, 4}));
    EXPECT_FALSE(d.growing(std::vector<double>{4, 3, 2, 4}));
    d.strict_monotone = true;
    EXPECT_FALSE(d.growing(std::vector<double>{1, 3, 2, 4}));
    EXPECT_TRUE(d.growing(std::vector<double>{1, 2, 3, 4}));
}

TEST(Detector, LocalFluxShockTime) {
    // Characteristics of u_t + (u(1-u))_x = 0 cross at 1 / (2 max u0') for u0 = 0.5 + 0.25 sin(2 pi x).
    const FvSolver s(local_flux(), KernelSpec::constant(0.25), periodic(1600, 1.0));
    RunOptions ro;
    ro.t_final = 1.0;
    const auto r = s.run(s.initial_state(cell_averages(sine_ic(0.5, 0.25, 1.0), s.grid())), ro);
    ASSERT_TRUE(r.event.detected);
    EXPECT_EQ(r.event.criterion, BlowupCriterion::SlopeCeiling);
    EXPECT_NEAR(*r.event.t_blowup / (1.0 / std::numbers::pi), 1.0, 0.1);
    EXPECT_GE(r.event.peak_slope, r.ceiling);
}

TEST(Detector, SmoothAndDisabledRunsReportNothing) {
    const FvSolver s(arrhenius(), KernelSpec::constant(1.0), periodic(400, 10.0));
    RunOptions ro;
    ro.t_final = 1.0;
    auto r = s.run(s.initial_state(std::vector<double>(400, 0.4)), ro);
    EXPECT_FALSE(r.event.detected);
    EXPECT_FALSE(r.event.t_blowup.has_value());

    const FvSolver l(local_flux(), KernelSpec::constant(0.25), periodic(800, 1.0));
    ro.detector.enabled = false;
    r = l.run(l.initial_state(cell_averages(sine_ic(0.5, 0.25, 1.0), l.grid())), ro);
    EXPECT_FALSE(r.event.detected);
}

// M(t) from the PDE must stay above the Riccati lower solution started at
// M(0) with a = 2 e^{-max u0} and roots b1 < b2 = threshold.
TEST(Comparison, PdeSlopeDominatesRiccatiSolution) {
    const double gamma = 1.0;
    const auto ic = tanh_front_ic(0.2, 0.8, 2.0, 0.0);
    const FvSolver s(arrhenius(), KernelSpec::constant(gamma),
                     Grid1D::uniform(-8.0, 16.0, 3200, Boundary::ConstantExtension));
    RunOptions ro;
    ro.t_final = 0.35;
    ro.trace_stride = 1;
    ro.detector.enabled = false;
    const auto r = s.run(s.initial_state(cell_averages(ic, s.grid())), ro);

    const double n0 = ntilde0_constant(gamma, ic.inf_slope);
    const double b2 = threshold_constant(gamma, ic.inf_slope);
    const double b1 = 1.0 / gamma - b2; // roots of 2M^2 - (2/gamma) M - (1 - n0)/(4 gamma^2) sum to 1/gamma
    EXPECT_NEAR(2 * b1 * b1 - 2 * b1 / gamma - (1 - n0) / (4 * gamma * gamma), 0.0, 1e-12);
    const auto p = RiccatiProblem::constant(2.0 * std::exp(-0.8), b1, b2, r.trace.front().M, ro.t_final);
    const auto sol = riccati_solve(p);

    std::vector<double> bt, bv;
    for (const auto& row : r.trace) {
        bt.push_back(row.t);
        bv.push_back(row.M);
    }
    const auto rep = riccati_compare(p, sol, bt, bv);
    EXPECT_GT(rep.compared, 50u);
    EXPECT_TRUE(rep.ok()) << rep.violations.size() << " violations, first at t=" << rep.violations.front().t;
}
