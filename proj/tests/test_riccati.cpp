#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "nlsc/riccati.hpp"

using namespace nlsc;

TEST(Riccati, ClosedFormBlowupTimes) {
    EXPECT_NEAR(riccati_closed_form_blowup(1.0, 0.0, 1.0, 2.0), std::numbers::ln2, 1e-15);
    EXPECT_NEAR(riccati_closed_form_blowup(2.0, 1.0, 1.0, 3.0), 0.25, 1e-15);
    EXPECT_TRUE(std::isinf(riccati_closed_form_blowup(1.0, 0.0, 1.0, 1.0)));
    EXPECT_TRUE(std::isinf(riccati_closed_form_blowup(1.0, 0.0, 1.0, 0.5)));
}

TEST(Riccati, NumericBlowupMatchesClosedForm) {
    const auto sol = riccati_solve(RiccatiProblem::constant(1.0, 0.0, 1.0, 2.0, 5.0));
    ASSERT_TRUE(sol.blowup_time.has_value());
    EXPECT_NEAR(*sol.blowup_time, std::numbers::ln2, 1e-4 * std::numbers::ln2);
    EXPECT_NEAR(sol.extrapolated_c, 1.0, 1e-2); // A ~ 1/(a (t* - t))
    EXPECT_LT(sol.t.back(), *sol.blowup_time);
}

TEST(Riccati, BoundedSolutionsStayBetweenRoots) {
    for (double A0 : {-3.0, -0.5, 0.2, 0.99}) {
        const auto sol = riccati_solve(RiccatiProblem::constant(1.5, -0.5, 1.0, A0, 20.0));
        EXPECT_FALSE(sol.blowup_time.has_value());
        EXPECT_NEAR(sol.t.back(), 20.0, 1e-9);
        for (double A : sol.A) {
            EXPECT_GE(A, std::min(A0, -0.5) - 1e-9);
            EXPECT_LE(A, 1.0 + 1e-9);
        }
        EXPECT_NEAR(sol.A.back(), -0.5, 1e-6); // attracted to the lower root
    }
}

TEST(Riccati, TimeDependentCoefficients) {
    RiccatiProblem p{[](double t) { return 1.0 + 0.5 * std::sin(t); }, [](double) { return 0.0; },
                     [](double t) { return 0.5 + 0.1 * t; }, 0.4, 10.0};
    const auto sol = riccati_solve(p);
    EXPECT_FALSE(sol.blowup_time.has_value());
    for (double A : sol.A) {
        EXPECT_GE(A, -1e-9);
        EXPECT_LE(A, 1.5 + 1e-9);
    }
}

TEST(Riccati, Validation) {
    EXPECT_THROW(riccati_solve(RiccatiProblem::constant(0.0, 0.0, 1.0, 2.0, 1.0)), ValidationError);
    EXPECT_THROW(riccati_solve(RiccatiProblem::constant(1.0, 2.0, 1.0, 2.0, 1.0)), ValidationError);
    EXPECT_THROW(riccati_solve(RiccatiProblem::constant(1.0, 0.0, 1.0, 2.0, 0.0)), ValidationError);
    RiccatiProblem unbounded{[](double t) { return 1.0 / (1.0 - t); }, [](double) { return 0.0; },
                             [](double) { return 1.0; }, 0.5, 1.0};
    EXPECT_THROW(riccati_solve(unbounded), ValidationError);
}

TEST(Riccati, ComparisonFlagsTracesBelowTheSolution) {
    const auto p = RiccatiProblem::constant(1.0, 0.0, 1.0, 2.0, 0.6);
    const auto sol = riccati_solve(p);
    std::vector<double> t, above, below;
    for (int i = 0; i <= 60; ++i) {
        const double ti = 0.01 * i;
        const double exact = 2.0 / (2.0 - std::exp(ti)); // A(t) for these coefficients
        t.push_back(ti);
        above.push_back(exact * 1.01);
        below.push_back(exact * 0.99);
    }
    const auto ok = riccati_compare(p, sol, t, above);
    EXPECT_EQ(ok.compared, 61u);
    EXPECT_TRUE(ok.ok());
    const auto bad = riccati_compare(p, sol, t, below);
    EXPECT_FALSE(bad.ok());
    EXPECT_GE(bad.violations.size(), 50u);
    EXPECT_THROW(riccati_compare(p, sol, t, std::vector<double>(3, 0.0)), DomainError);
}
