#include <cmath>

#include <gtest/gtest.h>

#include "nlsc/threshold.hpp"

using namespace nlsc;

TEST(Threshold, ClosedFormsAtUnitWindow) {
    EXPECT_NEAR(threshold_constant(1.0, 0.0), 0.5 + std::sqrt(2.0) / 4.0 * 2.0, 1e-15);
    EXPECT_NEAR(threshold_constant(1.0, 0.0), 1.207107, 1e-6);
    EXPECT_NEAR(threshold_linear(1.0, 0.0), 2.414214, 1e-6);
    EXPECT_NEAR(threshold_constant(2.0, -3.0), 0.5 * (0.5 + std::sqrt(2.0) / 4.0 * 3.0), 1e-15);
    EXPECT_NEAR(threshold_linear(0.5, -10.0), 2.0 * (1.0 + 0.5 * std::sqrt(11.0)), 1e-14);
}

TEST(Threshold, FlatBelowTheKnee) {
    // inf slope only matters once gamma * inf < -1 (constant) or < -2 (linear).
    EXPECT_DOUBLE_EQ(threshold_constant(1.0, -0.5), threshold_constant(1.0, 0.0));
    EXPECT_DOUBLE_EQ(threshold_linear(1.0, -1.9), threshold_linear(1.0, 0.0));
    EXPECT_GT(threshold_constant(1.0, -1.5), threshold_constant(1.0, -1.0));
    EXPECT_DOUBLE_EQ(ntilde0_constant(2.0, -1.0), -2.0);
    EXPECT_DOUBLE_EQ(ntilde0_linear(1.0, -1.0), -2.0);
}

TEST(Threshold, LinearAlwaysAboveConstant) {
    for (int i = 0; i < 50; ++i) {
        for (int j = 0; j < 50; ++j) {
            const double gamma = 0.05 + 4.95 * i / 49.0, inf = -10.0 * j / 49.0;
            EXPECT_GT(threshold_linear(gamma, inf), threshold_constant(gamma, inf));
        }
    }
}

TEST(Threshold, RejectsNonPositiveWindow) {
    EXPECT_THROW(threshold_constant(0.0, 0.0), DomainError);
    EXPECT_THROW(threshold_linear(-1.0, 0.0), DomainError);
}

TEST(Threshold, Classify) {
    const auto r = classify(Potential::Constant, 1.0, 1.3, 0.0);
    EXPECT_TRUE(r.above);
    EXPECT_EQ(r.model, "constant");
    EXPECT_FALSE(classify(Potential::Linear, 1.0, 1.3, 0.0).above);
    EXPECT_FALSE(classify(Potential::Constant, 1.0, threshold_constant(1.0, 0.0), 0.0).above);
}

TEST(OmegaBox, MaximaAndBound) {
    const auto c = omega_box_maxima(Potential::Constant, 401);
    EXPECT_NEAR(c.max1, 2.0, 1e-3);
    EXPECT_TRUE(c.max2_within_bound);
    const auto l = omega_box_maxima(Potential::Linear, 401);
    EXPECT_NEAR(l.max1, 4.0, 1e-3);
    EXPECT_TRUE(l.max2_within_bound);
}

TEST(OmegaBox, N1LowerBounds) {
    EXPECT_GE(min_n1_scaled(Potential::Constant, 401).value, -1.0 - 1e-9);
    EXPECT_NEAR(min_n1_scaled(Potential::Constant, 401).value, -1.0, 1e-9);
    EXPECT_GE(min_n1_scaled(Potential::Linear, 401).value, -2.0 - 1e-9);
}

TEST(OmegaBox, M2BelowClosedForm) {
    for (double n0 : {-1.0, -3.0}) {
        EXPECT_LE(max_m2_scaled(Potential::Constant, n0, 401).value, threshold_constant(1.0, n0) + 1e-9);
        EXPECT_LE(max_m2_scaled(Potential::Linear, std::min(n0, -2.0), 401).value, threshold_linear(1.0, n0) + 1e-9);
    }
    EXPECT_NEAR(max_m2_scaled(Potential::Linear, -2.0, 401).value, 2.0, 1e-9);
}

TEST(GeneralLambda, ConstantKernelSharpBox) {
    const auto r = general_lambda(arrhenius(), KernelSpec::constant(1.0), -1.0, 201, SlopeBox::Sharp);
    EXPECT_EQ(r.box, "sharp");
    EXPECT_DOUBLE_EQ(r.box_half_width, 1.0);
    EXPECT_NEAR(r.threshold, 1.0, 1e-3);
    EXPECT_LE(r.threshold, threshold_constant(1.0, -1.0) + 1e-9);
    EXPECT_GE(r.threshold, 0.8 * threshold_constant(1.0, -1.0));
    EXPECT_DOUBLE_EQ(r.ntilde0, -1.0);
    ASSERT_TRUE(r.maximizer_u && r.maximizer_v);
}

TEST(GeneralLambda, NonIncreasingInN0) {
    const auto k = KernelSpec::linear(1.0);
    double prev = INFINITY;
    for (double n0 : {-6.0, -4.0, -2.0, -1.0, 0.0}) {
        const double lam = general_lambda(arrhenius(), k, n0, 151).threshold;
        EXPECT_LE(lam, prev + 1e-12);
        prev = lam;
    }
}

TEST(GeneralLambda, Errors) {
    EXPECT_THROW(general_lambda(arrhenius(), KernelSpec::constant(1.0), -1.0, 50), DomainError);
    FluxModel bad = arrhenius();
    bad.F_ub = [](double u, double ub) { return u * (1 - u) * std::exp(-ub); };
    EXPECT_THROW(general_lambda(bad, KernelSpec::constant(1.0), -1.0, 201), ValidationError);
    EXPECT_THROW(detail::clamped_sqrt(-1e-6), FormulaError);
    EXPECT_DOUBLE_EQ(detail::clamped_sqrt(-1e-13), 0.0);
    FluxModel flat = arrhenius();
    flat.F_uu = [](double, double) { return 0.0; };
    EXPECT_THROW(n1_general(flat, 0.5, 0.0, 0.0), FormulaError);
}
