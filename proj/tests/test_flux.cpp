#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "nlsc/flux.hpp"

using namespace nlsc;

TEST(Flux, ArrheniusValues) {
    const auto f = arrhenius();
    const auto v = flux_and_wavespeed(f, 0.25, 0.5);
    EXPECT_NEAR(v.F, 0.25 * 0.75 * std::exp(-0.5), 1e-15);
    EXPECT_NEAR(v.F, 0.1137245, 1e-6);
    EXPECT_NEAR(v.F_u, 0.303265, 1e-6);
    EXPECT_DOUBLE_EQ(f.F(0.0, 3.0), 0.0);
    EXPECT_DOUBLE_EQ(f.F(1.0, -2.0), 0.0);
}

TEST(Flux, LocalIgnoresNonlocalArgument) {
    const auto f = local_flux();
    EXPECT_FALSE(f.nonlocal);
    EXPECT_DOUBLE_EQ(f.F(0.3, 0.0), f.F(0.3, 5.0));
    EXPECT_DOUBLE_EQ(f.F_u(0.5, 1.0), 0.0);
}

TEST(Flux, PartialsAgreeWithFiniteDifferences) {
    for (const auto& f : {arrhenius(), local_flux(), arrhenius(2.0)}) {
        const auto chk = check_partials(f, 2.0);
        EXPECT_TRUE(chk.ok()) << f.name << " worst " << chk.worst_partial << " " << chk.max_rel_error;
    }
}

TEST(Flux, RegistryLookups) {
    EXPECT_EQ(make_flux("arrhenius").name, "arrhenius");
    EXPECT_EQ(make_flux("local", 2.0).m, 2.0);
    EXPECT_THROW(make_flux("greenshields-ish"), Error);
}

TEST(Flux, DomainChecks) {
    const auto f = arrhenius();
    EXPECT_THROW(flux_and_wavespeed(f, 1.5, 0.0), DomainError);
    EXPECT_THROW(flux_and_wavespeed(f, -0.1, 0.0), DomainError);
    EXPECT_THROW(flux_and_wavespeed(f, std::numeric_limits<double>::quiet_NaN(), 0.0), DomainError);
    EXPECT_THROW(flux_and_wavespeed(f, 0.5, std::numeric_limits<double>::infinity()), DomainError);
    EXPECT_NO_THROW(flux_and_wavespeed(f, 1.0 + 1e-9, 0.0));
}

TEST(Flux, H2AdmitsArrhenius) {
    const auto r = validate_h2(arrhenius(), 101, {-2.0, 2.0});
    EXPECT_TRUE(r.admissible());
    EXPECT_EQ(r.status("F(0,.)=0"), ClauseStatus::Pass);
    EXPECT_EQ(r.status("F(m,.)=0"), ClauseStatus::Pass);
    EXPECT_EQ(r.status("F_uu<0"), ClauseStatus::Pass);
    // F_ub = -u(1-u)e^{-ub} and F_ubub vanish at u = 0 and u = m only.
    EXPECT_EQ(r.status("F_ub<0"), ClauseStatus::Weak);
    EXPECT_EQ(r.status("F_ubub>0"), ClauseStatus::Weak);
}

TEST(Flux, H2RejectsWrongSigns) {
    FluxModel f = arrhenius();
    f.name = "inverted";
    f.F = [](double u, double ub) { return u * (1 - u) * std::exp(ub); };
    f.F_ub = [](double u, double ub) { return u * (1 - u) * std::exp(ub); };
    f.F_ubub = [](double u, double ub) { return u * (1 - u) * std::exp(ub); };
    f.F_u = [](double u, double ub) { return (1 - 2 * u) * std::exp(ub); };
    f.F_uu = [](double, double ub) { return -2 * std::exp(ub); };
    f.F_uub = [](double u, double ub) { return (1 - 2 * u) * std::exp(ub); };
    const auto r = validate_h2(f, 101, {-1.0, 1.0});
    EXPECT_FALSE(r.admissible());
    EXPECT_EQ(r.status("F_ub<0"), ClauseStatus::Fail);
    EXPECT_EQ(r.status("F_uu<0"), ClauseStatus::Pass);

    FluxModel convex = local_flux();
    convex.F = [](double u, double) { return u * u - u; };
    convex.F_uu = [](double, double) { return 2.0; };
    EXPECT_EQ(validate_h2(convex, 101, {-1.0, 1.0}).status("F_uu<0"), ClauseStatus::Fail);

    FluxModel leaky = arrhenius();
    leaky.F = [](double u, double ub) { return (u * (1 - u) + 0.01) * std::exp(-ub); };
    EXPECT_EQ(validate_h2(leaky, 101, {-1.0, 1.0}).status("F(0,.)=0"), ClauseStatus::Fail);
}
