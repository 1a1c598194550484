#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "nlsc/errors.hpp"
#include "nlsc/flux.hpp"
#include "nlsc/kernel.hpp"

namespace nlsc {

// ---------------------------------------------------------------------------
// Closed-form sub-thresholds for the Arrhenius traffic flux.
//
// Slopes are scaled by gamma: the lower bound on inf u_x is Ntilde0/gamma
// with Ntilde0 = min{-1, gamma inf u0'} (constant potential) or
// min{-2, gamma inf u0'} (linear potential).
// ---------------------------------------------------------------------------

inline void check_gamma_positive(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be positive and finite");
}

inline double ntilde0_constant(double gamma, double inf_slope) { return std::min(-1.0, gamma * inf_slope); }
inline double ntilde0_linear(double gamma, double inf_slope) { return std::min(-2.0, gamma * inf_slope); }

/// sup u0' above this value forces gradient blow-up (constant potential).
inline double threshold_constant(double gamma, double inf_slope) {
    check_gamma_positive(gamma);
    const double n0 = ntilde0_constant(gamma, inf_slope);
    return (0.5 + std::numbers::sqrt2 / 4.0 * std::sqrt(3.0 - n0)) / gamma;
}

/// sup u0' above this value forces gradient blow-up (linear potential).
inline double threshold_linear(double gamma, double inf_slope) {
    check_gamma_positive(gamma);
    const double n0 = ntilde0_linear(gamma, inf_slope);
    return (1.0 + 0.5 * std::sqrt(6.0 - n0)) / gamma;
}

// Root expressions in the scaled coordinates v = gamma * ubar_x, returned
// multiplied by gamma. Constant potential: v in [-1, 1]; linear: v in [-2, 2].

inline double n1_constant_scaled(double u, double v) {
    const double b = (1.0 - 2.0 * u) * v;
    return 0.5 * (-b - std::sqrt(b * b + 2.0 * u * (1.0 - u) * v * v));
}

inline double m2_constant_scaled(double u, double v, double ntilde0) {
    const double b = 2.0 * (1.0 - 2.0 * u) * v - u * (1.0 - u);
    return 0.25 * (-b + std::sqrt(b * b + 8.0 * u * (1.0 - u) * (v * v - ntilde0)));
}

inline double n1_linear_scaled(double u, double v) { return n1_constant_scaled(u, v); }

inline double m2_linear_scaled(double u, double v, double ntilde0) {
    const double b = 2.0 * (1.0 - 2.0 * u) * v - 2.0 * u * (1.0 - u);
    return 0.25 * (-b + std::sqrt(b * b + 8.0 * u * (1.0 - u) * (v * v - 2.0 * ntilde0)));
}

enum class Potential { Constant, Linear };

struct OmegaMaxima {
    double max1;       ///< max of the linear-in-v term -b
    double max2;       ///< max of the u(1-u) discriminant term
    double bound_max2; ///< its claimed bound via u(1-u) <= 1/4
    bool max2_within_bound = true;
};

/// Brute-force maxima over the box Omega = [0,1] x [-vmax, vmax] of the two
/// terms bounded when estimating M2. Constant: -2(1-2u)v + u(1-u) and
/// 8u(1-u)(v^2 - N); linear: -2(1-2u)v + 2u(1-u) and 8u(1-u)(v^2 - 2N).
inline OmegaMaxima omega_box_maxima(Potential model, std::size_t resolution = 2001,
                                    std::optional<double> ntilde0 = std::nullopt) {
    const bool lin = model == Potential::Linear;
    const double vmax = lin ? 2.0 : 1.0;
    const double n0 = ntilde0.value_or(lin ? -2.0 : -1.0);
    const double shift = lin ? -2.0 * n0 : -n0;
    const double bound = 2.0 * (vmax * vmax + shift);
    OmegaMaxima out{-INFINITY, -INFINITY, bound, true};
    const double denom = static_cast<double>(resolution - 1);
    for (std::size_t i = 0; i < resolution; ++i) {
        const double u = static_cast<double>(i) / denom;
        const double q = u * (1.0 - u);
        for (std::size_t j = 0; j < resolution; ++j) {
            const double v = -vmax + 2.0 * vmax * static_cast<double>(j) / denom;
            const double t1 = -2.0 * (1.0 - 2.0 * u) * v + (lin ? 2.0 : 1.0) * q;
            const double t2 = 8.0 * q * (v * v + shift);
            out.max1 = std::max(out.max1, t1);
            out.max2 = std::max(out.max2, t2);
            if (t2 > bound + 1e-12) out.max2_within_bound = false;
        }
    }
    return out;
}

struct BoxExtremum {
    double value;
    double u;
    double v;
};

/// Grid minimum of gamma*N1 over the scaled box of the given potential.
inline BoxExtremum min_n1_scaled(Potential model, std::size_t resolution = 2001) {
    const double vmax = model == Potential::Linear ? 2.0 : 1.0;
    BoxExtremum best{INFINITY, 0.0, 0.0};
    const double denom = static_cast<double>(resolution - 1);
    for (std::size_t i = 0; i < resolution; ++i) {
        const double u = static_cast<double>(i) / denom;
        for (std::size_t j = 0; j < resolution; ++j) {
            const double v = -vmax + 2.0 * vmax * static_cast<double>(j) / denom;
            const double q = n1_constant_scaled(u, v);
            if (q < best.value) best = {q, u, v};
        }
    }
    return best;
}

/// Grid maximum of gamma*M2 over the scaled box; never exceeds the closed form.
inline BoxExtremum max_m2_scaled(Potential model, double ntilde0, std::size_t resolution = 2001) {
    const bool lin = model == Potential::Linear;
    const double vmax = lin ? 2.0 : 1.0;
    BoxExtremum best{-INFINITY, 0.0, 0.0};
    const double denom = static_cast<double>(resolution - 1);
    for (std::size_t i = 0; i < resolution; ++i) {
        const double u = static_cast<double>(i) / denom;
        for (std::size_t j = 0; j < resolution; ++j) {
            const double v = -vmax + 2.0 * vmax * static_cast<double>(j) / denom;
            const double q = lin ? m2_linear_scaled(u, v, ntilde0) : m2_constant_scaled(u, v, ntilde0);
            if (q > best.value) best = {q, u, v};
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// General flux and kernel.
// ---------------------------------------------------------------------------

/// Which bound on |ubar_x| defines the optimisation box.
enum class SlopeBox {
    W11,   ///< |v| <= m ||K||_{W^{1,1}}
    Sharp, ///< |v| <= m K(0), the range attained under 0 <= u <= m for nondecreasing K
};

inline std::string_view to_string(SlopeBox b) { return b == SlopeBox::W11 ? "w11" : "sharp"; }

inline double slope_box_half_width(const FluxModel& f, const KernelSpec& k, SlopeBox box) {
    return box == SlopeBox::W11 ? f.m * k.w11_norm() : f.m * k.k_at_zero();
}

namespace detail {

inline double clamped_sqrt(double disc) {
    if (disc >= 0.0) return std::sqrt(disc);
    if (disc >= -1e-12) return 0.0;
    throw FormulaError("negative discriminant " + std::to_string(disc) + " (H2 violated on the box)");
}

inline double leading(const FluxModel& f, double u, double ubar) {
    const double fuu = f.F_uu(u, ubar);
    if (fuu == 0.0) throw FormulaError("F_uu vanishes at u = " + std::to_string(u) + ": degenerate Riccati root");
    return fuu;
}

} // namespace detail

/// Lower Riccati root of the N(t) inequality at (u, ubar) with v standing for ubar_x.
inline double n1_general(const FluxModel& f, double u, double ubar, double v) {
    const double fuu = detail::leading(f, u, ubar);
    const double fuub = f.F_uub(u, ubar);
    const double fubub = f.F_ubub(u, ubar);
    return (fuub * v - detail::clamped_sqrt((fuub * fuub - fuu * fubub) * v * v)) / (-fuu);
}

/// Upper Riccati root of the M(t) inequality once inf u_x >= ntilde0.
inline double m2_general(const FluxModel& f, double k_at_zero, double u, double ubar, double v, double ntilde0) {
    const double fuu = detail::leading(f, u, ubar);
    const double fuub = f.F_uub(u, ubar);
    const double fubub = f.F_ubub(u, ubar);
    const double fub = f.F_ub(u, ubar);
    const double b = 2.0 * fuub * v - fub * k_at_zero;
    const double disc = b * b - 4.0 * (fuu * fubub * v * v + fuu * fub * k_at_zero * ntilde0);
    return (b + detail::clamped_sqrt(disc)) / (-2.0 * fuu);
}

struct ThresholdReport {
    std::string model;
    double threshold = 0.0;
    double sup_slope = 0.0;
    double inf_slope = 0.0;
    bool above = false;
    double ntilde0 = 0.0;
    std::optional<double> maximizer_u;
    std::optional<double> maximizer_v;
    std::size_t grid_resolution = 0;
    std::string box;
    double box_half_width = 0.0;
};

namespace detail {

template <class F>
BoxExtremum grid_extremum(F&& g, double u_lo, double u_hi, double v_lo, double v_hi, std::size_t res, bool maximize) {
    BoxExtremum best{maximize ? -INFINITY : INFINITY, u_lo, v_lo};
    const double du = (u_hi - u_lo) / static_cast<double>(res - 1);
    const double dv = (v_hi - v_lo) / static_cast<double>(res - 1);
    for (std::size_t i = 0; i < res; ++i) {
        const double u = i + 1 == res ? u_hi : u_lo + du * static_cast<double>(i);
        for (std::size_t j = 0; j < res; ++j) {
            const double v = j + 1 == res ? v_hi : v_lo + dv * static_cast<double>(j);
            const double val = g(u, v);
            // Strict comparison keeps the lexicographically smallest (u, v) among ties.
            if (maximize ? val > best.value : val < best.value) best = {val, u, v};
        }
    }
    return best;
}

/// Coarse grid, then a 10x finer grid on the two coarse cells around the winner.
template <class F>
BoxExtremum two_stage(F&& g, double u_lo, double u_hi, double v_lo, double v_hi, std::size_t res, bool maximize) {
    auto coarse = grid_extremum(g, u_lo, u_hi, v_lo, v_hi, res, maximize);
    const double hu = (u_hi - u_lo) / static_cast<double>(res - 1);
    const double hv = (v_hi - v_lo) / static_cast<double>(res - 1);
    const double a = std::max(u_lo, coarse.u - hu), b = std::min(u_hi, coarse.u + hu);
    const double c = std::max(v_lo, coarse.v - hv), d = std::min(v_hi, coarse.v + hv);
    auto fine = grid_extremum(g, a, b, c, d, 21, maximize);
    return (maximize ? fine.value > coarse.value : fine.value < coarse.value) ? fine : coarse;
}

} // namespace detail

/// lambda(n0): the max over the box [0, m] x [-w, w] of the upper root M2,
/// after Ntilde0 = min{n0, min over the box of N1}. Partials are evaluated at
/// ubar = `ubar_ref`; for the Arrhenius flux M2 and N1 do not depend on ubar.
inline ThresholdReport general_lambda(const FluxModel& f, const KernelSpec& k, double n0, std::size_t resolution,
                                      SlopeBox box = SlopeBox::W11, double ubar_ref = 0.0) {
    if (resolution < 101) throw DomainError("general_lambda needs resolution >= 101");
    const double w = slope_box_half_width(f, k, box);
    const auto h2 = validate_h2(f, 101, {-f.m * k.w11_norm(), f.m * k.w11_norm()});
    if (!h2.admissible()) throw ValidationError("flux '" + f.name + "' fails hypothesis H2");

    const auto nmin = detail::two_stage([&](double u, double v) { return n1_general(f, u, ubar_ref, v); }, 0.0, f.m,
                                        -w, w, resolution, false);
    const double ntilde0 = std::min(n0, nmin.value);
    const double k0 = k.k_at_zero();
    const auto best = detail::two_stage(
        [&](double u, double v) { return m2_general(f, k0, u, ubar_ref, v, ntilde0); }, 0.0, f.m, -w, w, resolution,
        true);

    ThresholdReport r;
    r.model = "general:" + f.name + "/" + std::string(to_string(k.kind()));
    r.threshold = best.value;
    r.ntilde0 = ntilde0;
    r.maximizer_u = best.u;
    r.maximizer_v = best.v;
    r.grid_resolution = resolution;
    r.box = std::string(to_string(box));
    r.box_half_width = w;
    return r;
}

/// Classifies (sup, inf) slopes against a closed-form threshold.
inline ThresholdReport classify(Potential model, double gamma, double sup_slope, double inf_slope) {
    ThresholdReport r;
    r.model = model == Potential::Constant ? "constant" : "linear";
    r.threshold = model == Potential::Constant ? threshold_constant(gamma, inf_slope) : threshold_linear(gamma, inf_slope);
    r.ntilde0 = model == Potential::Constant ? ntilde0_constant(gamma, inf_slope) : ntilde0_linear(gamma, inf_slope);
    r.sup_slope = sup_slope;
    r.inf_slope = inf_slope;
    r.above = sup_slope > r.threshold;
    return r;
}

} // namespace nlsc
