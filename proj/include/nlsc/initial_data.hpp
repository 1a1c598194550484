#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "nlsc/errors.hpp"
#include "nlsc/grid.hpp"

namespace nlsc {

/// Initial density profile u0 with its derivative and the slope extrema
/// sup u0' and inf u0' that the blow-up thresholds are stated in.
struct InitialData {
    std::string name;
    std::function<double(double)> value;
    std::function<double(double)> slope;
    double sup_slope = 0.0;
    double inf_slope = 0.0;
};

namespace detail {

inline double sigmoid(double z) { return 0.5 * (1.0 + std::tanh(z)); }
inline double sigmoid_prime(double z) {
    const double c = 1.0 / std::cosh(z);
    return 0.5 * c * c;
}

/// Maximum of g on [a, b]: dense sampling followed by golden-section
/// refinement around the best sample.
inline double maximize(const std::function<double(double)>& g, double a, double b, std::size_t samples = 20001) {
    std::size_t best = 0;
    double best_val = -INFINITY;
    const double h = (b - a) / static_cast<double>(samples - 1);
    for (std::size_t i = 0; i < samples; ++i) {
        const double v = g(a + h * static_cast<double>(i));
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    double lo = std::max(a, a + h * (static_cast<double>(best) - 1.0));
    double hi = std::min(b, a + h * (static_cast<double>(best) + 1.0));
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = g(x1), f2 = g(x2);
    for (int it = 0; it < 80 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = g(x1);
        }
    }
    return std::max({best_val, f1, f2});
}

inline void fill_extrema(InitialData& ic, double a, double b, bool decays) {
    ic.sup_slope = maximize(ic.slope, a, b);
    ic.inf_slope = -maximize([&](double x) { return -ic.slope(x); }, a, b);
    if (decays) {
        // The profile is constant at infinity, so the slope extrema over the line bracket 0.
        ic.sup_slope = std::max(ic.sup_slope, 0.0);
        ic.inf_slope = std::min(ic.inf_slope, 0.0);
    }
}

} // namespace detail

inline InitialData constant_ic(double c) {
    return {"constant", [c](double) { return c; }, [](double) { return 0.0; }, 0.0, 0.0};
}

/// mean + amplitude * sin(2 pi periods (x - x0) / length).
inline InitialData sine_ic(double mean, double amplitude, double length, double periods = 1.0, double x0 = 0.0) {
    const double k = 2.0 * std::numbers::pi * periods / length;
    InitialData ic{"sine", [=](double x) { return mean + amplitude * std::sin(k * (x - x0)); },
                   [=](double x) { return amplitude * k * std::cos(k * (x - x0)); }, std::abs(amplitude) * k,
                   -std::abs(amplitude) * k};
    return ic;
}

/// Monotone tanh front from `lo` to `hi` whose steepest slope is exactly `sup_slope`.
inline InitialData tanh_front_ic(double lo, double hi, double sup_slope, double center = 0.0) {
    if (!(hi > lo)) throw DomainError("tanh front needs hi > lo");
    if (!(sup_slope > 0.0)) throw DomainError("tanh front needs a positive slope");
    const double w = (hi - lo) / (2.0 * sup_slope);
    return {"tanh_front", [=](double x) { return lo + (hi - lo) * detail::sigmoid((x - center) / w); },
            [=](double x) { return (hi - lo) * detail::sigmoid_prime((x - center) / w) / w; }, sup_slope, 0.0};
}

/// Hump lo -> hi -> lo with an up-front of slope `sup_slope` centred at
/// `up_center` and a down-front of slope `inf_slope` (<= 0) at `down_center`.
/// The reported extrema are measured on the profile, so overlap of the two
/// fronts is accounted for.
inline InitialData two_front_ic(double lo, double hi, double sup_slope, double inf_slope, double up_center,
                                double down_center) {
    if (!(hi > lo)) throw DomainError("two-front profile needs hi > lo");
    if (!(sup_slope > 0.0)) throw DomainError("two-front profile needs a positive up-slope");
    if (inf_slope >= 0.0) return tanh_front_ic(lo, hi, sup_slope, up_center);
    if (!(down_center > up_center)) throw DomainError("two-front profile needs down_center > up_center");
    const double w1 = (hi - lo) / (2.0 * sup_slope);
    const double w2 = (hi - lo) / (2.0 * -inf_slope);
    InitialData ic;
    ic.name = "two_front";
    ic.value = [=](double x) {
        return lo + (hi - lo) * (detail::sigmoid((x - up_center) / w1) - detail::sigmoid((x - down_center) / w2));
    };
    ic.slope = [=](double x) {
        return (hi - lo) * (detail::sigmoid_prime((x - up_center) / w1) / w1 -
                            detail::sigmoid_prime((x - down_center) / w2) / w2);
    };
    const double reach = 20.0 * std::max(w1, w2);
    detail::fill_extrema(ic, up_center - reach, down_center + reach, true);
    return ic;
}

/// Queue at a red light: density `background` upstream, a jammed plug
/// (u -> 1) on [plug_left, plug_right], density `downstream` beyond it.
/// Both edges are smoothed over width `smoothing`.
inline InitialData red_light_ic(double background, double plug_left, double plug_right, double smoothing,
                                double downstream) {
    if (!(plug_right > plug_left)) throw DomainError("red light plug needs plug_right > plug_left");
    if (!(smoothing > 0.0)) throw DomainError("red light smoothing must be positive");
    const double c = background, d = downstream, s = smoothing;
    InitialData ic;
    ic.name = "red_light";
    ic.value = [=](double x) {
        return c + (1.0 - c) * detail::sigmoid((x - plug_left) / s) - (1.0 - d) * detail::sigmoid((x - plug_right) / s);
    };
    ic.slope = [=](double x) {
        return ((1.0 - c) * detail::sigmoid_prime((x - plug_left) / s) -
                (1.0 - d) * detail::sigmoid_prime((x - plug_right) / s)) /
               s;
    };
    detail::fill_extrema(ic, plug_left - 40.0 * s, plug_right + 40.0 * s, true);
    return ic;
}

/// u0 = 0 left of alpha1, u0 = 1 right of alpha2, C2 quintic smoothstep between.
inline InitialData unit_ramp_ic(double alpha1, double alpha2) {
    if (!(alpha2 > alpha1)) throw DomainError("ramp needs alpha2 > alpha1");
    const double len = alpha2 - alpha1;
    auto t_of = [=](double x) { return std::clamp((x - alpha1) / len, 0.0, 1.0); };
    return {"unit_ramp",
            [=](double x) {
                const double t = t_of(x);
                return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
            },
            [=](double x) {
                const double t = t_of(x);
                return 30.0 * t * t * (1.0 - t) * (1.0 - t) / len;
            },
            1.875 / len, 0.0};
}

/// Random band-limited periodic profile inside [mean - spread, mean + spread].
inline InitialData random_smooth_ic(double length, double mean, double spread, int modes, unsigned long seed,
                                    double x0 = 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-1.0, 1.0), phase(0.0, 2.0 * std::numbers::pi);
    std::vector<std::array<double, 3>> terms; // (k, a, phi)
    double total = 0.0;
    for (int m = 1; m <= modes; ++m) {
        const double a = amp(rng) / m;
        terms.push_back({2.0 * std::numbers::pi * m / length, a, phase(rng)});
        total += std::abs(a);
    }
    const double scale = total > 0.0 ? spread / total : 0.0;
    InitialData ic;
    ic.name = "random_smooth";
    ic.value = [=](double x) {
        double s = mean;
        for (const auto& [k, a, p] : terms) s += scale * a * std::sin(k * (x - x0) + p);
        return s;
    };
    ic.slope = [=](double x) {
        double s = 0.0;
        for (const auto& [k, a, p] : terms) s += scale * a * k * std::cos(k * (x - x0) + p);
        return s;
    };
    detail::fill_extrema(ic, x0, x0 + length, false);
    return ic;
}

/// Cell averages by 4-point Gauss-Legendre quadrature on every cell.
inline std::vector<double> cell_averages(const InitialData& ic, const Grid1D& g) {
    static constexpr std::array<double, 4> nodes{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                                 0.8611363115940526};
    static constexpr std::array<double, 4> weights{0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                                   0.3478548451374538};
    std::vector<double> u(g.n_cells);
    for (std::size_t i = 0; i < g.n_cells; ++i) {
        const double xc = g.center(i);
        double acc = 0.0;
        for (std::size_t q = 0; q < 4; ++q) acc += weights[q] * ic.value(xc + 0.5 * g.dx * nodes[q]);
        u[i] = 0.5 * acc;
    }
    return u;
}

} // namespace nlsc
