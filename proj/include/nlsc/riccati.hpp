#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nlsc/errors.hpp"

namespace nlsc {

/// dA/dt = a(t) (A - b1(t)) (A - b2(t)),  A(0) = A0,  on [0, t_max].
struct RiccatiProblem {
    std::function<double(double)> a, b1, b2;
    double A0 = 0.0;
    double t_max = 1.0;

    static RiccatiProblem constant(double a, double b1, double b2, double A0, double t_max) {
        return {[a](double) { return a; }, [b1](double) { return b1; }, [b2](double) { return b2; }, A0, t_max};
    }

    double rhs(double t, double A) const { return a(t) * (A - b1(t)) * (A - b2(t)); }

    /// Samples the coefficients and throws unless a > 0 and b1 <= b2 on [0, t_max].
    void validate(std::size_t samples = 1001) const {
        if (!(t_max > 0.0)) throw ValidationError("riccati: t_max must be positive");
        for (std::size_t i = 0; i < samples; ++i) {
            const double t = t_max * static_cast<double>(i) / static_cast<double>(samples - 1);
            const double av = a(t), l = b1(t), h = b2(t);
            if (!std::isfinite(av) || !std::isfinite(l) || !std::isfinite(h))
                throw ValidationError("riccati: coefficients must be bounded (t = " + std::to_string(t) + ")");
            if (!(av > 0.0)) throw ValidationError("riccati: a(t) must be positive (t = " + std::to_string(t) + ")");
            if (l > h) throw ValidationError("riccati: b1(t) <= b2(t) violated (t = " + std::to_string(t) + ")");
        }
    }
};

/// Blow-up time of the constant-coefficient equation for A0 > b2, infinity otherwise.
inline double riccati_closed_form_blowup(double a, double b1, double b2, double A0) {
    if (!(A0 > b2)) return std::numeric_limits<double>::infinity();
    if (b2 - b1 <= 1e-14 * std::max(1.0, std::abs(b2))) return 1.0 / (a * (A0 - b2));
    return std::log((A0 - b1) / (A0 - b2)) / (a * (b2 - b1));
}

struct RiccatiOptions {
    double rtol = 1e-11;
    double atol = 1e-12;
    double blowup_level = 1e9;
};

struct RiccatiSolution {
    std::vector<double> t;
    std::vector<double> A;
    std::optional<double> blowup_time;
    double extrapolated_c = 0.0; ///< A ~ c / (t* - t) near blow-up
};

namespace detail {

/// Fits log A = log c - log(t* - t) on the tail samples; c is eliminated in
/// closed form and t* found by golden-section search.
inline std::pair<double, double> fit_blowup(const std::vector<double>& ts, const std::vector<double>& As) {
    const double t_last = ts.back();
    const double span = std::max(t_last - ts.front(), 1e-300);
    auto residual = [&](double tstar, double* c_out) {
        double mean = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) mean += std::log(As[i]) + std::log(tstar - ts[i]);
        mean /= static_cast<double>(ts.size());
        double ss = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const double r = std::log(As[i]) + std::log(tstar - ts[i]) - mean;
            ss += r * r;
        }
        if (c_out) *c_out = std::exp(mean);
        return ss;
    };
    double lo = t_last + 1e-6 * span, hi = t_last + span;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = residual(x1, nullptr), f2 = residual(x2, nullptr);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = residual(x1, nullptr);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = residual(x2, nullptr);
        }
    }
    const double tstar = 0.5 * (lo + hi);
    double c = 0.0;
    residual(tstar, &c);
    return {tstar, c};
}

} // namespace detail

/// Adaptive Dormand-Prince 5(4) integration. Stops at t_max or once |A|
/// exceeds the blow-up level, in which case the blow-up time is
/// extrapolated from the last decade of growth.
inline RiccatiSolution riccati_solve(const RiccatiProblem& p, const RiccatiOptions& opt = {}) {
    p.validate();
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;

    RiccatiSolution sol;
    double t = 0.0, A = p.A0;
    sol.t.push_back(t);
    sol.A.push_back(A);
    auto f = [&](double tt, double y) { return p.rhs(tt, y); };
    double h = std::min(1e-3, p.t_max);
    double k1 = f(t, A);
    while (p.t_max - t > 1e-13 * std::max(1.0, p.t_max)) {
        if (std::abs(A) >= opt.blowup_level) break;
        h = std::min(h, p.t_max - t);
        if (h < 1e-15 * std::max(1.0, std::abs(t)))
            throw IntegrationError("riccati: step size underflow at t = " + std::to_string(t) + " (A = " +
                                   std::to_string(A) + ")");
        const double k2 = f(t + c2 * h, A + h * a21 * k1);
        const double k3 = f(t + c3 * h, A + h * (a31 * k1 + a32 * k2));
        const double k4 = f(t + c4 * h, A + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const double k5 = f(t + c5 * h, A + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const double k6 = f(t + h, A + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const double next = A + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const double k7 = f(t + h, next);
        const double err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double scale = opt.atol + opt.rtol * std::max(std::abs(A), std::abs(next));
        const double ratio = std::isfinite(err) && std::isfinite(next) ? std::abs(err) / scale : INFINITY;
        if (ratio <= 1.0) {
            t += h;
            A = next;
            k1 = k7;
            sol.t.push_back(t);
            sol.A.push_back(A);
        }
        const double factor = ratio == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 5.0);
        h *= std::isfinite(factor) ? factor : 0.2;
    }

    if (std::abs(A) >= opt.blowup_level) {
        std::vector<double> ts, As;
        const double floor_level = std::abs(A) / 10.0;
        for (std::size_t i = 0; i < sol.A.size(); ++i) {
            if (sol.A[i] >= floor_level) {
                ts.push_back(sol.t[i]);
                As.push_back(sol.A[i]);
            }
        }
        if (ts.size() >= 3) {
            const auto [tstar, c] = detail::fit_blowup(ts, As);
            sol.blowup_time = tstar;
            sol.extrapolated_c = c;
        } else {
            sol.blowup_time = t;
        }
    }
    return sol;
}

struct ComparisonViolation {
    double t, A, B;
};

struct ComparisonReport {
    std::size_t compared = 0;
    std::vector<ComparisonViolation> violations;
    bool ok() const { return violations.empty(); }
};

/// Checks B(t) >= A(t) - (1e-6 + 1e-3 |A|) wherever both traces are defined.
/// A is interpolated with cubic Hermite polynomials using the ODE right-hand side.
inline ComparisonReport riccati_compare(const RiccatiProblem& p, const RiccatiSolution& a_sol,
                                        const std::vector<double>& bt, const std::vector<double>& bv) {
    if (bt.size() != bv.size()) throw DomainError("riccati_compare: time and value arrays differ in length");
    ComparisonReport rep;
    if (a_sol.t.empty()) return rep;
    for (std::size_t i = 0; i < bt.size(); ++i) {
        const double t = bt[i];
        if (t < a_sol.t.front() || t > a_sol.t.back()) continue;
        auto it = std::lower_bound(a_sol.t.begin(), a_sol.t.end(), t);
        std::size_t hi = static_cast<std::size_t>(it - a_sol.t.begin());
        double A;
        if (hi < a_sol.t.size() && a_sol.t[hi] == t) {
            A = a_sol.A[hi];
        } else {
            const std::size_t lo = hi - 1;
            const double t0 = a_sol.t[lo], t1 = a_sol.t[hi], h = t1 - t0;
            const double y0 = a_sol.A[lo], y1 = a_sol.A[hi];
            const double d0 = p.rhs(t0, y0), d1 = p.rhs(t1, y1);
            const double s = (t - t0) / h;
            const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
            const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
            A = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
        }
        ++rep.compared;
        if (bv[i] < A - (1e-6 + 1e-3 * std::abs(A))) rep.violations.push_back({t, A, bv[i]});
    }
    return rep;
}

} // namespace nlsc
