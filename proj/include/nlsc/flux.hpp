#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nlsc/errors.hpp"

namespace nlsc {

/// Flux F(u, ubar) together with its partial derivatives through second
/// order. `ubar` is the nonlocal average K * u.
struct FluxModel {
    using Fn = std::function<double(double, double)>;

    std::string name;
    double m = 1.0; ///< density ceiling, u in [0, m]
    bool nonlocal = true; ///< false when F does not depend on ubar
    Fn F, F_u, F_ub, F_uu, F_uub, F_ubub;
};

/// F = u(1 - u/m) exp(-ubar); m = 1 gives the Arrhenius look-ahead traffic flux.
inline FluxModel arrhenius(double m = 1.0) {
    if (!(m > 0.0)) throw DomainError("flux ceiling m must be positive");
    FluxModel f;
    f.name = "arrhenius";
    f.m = m;
    f.F = [m](double u, double ub) { return u * (1.0 - u / m) * std::exp(-ub); };
    f.F_u = [m](double u, double ub) { return (1.0 - 2.0 * u / m) * std::exp(-ub); };
    f.F_ub = [m](double u, double ub) { return -u * (1.0 - u / m) * std::exp(-ub); };
    f.F_uu = [m](double, double ub) { return -(2.0 / m) * std::exp(-ub); };
    f.F_uub = [m](double u, double ub) { return -(1.0 - 2.0 * u / m) * std::exp(-ub); };
    f.F_ubub = [m](double u, double ub) { return u * (1.0 - u / m) * std::exp(-ub); };
    return f;
}

/// Local Lighthill-Whitham-Richards flux F = u(1 - u/m), blind to ubar.
inline FluxModel local_flux(double m = 1.0) {
    if (!(m > 0.0)) throw DomainError("flux ceiling m must be positive");
    FluxModel f;
    f.name = "local";
    f.m = m;
    f.nonlocal = false;
    f.F = [m](double u, double) { return u * (1.0 - u / m); };
    f.F_u = [m](double u, double) { return 1.0 - 2.0 * u / m; };
    f.F_ub = [](double, double) { return 0.0; };
    f.F_uu = [m](double, double) { return -2.0 / m; };
    f.F_uub = [](double, double) { return 0.0; };
    f.F_ubub = [](double, double) { return 0.0; };
    return f;
}

/// Name -> factory(m). Custom fluxes are built in code and passed directly.
inline const std::map<std::string, FluxModel (*)(double), std::less<>>& flux_registry() {
    static const std::map<std::string, FluxModel (*)(double), std::less<>> registry{
        {"arrhenius", &arrhenius},
        {"local", &local_flux},
    };
    return registry;
}

inline FluxModel make_flux(std::string_view name, double m = 1.0) {
    const auto& reg = flux_registry();
    auto it = reg.find(name);
    if (it == reg.end()) throw DomainError("unknown flux '" + std::string(name) + "'");
    return it->second(m);
}

struct FluxValue {
    double F;
    double F_u; ///< local characteristic speed
};

inline FluxValue flux_and_wavespeed(const FluxModel& f, double u, double ubar) {
    if (!std::isfinite(u) || !std::isfinite(ubar)) throw DomainError("flux evaluated at a non-finite state");
    constexpr double eps = 1e-8;
    if (u < -eps || u > f.m + eps)
        throw DomainError("density " + std::to_string(u) + " outside [0, " + std::to_string(f.m) + "]");
    return {f.F(u, ubar), f.F_u(u, ubar)};
}

enum class ClauseStatus { Pass, Weak, Fail };

inline std::string_view to_string(ClauseStatus s) {
    switch (s) {
        case ClauseStatus::Pass: return "pass";
        case ClauseStatus::Weak: return "weak";
        case ClauseStatus::Fail: return "fail";
    }
    return "?";
}

struct ValidationReport {
    struct Clause {
        std::string name;
        ClauseStatus status;
        std::string detail;
    };
    std::vector<Clause> clauses;

    /// Every clause passes, weakly or strictly.
    bool admissible() const {
        return std::none_of(clauses.begin(), clauses.end(),
                            [](const Clause& c) { return c.status == ClauseStatus::Fail; });
    }
    ClauseStatus status(std::string_view name) const {
        for (const auto& c : clauses)
            if (c.name == name) return c.status;
        throw DomainError("no clause named '" + std::string(name) + "'");
    }
};

/// Checks hypothesis H2: F(0,.) = F(m,.) = 0, F_uu < 0, F_ubub > 0, F_ub < 0.
/// The sign clauses are judged on `u_samples` interior points of (0, m);
/// a clause that is strict inside but degenerates to equality at u = 0 or
/// u = m is reported as Weak.
inline ValidationReport validate_h2(const FluxModel& f, int u_samples, std::pair<double, double> ubar_range,
                                    int ubar_samples = 21) {
    ValidationReport report;
    std::vector<double> us(static_cast<std::size_t>(std::max(u_samples, 1)));
    for (std::size_t i = 0; i < us.size(); ++i)
        us[i] = f.m * (static_cast<double>(i) + 1.0) / (static_cast<double>(us.size()) + 1.0);
    std::vector<double> vs(static_cast<std::size_t>(std::max(ubar_samples, 2)));
    for (std::size_t j = 0; j < vs.size(); ++j)
        vs[j] = ubar_range.first +
                (ubar_range.second - ubar_range.first) * static_cast<double>(j) / static_cast<double>(vs.size() - 1);

    for (double endpoint : {0.0, f.m}) {
        double worst = 0.0;
        for (double v : vs) worst = std::max(worst, std::abs(f.F(endpoint, v)));
        report.clauses.push_back({endpoint == 0.0 ? "F(0,.)=0" : "F(m,.)=0",
                                  worst <= 1e-12 ? ClauseStatus::Pass : ClauseStatus::Fail,
                                  "max |F| = " + std::to_string(worst)});
    }

    // sign = -1 demands g < 0, +1 demands g > 0.
    auto sign_clause = [&](const std::string& name, const FluxModel::Fn& g, int sign) {
        bool interior_ok = true;
        double bad_u = 0.0;
        for (double u : us) {
            for (double v : vs) {
                if (!(sign * g(u, v) > 0.0)) {
                    interior_ok = false;
                    bad_u = u;
                    break;
                }
            }
            if (!interior_ok) break;
        }
        if (!interior_ok) {
            report.clauses.push_back({name, ClauseStatus::Fail, "violated at u = " + std::to_string(bad_u)});
            return;
        }
        bool endpoints_strict = true;
        for (double u : {0.0, f.m})
            for (double v : vs)
                if (!(sign * g(u, v) > 0.0)) endpoints_strict = false;
        report.clauses.push_back({name, endpoints_strict ? ClauseStatus::Pass : ClauseStatus::Weak,
                                  endpoints_strict ? "strict on [0,m]" : "strict on (0,m), equality at an endpoint"});
    };
    sign_clause("F_uu<0", f.F_uu, -1);
    sign_clause("F_ubub>0", f.F_ubub, +1);
    sign_clause("F_ub<0", f.F_ub, -1);
    return report;
}

struct DerivativeCheck {
    double max_rel_error = 0.0;
    std::string worst_partial;
    bool ok(double tol = 1e-6) const { return max_rel_error <= tol; }
};

/// Compares every supplied partial with central differences of the level
/// below at `n_points` random points of [0,m] x [-ubar_bound, ubar_bound].
inline DerivativeCheck check_partials(const FluxModel& f, double ubar_bound, int n_points = 100,
                                      unsigned seed = 20240601u) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> du(0.0, f.m), dv(-ubar_bound, ubar_bound);
    constexpr double h = 1e-5;
    DerivativeCheck out;
    auto record = [&](const char* name, double analytic, double fd) {
        const double err = std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1.0});
        if (err > out.max_rel_error) {
            out.max_rel_error = err;
            out.worst_partial = name;
        }
    };
    for (int k = 0; k < n_points; ++k) {
        const double u = du(rng);
        const double v = dv(rng);
        auto d_u = [&](const FluxModel::Fn& g) { return (g(u + h, v) - g(u - h, v)) / (2.0 * h); };
        auto d_v = [&](const FluxModel::Fn& g) { return (g(u, v + h) - g(u, v - h)) / (2.0 * h); };
        record("F_u", f.F_u(u, v), d_u(f.F));
        record("F_ub", f.F_ub(u, v), d_v(f.F));
        record("F_uu", f.F_uu(u, v), d_u(f.F_u));
        record("F_uub", f.F_uub(u, v), d_v(f.F_u));
        record("F_ubub", f.F_ubub(u, v), d_v(f.F_ub));
    }
    return out;
}

} // namespace nlsc
