#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "nlsc/errors.hpp"
#include "nlsc/flux.hpp"
#include "nlsc/grid.hpp"
#include "nlsc/kernel.hpp"

namespace nlsc {

struct SimState {
    Grid1D grid;
    std::vector<double> u;
    double t = 0.0;
    std::vector<double> ubar;
    std::vector<double> ubar_x;
    std::vector<double> ux;
    double M = 0.0; ///< sup u_x
    double N = 0.0; ///< inf u_x
    std::size_t step_count = 0;

    double mass() const {
        double s = 0.0;
        for (double v : u) s += v;
        return s * grid.dx;
    }
    double umin() const { return *std::min_element(u.begin(), u.end()); }
    double umax() const { return *std::max_element(u.begin(), u.end()); }
    double peak_slope() const { return std::max(M, -N); }
};

/// Raised when an update leaves the admissible range or produces a
/// non-finite value; carries the last state that passed every check.
class NumericDivergence : public Error {
public:
    NumericDivergence(const std::string& what, SimState last) : Error(what), last_valid_(std::move(last)) {}
    const SimState& last_valid() const { return last_valid_; }

private:
    SimState last_valid_;
};

enum class BlowupCriterion { None, SlopeCeiling, RefinementDivergence };

inline std::string_view to_string(BlowupCriterion c) {
    switch (c) {
        case BlowupCriterion::None: return "none";
        case BlowupCriterion::SlopeCeiling: return "slope_ceiling";
        case BlowupCriterion::RefinementDivergence: return "refinement_divergence";
    }
    return "?";
}

struct BlowupEvent {
    bool detected = false;
    std::optional<double> t_blowup;
    double x_location = 0.0;
    double peak_slope = 0.0;
    BlowupCriterion criterion = BlowupCriterion::None;
};

/// Slope-ceiling detector for gradient blow-up on a fixed grid.
///
/// Fires once max|u_x| reaches the ceiling after having grown monotonically
/// over the last `growth_window` steps. Without an explicit ceiling the
/// default is max(100 * initial max|u_x|, 1e3), capped at
/// `resolution_fraction * (max u0 - min u0) / dx`, the steepness a
/// captured discontinuity of the initial oscillation reaches on this grid.
struct DetectorConfig {
    bool enabled = true;
    std::optional<double> slope_ceiling;
    int growth_window = 20;
    double resolution_fraction = 0.2;

    /// Strict mode: non-decreasing at every step of the window. Otherwise the
    /// latest value must be the window maximum and exceed the first.
    bool strict_monotone = false;

    template <class Seq>
    bool growing(const Seq& h) const {
        if (h.back() <= h.front()) return false;
        if (strict_monotone) return std::is_sorted(h.begin(), h.end());
        return *std::max_element(h.begin(), h.end()) == h.back();
    }

    double ceiling(double initial_peak, double oscillation, double dx) const {
        if (slope_ceiling) return *slope_ceiling;
        if (!(oscillation > 0.0)) return std::numeric_limits<double>::infinity();
        return std::min(std::max(100.0 * initial_peak, 1e3), resolution_fraction * oscillation / dx);
    }
};

struct SolverOptions {
    double cfl = 0.45;
    int order = 1; ///< 1: forward Euler + piecewise constant; 2: SSP-RK2 + minmod
};

struct TraceRow {
    double t, M, N, mass, umin, umax;
};

struct Snapshot {
    double t;
    std::vector<double> x, u, ubar, ux;
};

struct RunOptions {
    double t_final = 1.0;
    DetectorConfig detector;
    std::size_t trace_stride = 10;
    std::vector<double> snapshot_times;
    std::size_t max_steps = 50'000'000;
};

struct RunResult {
    SimState state;
    BlowupEvent event;
    std::vector<TraceRow> trace;
    std::vector<Snapshot> snapshots;
    double ceiling = 0.0;
    /// The initial discrete slope already reached the ceiling, so the grid
    /// cannot tell steepening from the data as given.
    bool under_resolved = false;
};

/// Finite-volume integrator for u_t + (F(u, K*u))_x = 0.
///
/// Interface flux is local Lax-Friedrichs with the nonlocal argument frozen
/// at the interface average of the neighbouring ubar values:
///   Fhat = (F(uL, ub) + F(uR, ub))/2 - alpha (uR - uL)/2,
///   alpha = max(|F_u(uL, ub)|, |F_u(uR, ub)|).
/// With cfl <= 0.5 the first-order update is monotone in (u_{i-1}, u_i, u_{i+1})
/// for frozen ubar, and since F(0,.) = F(m,.) = 0 it preserves [0, m].
class FvSolver {
public:
    FvSolver(FluxModel flux, KernelSpec kernel, Grid1D grid, SolverOptions opts = {})
        : flux_(std::move(flux)), op_(std::move(kernel), grid), opts_(opts) {
        if (!(opts_.cfl > 0.0 && opts_.cfl <= 0.9)) throw DomainError("cfl must lie in (0, 0.9]");
        if (opts_.order != 1 && opts_.order != 2) throw DomainError("order must be 1 or 2");
    }

    const FluxModel& flux() const { return flux_; }
    const KernelSpec& kernel() const { return op_.kernel(); }
    const Grid1D& grid() const { return op_.grid(); }
    const SolverOptions& options() const { return opts_; }

    SimState initial_state(std::vector<double> u0, double t0 = 0.0) const {
        if (u0.size() != grid().n_cells) throw DomainError("initial data does not match the grid");
        for (std::size_t i = 0; i < u0.size(); ++i)
            if (!(u0[i] >= -1e-10 && u0[i] <= flux_.m + 1e-10))
                throw DomainError("initial density " + std::to_string(u0[i]) + " in cell " + std::to_string(i) +
                                  " outside [0, m]");
        SimState s;
        s.grid = grid();
        s.u = std::move(u0);
        s.t = t0;
        refresh(s);
        return s;
    }

    /// Largest admissible step for state `s`.
    double stable_dt(const SimState& s) const {
        const double alpha = max_speed(s.u, s.ubar);
        const double dx = grid().dx;
        const double dt = alpha > 0.0 ? opts_.cfl * dx / alpha : opts_.cfl * dx;
        return std::min(dt, 0.1 * kernel().gamma());
    }

    /// One accepted step of size min(stable_dt, dt_limit).
    SimState step(const SimState& s, double dt_limit = std::numeric_limits<double>::infinity()) const {
        const double dt = std::min(stable_dt(s), dt_limit);
        const double lambda = dt / grid().dx;
        SimState next;
        next.grid = s.grid;
        next.t = s.t + dt;
        next.step_count = s.step_count + 1;
        if (opts_.order == 1) {
            next.u = euler(s.u, s.ubar, lambda);
        } else {
            auto stage = euler(s.u, s.ubar, lambda);
            check(stage, s, "first stage");
            auto stage_bar = nonlocal(stage);
            auto second = euler(stage, stage_bar, lambda);
            next.u.resize(s.u.size());
            for (std::size_t i = 0; i < s.u.size(); ++i) next.u[i] = 0.5 * (s.u[i] + second[i]);
        }
        check(next.u, s, "step");
        refresh(next);
        return next;
    }

    RunResult run(SimState s, const RunOptions& ro) const {
        if (!(ro.t_final > s.t)) throw DomainError("t_final must exceed the start time");
        RunResult out;
        const double dx = grid().dx;
        out.ceiling = ro.detector.ceiling(s.peak_slope(), s.umax() - s.umin(), dx);
        out.under_resolved = ro.detector.enabled && s.peak_slope() >= out.ceiling;

        std::vector<double> stops;
        for (double ts : ro.snapshot_times)
            if (ts >= s.t && ts <= ro.t_final) stops.push_back(ts);
        std::sort(stops.begin(), stops.end());
        std::size_t next_stop = 0;
        auto take_snapshots = [&](const SimState& st) {
            while (next_stop < stops.size() && stops[next_stop] <= st.t + 1e-12 * std::max(1.0, st.t)) {
                out.snapshots.push_back(snapshot(st, stops[next_stop]));
                ++next_stop;
            }
        };
        auto trace_row = [](const SimState& st) {
            return TraceRow{st.t, st.M, st.N, st.mass(), st.umin(), st.umax()};
        };

        out.trace.push_back(trace_row(s));
        take_snapshots(s);
        std::deque<double> history{s.peak_slope()};
        const auto window = static_cast<std::size_t>(std::max(ro.detector.growth_window, 1));
        const double t_end_tol = 1e-13 * std::max(1.0, std::abs(ro.t_final));

        while (s.t < ro.t_final - t_end_tol) {
            if (s.step_count >= ro.max_steps) throw NumericDivergence("step budget exhausted", s);
            double limit = ro.t_final - s.t;
            if (next_stop < stops.size()) limit = std::min(limit, stops[next_stop] - s.t);
            s = step(s, limit);
            take_snapshots(s);

            const double peak = s.peak_slope();
            history.push_back(peak);
            if (history.size() > window + 1) history.pop_front();
            if (s.step_count % std::max<std::size_t>(ro.trace_stride, 1) == 0) out.trace.push_back(trace_row(s));

            if (ro.detector.enabled && peak >= out.ceiling && history.size() == window + 1 &&
                ro.detector.growing(history)) {
                out.event.detected = true;
                out.event.t_blowup = s.t;
                out.event.criterion = BlowupCriterion::SlopeCeiling;
                out.event.peak_slope = peak;
                out.event.x_location = grid().center(argmax_abs(s.ux));
                break;
            }
        }
        if (out.trace.back().t != s.t) out.trace.push_back(trace_row(s));
        if (!out.event.detected) {
            out.event.peak_slope = s.peak_slope();
            out.event.x_location = grid().center(argmax_abs(s.ux));
        }
        out.state = std::move(s);
        return out;
    }

    Snapshot snapshot(const SimState& s, double label) const {
        Snapshot snap{label, {}, s.u, s.ubar, s.ux};
        snap.x.resize(s.u.size());
        for (std::size_t i = 0; i < s.u.size(); ++i) snap.x[i] = grid().center(i);
        return snap;
    }

private:
    std::vector<double> nonlocal(std::span<const double> u) const {
        if (!flux_.nonlocal) return std::vector<double>(u.size(), 0.0);
        return op_.convolve(u);
    }

    void refresh(SimState& s) const {
        s.ubar = nonlocal(s.u);
        s.ubar_x = flux_.nonlocal ? op_.derivative(s.u) : std::vector<double>(s.u.size(), 0.0);
        s.ux = slopes(grid(), s.u);
        const auto [lo, hi] = std::minmax_element(s.ux.begin(), s.ux.end());
        s.M = *hi;
        s.N = *lo;
        if (grid().boundary == Boundary::ConstantExtension) {
            // The data continue as constants beyond the domain.
            s.M = std::max(s.M, 0.0);
            s.N = std::min(s.N, 0.0);
        }
    }

    static std::size_t argmax_abs(const std::vector<double>& v) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < v.size(); ++i)
            if (std::abs(v[i]) > std::abs(v[best])) best = i;
        return best;
    }

    static double minmod(double a, double b) {
        if (a * b <= 0.0) return 0.0;
        return std::abs(a) < std::abs(b) ? a : b;
    }

    /// Interface states (uL, uR) for interface k - 1/2, k = 0..n.
    std::pair<std::vector<double>, std::vector<double>> interface_states(std::span<const double> u) const {
        const Grid1D& g = grid();
        const std::size_t n = g.n_cells;
        std::vector<double> left(n + 1), right(n + 1);
        if (opts_.order == 1) {
            for (std::size_t k = 0; k <= n; ++k) {
                const auto kk = static_cast<std::ptrdiff_t>(k);
                left[k] = u[g.wrap(kk - 1)];
                right[k] = u[g.wrap(kk)];
            }
            return {left, right};
        }
        std::vector<double> sigma(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<std::ptrdiff_t>(i);
            sigma[i] = minmod(u[i] - u[g.wrap(ii - 1)], u[g.wrap(ii + 1)] - u[i]);
        }
        for (std::size_t k = 0; k <= n; ++k) {
            const auto kk = static_cast<std::ptrdiff_t>(k);
            const std::size_t a = g.wrap(kk - 1), b = g.wrap(kk);
            const bool outside_left = g.boundary == Boundary::ConstantExtension && k == 0;
            const bool outside_right = g.boundary == Boundary::ConstantExtension && k == n;
            left[k] = outside_left ? u[a] : u[a] + 0.5 * sigma[a];
            right[k] = outside_right ? u[b] : u[b] - 0.5 * sigma[b];
        }
        return {left, right};
    }

    double max_speed(std::span<const double> u, std::span<const double> ubar) const {
        const Grid1D& g = grid();
        const auto [left, right] = interface_states(u);
        double alpha = 0.0;
        for (std::size_t k = 0; k <= g.n_cells; ++k) {
            const auto kk = static_cast<std::ptrdiff_t>(k);
            const double ub = 0.5 * (ubar[g.wrap(kk - 1)] + ubar[g.wrap(kk)]);
            alpha = std::max({alpha, std::abs(flux_.F_u(left[k], ub)), std::abs(flux_.F_u(right[k], ub))});
        }
        return alpha;
    }

    std::vector<double> euler(std::span<const double> u, std::span<const double> ubar, double lambda) const {
        const Grid1D& g = grid();
        const std::size_t n = g.n_cells;
        const auto [left, right] = interface_states(u);
        std::vector<double> fhat(n + 1);
        for (std::size_t k = 0; k <= n; ++k) {
            const auto kk = static_cast<std::ptrdiff_t>(k);
            const double ub = 0.5 * (ubar[g.wrap(kk - 1)] + ubar[g.wrap(kk)]);
            const double ul = left[k], ur = right[k];
            const double alpha = std::max(std::abs(flux_.F_u(ul, ub)), std::abs(flux_.F_u(ur, ub)));
            fhat[k] = 0.5 * (flux_.F(ul, ub) + flux_.F(ur, ub)) - 0.5 * alpha * (ur - ul);
        }
        if (g.boundary == Boundary::Periodic) fhat[n] = fhat[0];
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = u[i] - lambda * (fhat[i + 1] - fhat[i]);
        return out;
    }

    void check(const std::vector<double>& u, const SimState& last, const char* where) const {
        constexpr double tol = 1e-10;
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (!std::isfinite(u[i]))
                throw NumericDivergence(std::string(where) + ": non-finite density in cell " + std::to_string(i), last);
            if (u[i] < -tol || u[i] > flux_.m + tol)
                throw NumericDivergence(std::string(where) + ": maximum principle violated in cell " +
                                            std::to_string(i) + " (u = " + std::to_string(u[i]) + ")",
                                        last);
        }
    }

    FluxModel flux_;
    NonlocalOperator op_;
    SolverOptions opts_;
};

/// One first-order step of the default scheme.
inline SimState step(const SimState& s, const FluxModel& f, const KernelSpec& k, double cfl) {
    FvSolver solver(f, k, s.grid, SolverOptions{cfl, 1});
    SimState copy = s;
    if (copy.ubar.size() != copy.u.size()) copy = solver.initial_state(copy.u, copy.t);
    return solver.step(copy);
}

} // namespace nlsc
