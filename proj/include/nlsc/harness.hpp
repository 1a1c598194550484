#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "nlsc/config.hpp"
#include "nlsc/errors.hpp"
#include "nlsc/flux.hpp"
#include "nlsc/grid.hpp"
#include "nlsc/initial_data.hpp"
#include "nlsc/kernel.hpp"
#include "nlsc/solver.hpp"
#include "nlsc/threshold.hpp"

namespace nlsc {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr int kExitClean = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBlowup = 10;
inline constexpr int kExitNumeric = 20;

/// Everything a single simulation needs, resolved from a Config.
struct Scenario {
    Grid1D grid;
    KernelSpec kernel = KernelSpec::constant(1.0);
    FluxModel flux;
    InitialData ic;
    SolverOptions solver;
    RunOptions run;
};

inline const std::vector<std::string>& known_config_keys() {
    static const std::vector<std::string> keys{
        "grid.n_cells",      "grid.length",          "grid.x_left",        "grid.boundary",
        "kernel.kind",       "kernel.gamma",         "kernel.k0",          "kernel.table_path",
        "flux.name",         "flux.m",               "sim.t_final",        "sim.cfl",
        "sim.order",         "sim.trace_stride",     "sim.snapshot_times", "sim.max_steps",
        "detector.enabled",  "detector.slope_ceiling", "detector.growth_window",
        "detector.resolution_fraction", "detector.strict_monotone", "ic.name", "seed"};
    return keys;
}

namespace detail {

/// Runs `f`, rethrowing library errors as ConfigError tagged with `key`.
template <class F>
auto keyed(const std::string& key, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(key, e.what());
    }
}

inline InitialData build_ic(const Config& c, const Grid1D& g) {
    const std::string name = c.string("ic.name");
    auto num = [&](const char* k, double fb) { return c.number(std::string("ic.") + k, fb); };
    auto req = [&](const char* k) { return c.number(std::string("ic.") + k); };
    return keyed("ic.name", [&]() -> InitialData {
        if (name == "constant") return constant_ic(req("value"));
        if (name == "sine")
            return sine_ic(req("mean"), req("amplitude"), g.length(), num("periods", 1.0), num("x0", g.x_left));
        if (name == "tanh_front")
            return tanh_front_ic(num("lo", 0.2), num("hi", 0.8), req("sup_slope"), num("center", 0.0));
        if (name == "two_front")
            return two_front_ic(num("lo", 0.2), num("hi", 0.8), req("sup_slope"), num("inf_slope", 0.0),
                                num("up_center", -2.0), num("down_center", 2.0));
        if (name == "red_light")
            return red_light_ic(num("background", 0.4), num("plug_left", 0.0), num("plug_right", 1.0),
                                num("smoothing", 0.2), num("downstream", 0.4));
        if (name == "unit_ramp") return unit_ramp_ic(req("alpha1"), req("alpha2"));
        if (name == "random_smooth")
            return random_smooth_ic(g.length(), num("mean", 0.5), num("spread", 0.4),
                                    static_cast<int>(c.integer("ic.modes", 6)),
                                    static_cast<unsigned long>(c.integer("seed", 0)), g.x_left);
        throw ConfigError("ic.name", "unknown initial data '" + name + "'");
    });
}

} // namespace detail

inline Scenario build_scenario(const Config& c) {
    c.check_keys(known_config_keys(), {"ic."});
    Scenario s;

    const auto n = c.integer("grid.n_cells");
    if (n < 1) throw ConfigError("grid.n_cells", "must be at least 1");
    const double length = c.number("grid.length");
    if (!(length > 0.0) || !std::isfinite(length)) throw ConfigError("grid.length", "must be positive");
    const auto boundary =
        detail::keyed("grid.boundary", [&] { return boundary_from_string(c.string("grid.boundary", "periodic")); });
    s.grid = detail::keyed("grid.x_left", [&] {
        return Grid1D::uniform(c.number("grid.x_left", 0.0), length, static_cast<std::size_t>(n), boundary);
    });

    const std::string kind = c.string("kernel.kind", "constant");
    s.kernel = detail::keyed("kernel.kind", [&]() -> KernelSpec {
        if (kind == "constant") return KernelSpec::constant(c.number("kernel.gamma"), c.number("kernel.k0", 1.0));
        if (kind == "linear") return KernelSpec::linear(c.number("kernel.gamma"));
        if (kind == "tabulated") return KernelSpec::load_table(c.string("kernel.table_path"));
        throw ConfigError("kernel.kind", "unknown kernel '" + kind + "'");
    });
    detail::keyed("kernel.gamma", [&] {
        s.grid.check_window(s.kernel.gamma());
        return 0;
    });

    s.flux = detail::keyed("flux.name",
                           [&] { return make_flux(c.string("flux.name", "arrhenius"), c.number("flux.m", 1.0)); });
    s.ic = detail::build_ic(c, s.grid);

    s.solver.cfl = c.number("sim.cfl", 0.45);
    s.solver.order = static_cast<int>(c.integer("sim.order", 1));
    if (!(s.solver.cfl > 0.0 && s.solver.cfl <= 0.9)) throw ConfigError("sim.cfl", "must lie in (0, 0.9]");
    if (s.solver.order != 1 && s.solver.order != 2) throw ConfigError("sim.order", "must be 1 or 2");

    s.run.t_final = c.number("sim.t_final", 20.0 * s.kernel.gamma());
    if (!(s.run.t_final > 0.0) || !std::isfinite(s.run.t_final)) throw ConfigError("sim.t_final", "must be positive");
    const auto stride = c.integer("sim.trace_stride", 10);
    if (stride < 1) throw ConfigError("sim.trace_stride", "must be at least 1");
    s.run.trace_stride = static_cast<std::size_t>(stride);
    if (c.has("sim.snapshot_times")) s.run.snapshot_times = c.numbers("sim.snapshot_times");
    if (c.has("sim.max_steps")) s.run.max_steps = static_cast<std::size_t>(c.integer("sim.max_steps"));

    auto& d = s.run.detector;
    d.enabled = c.boolean("detector.enabled", true);
    d.slope_ceiling = c.maybe_number("detector.slope_ceiling");
    d.growth_window = static_cast<int>(c.integer("detector.growth_window", 20));
    if (d.growth_window < 1) throw ConfigError("detector.growth_window", "must be at least 1");
    d.resolution_fraction = c.number("detector.resolution_fraction", 0.2);
    if (!(d.resolution_fraction > 0.0)) throw ConfigError("detector.resolution_fraction", "must be positive");
    d.strict_monotone = c.boolean("detector.strict_monotone", false);
    return s;
}

/// Threshold the scenario's initial data is measured against: closed forms for
/// the Arrhenius flux with the two reference kernels, the general box search
/// otherwise, and 0 for the local flux (any compressive slope breaks).
inline ThresholdReport scenario_threshold(const Scenario& s) {
    const double sup = s.ic.sup_slope, inf = s.ic.inf_slope;
    ThresholdReport r;
    if (!s.flux.nonlocal) {
        r.model = "local:" + s.flux.name;
        r.threshold = 0.0;
        r.sup_slope = sup;
        r.inf_slope = inf;
        r.above = sup > 0.0;
        return r;
    }
    const bool reference = s.flux.name == "arrhenius" && s.flux.m == 1.0;
    if (reference && s.kernel.kind() == KernelKind::Constant && s.kernel.l1_norm() == 1.0)
        return classify(Potential::Constant, s.kernel.gamma(), sup, inf);
    if (reference && s.kernel.kind() == KernelKind::Linear)
        return classify(Potential::Linear, s.kernel.gamma(), sup, inf);
    r = general_lambda(s.flux, s.kernel, inf, 201);
    r.sup_slope = sup;
    r.inf_slope = inf;
    r.above = sup > r.threshold;
    return r;
}

inline std::string fmt_num(double v) { return fmt::format("{}", v); }

inline json to_json(const ThresholdReport& r) {
    json j{{"model", r.model},       {"threshold", r.threshold}, {"sup_slope", r.sup_slope},
           {"inf_slope", r.inf_slope}, {"above", r.above},       {"ntilde0", r.ntilde0}};
    if (r.maximizer_u) j["maximizer_u"] = *r.maximizer_u;
    if (r.maximizer_v) j["maximizer_v"] = *r.maximizer_v;
    if (r.grid_resolution) j["grid_resolution"] = r.grid_resolution;
    if (!r.box.empty()) {
        j["box"] = r.box;
        j["box_half_width"] = r.box_half_width;
    }
    return j;
}

inline json to_json(const BlowupEvent& e, double ceiling) {
    json j{{"detected", e.detected},
           {"criterion", std::string(to_string(e.criterion))},
           {"peak_slope", e.peak_slope},
           {"ceiling", std::isfinite(ceiling) ? json(ceiling) : json(nullptr)}};
    j["t_blowup"] = e.t_blowup ? json(*e.t_blowup) : json(nullptr);
    j["x_location"] = e.detected ? json(e.x_location) : json(nullptr);
    return j;
}

inline void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << text;
}

inline std::string trace_csv(const std::vector<TraceRow>& rows) {
    std::string s = "t,M,N,mass,umin,umax\n";
    for (const auto& r : rows)
        s += fmt::format("{},{},{},{},{},{}\n", r.t, r.M, r.N, r.mass, r.umin, r.umax);
    return s;
}

inline std::string snapshot_csv(const Snapshot& snap) {
    std::string s = "x,u,ubar,ux\n";
    for (std::size_t i = 0; i < snap.x.size(); ++i)
        s += fmt::format("{},{},{},{}\n", snap.x[i], snap.u[i], snap.ubar[i], snap.ux[i]);
    return s;
}

struct SingleResult {
    int exit_code = kExitClean;
    ThresholdReport threshold;
    std::optional<RunResult> run; ///< empty after a numeric failure
    std::string failure;
};

inline SingleResult simulate(const Scenario& s) {
    SingleResult out;
    out.threshold = scenario_threshold(s);
    const FvSolver solver(s.flux, s.kernel, s.grid, s.solver);
    try {
        out.run = solver.run(solver.initial_state(cell_averages(s.ic, s.grid)), s.run);
        out.exit_code = out.run->event.detected ? kExitBlowup : kExitClean;
        if (out.run->under_resolved && !out.run->event.detected) {
            out.exit_code = kExitNumeric;
            out.failure = fmt::format("initial data under-resolved: slope {} already at the detector ceiling {}",
                                      std::max(out.run->trace.front().M, -out.run->trace.front().N), out.run->ceiling);
        }
    } catch (const NumericDivergence& e) {
        out.exit_code = kExitNumeric;
        out.failure = e.what();
    } catch (const DomainError& e) {
        out.exit_code = kExitNumeric;
        out.failure = e.what();
    }
    return out;
}

/// One simulation; writes trace.csv, snapshots/, blowup.json and threshold.json
/// when `out_dir` is given.
inline SingleResult run_single(const Config& c, const std::optional<fs::path>& out_dir = std::nullopt) {
    const Scenario s = build_scenario(c);
    SingleResult r = simulate(s);
    if (!out_dir) return r;
    fs::create_directories(*out_dir);
    write_text(*out_dir / "threshold.json", to_json(r.threshold).dump(2) + "\n");
    json ev;
    if (r.run) {
        ev = to_json(r.run->event, r.run->ceiling);
        if (!r.failure.empty()) ev["failure"] = r.failure;
        write_text(*out_dir / "trace.csv", trace_csv(r.run->trace));
        for (std::size_t i = 0; i < r.run->snapshots.size(); ++i)
            write_text(*out_dir / "snapshots" / fmt::format("snap_{:03d}.csv", i), snapshot_csv(r.run->snapshots[i]));
    } else {
        ev = {{"detected", false}, {"failure", r.failure}};
    }
    ev["exit_code"] = r.exit_code;
    write_text(*out_dir / "blowup.json", ev.dump(2) + "\n");
    return r;
}

// ---------------------------------------------------------------- sweeps

struct SweepAxis {
    std::string key;
    std::vector<double> values;
};

struct SweepConfig {
    Config base;
    SweepAxis axis1;
    std::optional<SweepAxis> axis2;
    int runs_per_point = 1;
    int parallelism = 1;
};

namespace detail {

inline SweepAxis parse_axis(const Config& c, const std::string& prefix, const Config& base) {
    SweepAxis a;
    a.key = c.string(prefix + ".key");
    if (!base.has(a.key) && a.key != "sim.t_final")
        throw ConfigError(prefix + ".key", "axis references '" + a.key + "', which the base config does not set");
    if (c.has(prefix + ".values")) {
        a.values = c.numbers(prefix + ".values");
    } else if (c.has(prefix + ".linspace") || c.has(prefix + ".logspace")) {
        const bool log = c.has(prefix + ".logspace");
        const std::string k = prefix + (log ? ".logspace" : ".linspace");
        const auto v = c.numbers(k);
        if (v.size() != 3 || v[2] < 1 || v[2] != std::floor(v[2])) throw ConfigError(k, "expected [start, stop, count]");
        if (log && !(v[0] > 0.0 && v[1] > 0.0)) throw ConfigError(k, "logspace endpoints must be positive");
        const auto cnt = static_cast<std::size_t>(v[2]);
        for (std::size_t i = 0; i < cnt; ++i) {
            const double t = cnt == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(cnt - 1);
            a.values.push_back(log ? v[0] * std::pow(v[1] / v[0], t) : v[0] + (v[1] - v[0]) * t);
        }
    } else {
        throw ConfigError(prefix, "axis needs values, linspace or logspace");
    }
    if (a.values.empty()) throw ConfigError(prefix, "axis range is empty");
    for (double x : a.values)
        if (!std::isfinite(x)) throw ConfigError(prefix, "axis values must be finite");
    return a;
}

} // namespace detail

/// Splits a config with a `sweep` section into the base scenario and its axes.
inline SweepConfig parse_sweep(const Config& c) {
    SweepConfig s;
    s.base = c.without("sweep");
    const Config sw = c.subtree("sweep");
    if (sw.entries().empty()) {
        // No axes: a 1x1 sweep over the base scenario.
        s.axis1 = {"seed", {static_cast<double>(s.base.integer("seed", 0))}};
        s.base.set("seed", static_cast<long>(s.axis1.values[0]));
        return s;
    }
    sw.check_keys({"axis1.key", "axis1.values", "axis1.linspace", "axis1.logspace", "axis2.key", "axis2.values",
                   "axis2.linspace", "axis2.logspace", "runs_per_point", "parallelism"},
                  {});
    Config full = c; // error keys keep the "sweep." prefix
    s.axis1 = detail::parse_axis(full, "sweep.axis1", s.base);
    if (sw.has("axis2.key")) s.axis2 = detail::parse_axis(full, "sweep.axis2", s.base);
    s.runs_per_point = static_cast<int>(sw.integer("runs_per_point", 1));
    if (s.runs_per_point < 1) throw ConfigError("sweep.runs_per_point", "must be at least 1");
    s.parallelism = static_cast<int>(sw.integer("parallelism", 1));
    if (s.parallelism < 1) throw ConfigError("sweep.parallelism", "must be at least 1");
    return s;
}

struct SweepPoint {
    double axis1 = 0.0;
    std::optional<double> axis2;
    double sup_slope = 0.0, inf_slope = 0.0, threshold = 0.0;
    bool above = false, detected = false, consistent = true;
    std::optional<double> t_blowup;
    double peak_slope = 0.0;
    std::string failure;
};

struct BoundaryGap {
    std::optional<double> row; ///< axis2 value; empty for one-axis sweeps
    double analytic = 0.0;
    std::optional<double> empirical; ///< smallest sup slope with detected blow-up
    std::optional<double> gap;       ///< analytic - empirical
};

struct SweepResult {
    std::string axis1_key, axis2_key;
    std::vector<SweepPoint> points;
    double soundness = 1.0;
    std::size_t above_count = 0;
    std::vector<BoundaryGap> gaps;
    std::vector<std::size_t> failed;
};

namespace detail {

inline void set_axis(Config& c, const std::string& key, double v) {
    if (key == "seed" || key == "grid.n_cells" || key == "ic.modes" || key == "sim.order")
        c.set(key, static_cast<long>(std::llround(v)));
    else
        c.set(key, v);
}

inline SweepPoint evaluate_point(const SweepConfig& sw, double a1, std::optional<double> a2) {
    SweepPoint p;
    p.axis1 = a1;
    p.axis2 = a2;
    try {
        Config c = sw.base;
        set_axis(c, sw.axis1.key, a1);
        if (a2) set_axis(c, sw.axis2->key, *a2);
        const long seed0 = c.integer("seed", 0);
        p.detected = true;
        for (int r = 0; r < sw.runs_per_point; ++r) {
            if (sw.runs_per_point > 1) c.set("seed", seed0 + r);
            const Scenario s = build_scenario(c);
            const SingleResult res = simulate(s);
            if (r == 0) {
                p.sup_slope = res.threshold.sup_slope;
                p.inf_slope = res.threshold.inf_slope;
                p.threshold = res.threshold.threshold;
            }
            // Repeated runs only differ through seeded data; report the weakest.
            p.above = r == 0 ? res.threshold.above : (p.above && res.threshold.above);
            if (!res.failure.empty()) {
                p.failure = res.failure;
                p.detected = false;
                break;
            }
            const auto& ev = res.run->event;
            p.detected = p.detected && ev.detected;
            p.peak_slope = std::max(p.peak_slope, ev.detected ? ev.peak_slope : res.run->state.peak_slope());
            if (ev.detected) p.t_blowup = std::max(p.t_blowup.value_or(0.0), *ev.t_blowup);
        }
        if (!p.detected) p.t_blowup.reset();
    } catch (const std::exception& e) {
        p.failure = e.what();
        p.detected = false;
        p.t_blowup.reset();
    }
    p.consistent = p.failure.empty() && (!p.above || p.detected);
    return p;
}

} // namespace detail

inline SweepResult run_sweep(const SweepConfig& sw, int jobs = 0,
                             const std::function<void(std::size_t, const SweepPoint&)>& progress = {}) {
    std::vector<std::pair<double, std::optional<double>>> grid;
    for (double b : sw.axis2 ? sw.axis2->values : std::vector<double>{NAN})
        for (double a : sw.axis1.values) grid.emplace_back(a, sw.axis2 ? std::optional<double>(b) : std::nullopt);

    SweepResult res;
    res.axis1_key = sw.axis1.key;
    res.axis2_key = sw.axis2 ? sw.axis2->key : "";
    res.points.resize(grid.size());

    const int threads = std::max(1, std::min<int>(jobs > 0 ? jobs : sw.parallelism, static_cast<int>(grid.size())));
    std::atomic<std::size_t> next{0};
    std::mutex progress_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) {
            res.points[i] = detail::evaluate_point(sw, grid[i].first, grid[i].second);
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(i, res.points[i]);
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::size_t hit = 0;
    for (std::size_t i = 0; i < res.points.size(); ++i) {
        const auto& p = res.points[i];
        if (!p.failure.empty()) res.failed.push_back(i);
        if (p.above) {
            ++res.above_count;
            if (p.detected) ++hit;
        }
    }
    res.soundness = res.above_count ? static_cast<double>(hit) / static_cast<double>(res.above_count) : 1.0;

    std::map<double, BoundaryGap> rows;
    for (const auto& p : res.points) {
        const double key = p.axis2.value_or(0.0);
        auto [it, fresh] = rows.try_emplace(key);
        auto& g = it->second;
        if (fresh) {
            g.row = p.axis2;
            g.analytic = p.threshold;
        }
        if (p.failure.empty() && p.detected && (!g.empirical || p.sup_slope < *g.empirical)) g.empirical = p.sup_slope;
    }
    for (auto& [k, g] : rows) {
        if (g.empirical) g.gap = g.analytic - *g.empirical;
        res.gaps.push_back(g);
    }
    return res;
}

inline std::string sweep_csv(const SweepResult& r) {
    std::string s = "index,axis1,axis2,sup_slope,inf_slope,threshold,above,detected,t_blowup,peak_slope,consistent,"
                    "failure\n";
    for (std::size_t i = 0; i < r.points.size(); ++i) {
        const auto& p = r.points[i];
        std::string fail = p.failure;
        std::replace(fail.begin(), fail.end(), ',', ';');
        std::replace(fail.begin(), fail.end(), '\n', ' ');
        s += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", i, p.axis1, p.axis2 ? fmt_num(*p.axis2) : "",
                         p.sup_slope, p.inf_slope, p.threshold, p.above ? 1 : 0, p.detected ? 1 : 0,
                         p.t_blowup ? fmt_num(*p.t_blowup) : "", p.peak_slope, p.consistent ? 1 : 0, fail);
    }
    return s;
}

inline json sweep_report(const SweepResult& r) {
    json j;
    j["axis1"] = r.axis1_key;
    if (!r.axis2_key.empty()) j["axis2"] = r.axis2_key;
    j["points"] = r.points.size();
    j["above_threshold"] = r.above_count;
    j["soundness"] = r.soundness;
    j["soundness_vacuous"] = r.above_count == 0;
    j["inconsistent"] = json::array();
    for (std::size_t i = 0; i < r.points.size(); ++i)
        if (!r.points[i].consistent && r.points[i].failure.empty()) j["inconsistent"].push_back(i);
    j["failed"] = json::array();
    for (auto i : r.failed) j["failed"].push_back({{"index", i}, {"failure", r.points[i].failure}});
    j["boundary"] = json::array();
    for (const auto& g : r.gaps) {
        json row{{"analytic", g.analytic}};
        row["row"] = g.row ? json(*g.row) : json(nullptr);
        row["empirical"] = g.empirical ? json(*g.empirical) : json(nullptr);
        row["gap"] = g.gap ? json(*g.gap) : json(nullptr);
        j["boundary"].push_back(row);
    }
    return j;
}

inline void write_sweep(const SweepResult& r, const fs::path& dir) {
    fs::create_directories(dir);
    write_text(dir / "sweep.csv", sweep_csv(r));
    write_text(dir / "report.json", sweep_report(r).dump(2) + "\n");
}

// ------------------------------------------------------------ refinement

enum class Resolution { Converged, Diverging, Inconclusive };

inline std::string_view to_string(Resolution r) {
    switch (r) {
        case Resolution::Converged: return "converged";
        case Resolution::Diverging: return "diverging";
        case Resolution::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct RefinementReport {
    std::vector<std::size_t> n_cells;
    std::vector<double> times;
    std::vector<std::vector<double>> peaks;  ///< [level][time]
    std::vector<std::vector<double>> ratios; ///< [time][level - 1]: peak(l) / peak(l-1)
    std::vector<Resolution> verdicts;        ///< per time
    std::vector<double> l1_differences;      ///< |u_l - R u_{l+1}|_1 at the last time
    std::vector<double> orders;              ///< log2 of successive difference ratios
};

/// Peak-slope ratio per level: >= 1.8 everywhere reads as an unresolved
/// gradient, |last - 1| <= 0.1 as a resolved one.
inline Resolution judge(const std::vector<double>& ratios) {
    if (ratios.empty()) return Resolution::Inconclusive;
    if (std::all_of(ratios.begin(), ratios.end(), [](double r) { return r >= 1.8; })) return Resolution::Diverging;
    if (std::abs(ratios.back() - 1.0) <= 0.1) return Resolution::Converged;
    return Resolution::Inconclusive;
}

/// Reruns the scenario with dx halved `levels - 1` times (detector off) and
/// compares peak slopes at matched observation times. Times default to
/// sim.snapshot_times, else sim.t_final.
inline RefinementReport refinement_study(const Config& c, int levels, std::vector<double> times = {}, int jobs = 1) {
    if (levels < 2) throw DomainError("refinement study needs at least two levels");
    Scenario base = build_scenario(c);
    if (times.empty()) times = base.run.snapshot_times;
    if (times.empty()) times = {base.run.t_final};
    std::sort(times.begin(), times.end());

    RefinementReport rep;
    rep.times = times;
    rep.peaks.assign(static_cast<std::size_t>(levels), {});
    std::vector<std::vector<double>> finals(static_cast<std::size_t>(levels));
    for (int l = 0; l < levels; ++l) rep.n_cells.push_back(base.grid.n_cells << l);

    auto one = [&](std::size_t l) {
        Scenario s = base;
        s.grid = Grid1D::uniform(base.grid.x_left, base.grid.length(), rep.n_cells[l], base.grid.boundary);
        s.run.detector.enabled = false;
        s.run.t_final = times.back();
        s.run.snapshot_times = times;
        const FvSolver solver(s.flux, s.kernel, s.grid, s.solver);
        const auto r = solver.run(solver.initial_state(cell_averages(s.ic, s.grid)), s.run);
        for (const auto& snap : r.snapshots) {
            double peak = 0.0;
            for (double v : snap.ux) peak = std::max(peak, std::abs(v));
            rep.peaks[l].push_back(peak);
        }
        finals[l] = r.state.u;
    };
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(levels));
    auto worker = [&] {
        for (std::size_t l = next++; l < static_cast<std::size_t>(levels); l = next++) {
            try {
                one(l);
            } catch (...) {
                errors[l] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < std::min(jobs, levels); ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    for (std::size_t k = 0; k < times.size(); ++k) {
        std::vector<double> r;
        for (int l = 1; l < levels; ++l) {
            const double a = rep.peaks[l - 1][k], b = rep.peaks[l][k];
            r.push_back(a == 0.0 ? (b == 0.0 ? 1.0 : INFINITY) : b / a);
        }
        rep.verdicts.push_back(judge(r));
        rep.ratios.push_back(std::move(r));
    }

    const double dx0 = base.grid.length() / static_cast<double>(rep.n_cells[0]);
    for (int l = 0; l + 1 < levels; ++l) {
        const auto& coarse = finals[l];
        const auto& fine = finals[l + 1];
        const double dx = dx0 / static_cast<double>(1u << l);
        double d = 0.0;
        for (std::size_t i = 0; i < coarse.size(); ++i)
            d += std::abs(coarse[i] - 0.5 * (fine[2 * i] + fine[2 * i + 1])) * dx;
        rep.l1_differences.push_back(d);
    }
    for (std::size_t l = 0; l + 1 < rep.l1_differences.size(); ++l) {
        const double a = rep.l1_differences[l], b = rep.l1_differences[l + 1];
        rep.orders.push_back(a > 0.0 && b > 0.0 ? std::log2(a / b) : NAN);
    }
    return rep;
}

inline json to_json(const RefinementReport& r) {
    json j;
    j["n_cells"] = r.n_cells;
    j["times"] = r.times;
    j["peaks"] = r.peaks;
    json ratios = json::array();
    for (const auto& row : r.ratios) {
        json a = json::array();
        for (double x : row) a.push_back(std::isfinite(x) ? json(x) : json(nullptr));
        ratios.push_back(a);
    }
    j["ratios"] = ratios;
    j["verdicts"] = json::array();
    for (auto v : r.verdicts) j["verdicts"].push_back(std::string(to_string(v)));
    j["l1_differences"] = r.l1_differences;
    j["orders"] = json::array();
    for (double o : r.orders) j["orders"].push_back(std::isfinite(o) ? json(o) : json(nullptr));
    return j;
}

} // namespace nlsc
