// nlsc: command-line driver for single runs, sweeps, refinement studies,
// threshold evaluation and Riccati blow-up times.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "nlsc/config.hpp"
#include "nlsc/harness.hpp"
#include "nlsc/riccati.hpp"
#include "nlsc/threshold.hpp"

namespace {

void setup_logging() {
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::warn);
    if (const char* lvl = std::getenv("NSL_LOG")) {
        const auto parsed = spdlog::level::from_str(lvl);
        // from_str maps unknown names to "off"; only accept the documented ones.
        const std::string s = lvl;
        if (s == "error" || s == "warn" || s == "info" || s == "debug")
            spdlog::set_level(parsed);
        else
            spdlog::warn("ignoring NSL_LOG={} (expected error, warn, info or debug)", s);
    }
}

nlsc::Config load_config(const std::string& path, std::optional<long> seed) {
    auto c = nlsc::Config::load(path);
    if (seed) c.set("seed", *seed);
    return c;
}

} // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"nonlocal conservation law experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int jobs = 1;
    std::optional<long> seed;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "seed for random initial data");

    auto* run = app.add_subcommand("run", "single simulation");
    auto* sweep = app.add_subcommand("sweep", "parameter sweep");
    auto* refine = app.add_subcommand("refine", "grid refinement study");
    int levels = 3;
    refine->add_option("--levels", levels, "number of grids")->check(CLI::Range(2, 12));

    auto* thr = app.add_subcommand("threshold", "blow-up threshold for given slopes");
    std::string model = "constant", box = "w11";
    double gamma = 1.0, inf_slope = 0.0, sup_slope = 0.0;
    std::size_t resolution = 401;
    thr->add_option("--model", model, "constant, linear or general")
        ->check(CLI::IsMember({"constant", "linear", "general"}));
    thr->add_option("--gamma", gamma, "look-ahead distance");
    thr->add_option("--inf-slope", inf_slope, "inf u0'");
    thr->add_option("--sup-slope", sup_slope, "sup u0'");
    thr->add_option("--resolution", resolution, "grid points per box axis (general model)");
    thr->add_option("--box", box, "slope box for the general model")->check(CLI::IsMember({"w11", "sharp"}));

    auto* ric = app.add_subcommand("riccati", "constant-coefficient Riccati blow-up");
    double a = 1.0, b1 = 0.0, b2 = 1.0, A0 = 2.0, t_max = 10.0;
    ric->add_option("--a", a);
    ric->add_option("--b1", b1);
    ric->add_option("--b2", b2);
    ric->add_option("--A0", A0);
    ric->add_option("--t-max", t_max);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            if (config_path.empty()) throw nlsc::ConfigError("", "--config is required");
            const auto c = load_config(config_path, seed);
            std::optional<nlsc::fs::path> out;
            if (!out_dir.empty()) out = out_dir;
            const auto r = nlsc::run_single(c, out);
            nlsc::json j{{"exit_code", r.exit_code}, {"threshold", nlsc::to_json(r.threshold)}};
            if (r.run) j["blowup"] = nlsc::to_json(r.run->event, r.run->ceiling);
            if (!r.failure.empty()) j["failure"] = r.failure;
            std::cout << j.dump(2) << "\n";
            return r.exit_code;
        }
        if (*sweep) {
            if (config_path.empty()) throw nlsc::ConfigError("", "--config is required");
            const auto sw = nlsc::parse_sweep(load_config(config_path, seed));
            const auto total = sw.axis1.values.size() * (sw.axis2 ? sw.axis2->values.size() : 1);
            spdlog::info("sweep: {} points, {} jobs", total, jobs);
            const auto r = nlsc::run_sweep(sw, jobs, [](std::size_t i, const nlsc::SweepPoint& p) {
                spdlog::debug("point {}: axis1={} detected={} {}", i, p.axis1, p.detected, p.failure);
            });
            if (!out_dir.empty()) nlsc::write_sweep(r, out_dir);
            else std::cout << nlsc::sweep_csv(r);
            std::cout << nlsc::sweep_report(r).dump(2) << "\n";
            return 0;
        }
        if (*refine) {
            if (config_path.empty()) throw nlsc::ConfigError("", "--config is required");
            const auto rep = nlsc::refinement_study(load_config(config_path, seed), levels, {}, jobs);
            const auto j = nlsc::to_json(rep);
            if (!out_dir.empty()) nlsc::write_text(nlsc::fs::path(out_dir) / "refinement.json", j.dump(2) + "\n");
            std::cout << j.dump(2) << "\n";
            return 0;
        }
        if (*thr) {
            nlsc::ThresholdReport r;
            if (model == "general") {
                const auto k = nlsc::KernelSpec::constant(gamma);
                r = nlsc::general_lambda(nlsc::arrhenius(), k, inf_slope, resolution,
                                         box == "w11" ? nlsc::SlopeBox::W11 : nlsc::SlopeBox::Sharp);
                r.sup_slope = sup_slope;
                r.inf_slope = inf_slope;
                r.above = sup_slope > r.threshold;
            } else {
                r = nlsc::classify(model == "constant" ? nlsc::Potential::Constant : nlsc::Potential::Linear, gamma,
                                   sup_slope, inf_slope);
            }
            std::cout << (r.above ? "ABOVE" : "BELOW") << " threshold " << r.threshold << " (" << r.model
                      << ", sup slope " << sup_slope << ")\n";
            std::cout << nlsc::to_json(r).dump(2) << "\n";
            return 0;
        }
        if (*ric) {
            const auto p = nlsc::RiccatiProblem::constant(a, b1, b2, A0, t_max);
            const auto sol = nlsc::riccati_solve(p);
            nlsc::json j{{"closed_form", nullptr}, {"numeric", nullptr}, {"A_final", sol.A.back()},
                         {"t_final", sol.t.back()}};
            const double cf = nlsc::riccati_closed_form_blowup(a, b1, b2, A0);
            if (std::isfinite(cf)) j["closed_form"] = cf;
            if (sol.blowup_time) j["numeric"] = *sol.blowup_time;
            std::cout << j.dump(2) << "\n";
            return 0;
        }
    } catch (const nlsc::ConfigError& e) {
        spdlog::error("config error: {}", e.what());
        return nlsc::kExitConfig;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
