#include "slab/cli.hpp"

#include "slab/dynamics.hpp"
#include "slab/experiments.hpp"
#include "slab/free_energy.hpp"
#include "slab/io.hpp"
#include "slab/matrix_model.hpp"
#include "slab/thresholds.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

namespace slab {

namespace {

using nlohmann::json;

struct KeySpec {
    std::set<std::string> required;
    std::set<std::string> optional;
};

const std::map<std::string, KeySpec>& command_schema() {
    static const std::map<std::string, KeySpec> schema = {
        {"generate", {{"theta", "n"}, {}}},
        {"thresholds", {{"alpha", "theta"}, {"n", "eigenvalues"}}},
        {"free-energy", {{"alpha", "theta"}, {"n", "q_points", "mc_n", "mc_samples", "contour_seeds"}}},
        {"simulate",
         {{"alpha", "theta", "n"}, {"dt", "t_max", "record_stride", "init", "cap_overlap"}}},
        {"mixing", {{"alpha", "theta", "n"}, {"dt", "replicas", "horizon", "inits", "assert_t_mix_max"}}},
        {"transit",
         {{"alpha", "theta", "n_list"},
          {"dt", "replicas", "horizon", "burn_in", "instances", "assert_slope_min",
           "assert_slope_max"}}},
        {"sweep", {{"alpha_grid", "theta_grid"}, {}}},
    };
    return schema;
}

const std::set<std::string> kCommonKeys = {"command", "seed", "out", "workers"};

double require_number(const json& params, const std::string& key) {
    if (!params.contains(key)) throw domain_error("config." + key + ": missing required key");
    if (!params[key].is_number()) throw domain_error("config." + key + ": expected a number");
    return params[key].get<double>();
}

void check_positive(double v, const std::string& path) {
    if (!(v > 0)) throw domain_error("config." + path + ": must be > 0");
}

std::vector<double> number_array(const json& value, const std::string& path) {
    if (!value.is_array() || value.empty())
        throw domain_error("config." + path + ": expected a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& v : value) {
        if (!v.is_number()) throw domain_error("config." + path + ": expected a number");
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& command_hint) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw domain_error(std::string("config: malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw domain_error("config: top level must be a JSON object");

    if (doc.contains("beta"))
        throw domain_error(
            "config.beta: beta is derived from alpha/theta and must not be supplied "
            "independently");

    std::string command = command_hint;
    if (doc.contains("command")) {
        if (!doc["command"].is_string())
            throw domain_error("config.command: expected a string");
        const std::string from_doc = doc["command"].get<std::string>();
        if (!command.empty() && from_doc != command)
            throw domain_error("config.command: '" + from_doc + "' conflicts with CLI command '" +
                               command + "'");
        command = from_doc;
    }
    if (command.empty()) throw domain_error("config.command: missing (no CLI command either)");
    const auto schema_it = command_schema().find(command);
    if (schema_it == command_schema().end())
        throw domain_error("config.command: unknown command '" + command + "'");
    const KeySpec& keys = schema_it->second;

    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (kCommonKeys.count(key) || keys.required.count(key) || keys.optional.count(key))
            continue;
        throw domain_error("config." + key + ": unknown key for command '" + command + "'");
    }
    for (const auto& key : keys.required)
        if (!doc.contains(key)) throw domain_error("config." + key + ": missing required key");

    RunConfig config;
    config.command = command;
    config.params = doc;
    config.params["command"] = command;
    config.seed = doc.value("seed", std::uint64_t{1});
    config.workers = doc.value("workers", 1);
    if (config.workers < 1) throw domain_error("config.workers: must be >= 1");
    if (doc.contains("out")) config.out_dir = doc["out"].get<std::string>();

    // domain validation + defaults per command
    json& p = config.params;
    p["seed"] = config.seed;
    p["workers"] = config.workers;

    auto default_theta_dt = [&](double theta) {
        return default_dt(theta > 1 ? theta + 1.0 / theta : 2.0);
    };

    if (command == "generate") {
        const double theta = require_number(p, "theta");
        if (theta < 0) throw domain_error("config.theta: must be >= 0");
        const double n = require_number(p, "n");
        if (n < 4) throw domain_error("config.n: must be >= 4");
    } else if (command == "thresholds") {
        check_positive(require_number(p, "alpha"), "alpha");
        check_positive(require_number(p, "theta"), "theta");
        if (!p.contains("n")) p["n"] = 1000;
        if (require_number(p, "n") < 4) throw domain_error("config.n: must be >= 4");
        if (p.contains("eigenvalues")) {
            const auto eig = number_array(p["eigenvalues"], "eigenvalues");
            if (eig.size() != 3)
                throw domain_error("config.eigenvalues: expected [lambda1, lambda2, lambdaN]");
        }
    } else if (command == "free-energy") {
        check_positive(require_number(p, "alpha"), "alpha");
        const double theta = require_number(p, "theta");
        if (!(theta > 1)) throw domain_error("config.theta: free-energy requires theta > 1");
        if (!p.contains("n")) p["n"] = 400;
        if (require_number(p, "n") < 4) throw domain_error("config.n: must be >= 4");
        if (!p.contains("q_points")) p["q_points"] = 201;
        if (!p.contains("mc_n")) p["mc_n"] = 8;
        if (!p.contains("mc_samples")) p["mc_samples"] = 1000000;
        if (!p.contains("contour_seeds")) p["contour_seeds"] = 1;
    } else if (command == "simulate" || command == "mixing") {
        check_positive(require_number(p, "alpha"), "alpha");
        const double theta = require_number(p, "theta");
        check_positive(theta, "theta");
        if (require_number(p, "n") < 4) throw domain_error("config.n: must be >= 4");
        if (!p.contains("dt")) p["dt"] = default_theta_dt(theta);
        check_positive(p["dt"].get<double>(), "dt");
        if (command == "simulate") {
            if (!p.contains("t_max")) p["t_max"] = 10.0;
            check_positive(p["t_max"].get<double>(), "t_max");
            if (!p.contains("record_stride")) p["record_stride"] = 10;
            if (p["record_stride"].get<int>() < 1)
                throw domain_error("config.record_stride: must be >= 1");
            if (!p.contains("init")) p["init"] = "uniform";
            const std::string init = p["init"].get<std::string>();
            const std::set<std::string> known = {"uniform", "equator", "plus_u1", "minus_u1",
                                                 "plus_cap"};
            if (!known.count(init)) throw domain_error("config.init: unknown initialization");
            if (init == "plus_cap" && !p.contains("cap_overlap"))
                throw domain_error("config.cap_overlap: required for plus_cap initialization");
        } else {
            if (!p.contains("replicas")) p["replicas"] = 200;
            if (p["replicas"].get<int>() < 30)
                throw domain_error("config.replicas: statistical runs need >= 30 replicas");
            if (!p.contains("horizon")) p["horizon"] = 0.0;
            if (!p.contains("inits")) p["inits"] = json::array({"uniform"});
        }
    } else if (command == "transit") {
        const double alpha = require_number(p, "alpha");
        if (!(alpha > 1)) throw domain_error("config.alpha: transit requires alpha > 1");
        const double theta = require_number(p, "theta");
        if (!(theta > 1)) throw domain_error("config.theta: transit requires theta > 1");
        const auto ns = number_array(p["n_list"], "n_list");
        for (double n : ns)
            if (n < 4) throw domain_error("config.n_list: every N must be >= 4");
        if (!p.contains("replicas")) p["replicas"] = 100;
        if (p["replicas"].get<int>() < 30)
            throw domain_error("config.replicas: statistical runs need >= 30 replicas");
        if (!p.contains("instances")) p["instances"] = 8;
        if (!p.contains("horizon")) p["horizon"] = 0.0;
        if (!p.contains("burn_in")) p["burn_in"] = 0.0;
        if (!p.contains("dt")) p["dt"] = default_theta_dt(theta);
    } else if (command == "sweep") {
        number_array(p["alpha_grid"], "alpha_grid");
        number_array(p["theta_grid"], "theta_grid");
    }
    return config;
}

namespace {

std::string resolve_out_dir(const RunConfig& config) {
    if (!config.out_dir.empty()) return config.out_dir;
    const char* root = std::getenv("SLAB_OUT_ROOT");
    const std::string base = root && *root ? root : ".";
    return base + "/" + config.command + "-out";
}

json events_to_json(const std::vector<HittingEvent>& events) {
    json arr = json::array();
    for (const auto& e : events)
        arr.push_back({{"label", e.label}, {"time", e.time}, {"censored", e.censored}});
    return arr;
}

int run_generate(const RunConfig& config, const std::string& out, json& manifest) {
    const double theta = config.params["theta"].get<double>();
    const int n = config.params["n"].get<int>();
    const auto instance = sample_spiked_instance(n, theta, config.seed);
    const auto spectrum = eigendecompose(instance);
    save_spectrum(out + "/spectrum.bin", spectrum, theta, config.seed);
    manifest["spectrum"] = {{"path", "spectrum.bin"},
                            {"lambda1", spectrum.lambda1()},
                            {"lambda2", spectrum.lambda2()},
                            {"lambdaN", spectrum.lambdaN()},
                            {"spike_overlap", spectrum.spike_overlap}};
    return kExitOk;
}

int run_thresholds(const RunConfig& config, const std::string& out, json& manifest) {
    const double alpha = config.params["alpha"].get<double>();
    const double theta = config.params["theta"].get<double>();
    const int n = config.params["n"].get<int>();
    const PhasePoint phase(theta, alpha, n);
    EigenTriple eig;
    if (config.params.contains("eigenvalues")) {
        const auto& e = config.params["eigenvalues"];
        eig = {e[0].get<double>(), e[1].get<double>(), e[2].get<double>()};
    } else {
        eig = EigenTriple::limiting(theta);
    }
    const ThresholdSet thr = compute_thresholds(phase, eig);
    write_csv(out + "/thresholds.csv",
              {"alpha", "theta", "n", "m_e", "m_be", "m_pi", "m1", "m2", "m3", "c_e", "kappa_be",
               "t_hit", "valid"},
              {{alpha, theta, std::int64_t{n}, thr.m_e, thr.m_be, thr.m_pi, thr.m1, thr.m2,
                thr.m3, thr.c_e, thr.kappa_be, thr.t_hit, thr.valid}});
    manifest["thresholds"] = {{"valid", thr.valid}, {"m_e", thr.m_e}, {"m_be", thr.m_be}};
    return kExitOk;
}

int run_free_energy(const RunConfig& config, const std::string& out, json& manifest) {
    const double alpha = config.params["alpha"].get<double>();
    const double theta = config.params["theta"].get<double>();
    const int n = config.params["n"].get<int>();
    const int q_points = config.params["q_points"].get<int>();
    const int mc_n = config.params["mc_n"].get<int>();
    const auto mc_samples = config.params["mc_samples"].get<std::int64_t>();
    const int contour_seeds = config.params["contour_seeds"].get<int>();
    const PhasePoint phase(theta, alpha, std::max(4, n));

    std::vector<CsvRow> rows;
    if (alpha > 1) {
        for (int i = 0; i < q_points; ++i) {
            const double q = -0.99 + 1.98 * i / (q_points - 1.0);
            rows.push_back({q, f_band(q, phase)});
        }
    }
    write_csv(out + "/band.csv", {"q", "f_band"}, rows);

    json sidecar;
    sidecar["closed_form"] = f_spiked(phase);
    sidecar["delta"] = alpha > 1 ? json(delta_rate(phase)) : json();
    json seeds = json::array();
    double contour_mean = 0;
    for (int s = 0; s < contour_seeds; ++s) {
        const auto seed = derive_seed(config.seed, {11, static_cast<std::uint64_t>(s)});
        seeds.push_back(seed);
        const auto spec_lam = sample_spectrum_values_only(n, theta, seed);
        contour_mean += saddle_and_contour(spec_lam.lambdas, phase.beta()).log_z;
    }
    contour_mean /= contour_seeds;
    sidecar["contour_value"] = contour_mean;
    const auto mc_seed = derive_seed(config.seed, {12});
    const auto mc_lam = sample_spectrum_values_only(std::max(4, mc_n), theta, mc_seed);
    const auto mc = mc_log_partition(mc_lam.lambdas, phase.beta(), mc_samples, mc_seed);
    sidecar["mc_value"] = mc.value;
    sidecar["mc_stderr"] = mc.stderr_;
    sidecar["mc_n"] = mc_n;
    sidecar["seeds"] = {{"contour", seeds}, {"mc", mc_seed}};
    write_json(out + "/free_energy.json", sidecar);
    manifest["free_energy"] = sidecar;
    return kExitOk;
}

int run_simulate(const RunConfig& config, const std::string& out, json& manifest) {
    const double alpha = config.params["alpha"].get<double>();
    const double theta = config.params["theta"].get<double>();
    const int n = config.params["n"].get<int>();
    const PhasePoint phase(theta, alpha, n);
    const auto spec_lam =
        sample_spectrum_values_only(n, theta, derive_seed(config.seed, {21}));

    IntegratorConfig icfg;
    icfg.dt = config.params["dt"].get<double>();
    icfg.t_max = config.params["t_max"].get<double>();
    icfg.record_stride = config.params["record_stride"].get<int>();
    icfg.seed = derive_seed(config.seed, {22});

    const std::string init_label = config.params["init"].get<std::string>();
    Initialization init;
    if (init_label == "plus_cap")
        init = Initialization::plus_cap(config.params["cap_overlap"].get<double>());
    else if (init_label == "plus_u1" || init_label == "minus_u1") {
        VectorXd x = VectorXd::Zero(n);
        x[0] = (init_label == "plus_u1" ? 1.0 : -1.0) * std::sqrt(static_cast<double>(n));
        init = Initialization::point(std::move(x));
    } else if (init_label == "equator")
        init = Initialization::equator();
    else
        init = Initialization::uniform();

    ThresholdSet thr;
    bool have_thr = false;
    try {
        thr = compute_thresholds(phase, EigenTriple::from_spectrum(spec_lam));
        have_thr = true;
    } catch (const domain_error&) {
    }

    const auto rec =
        simulate(spec_lam.lambdas, phase.beta(), icfg, init, have_thr ? &thr : nullptr);
    std::vector<CsvRow> rows;
    for (std::size_t i = 0; i < rec.times.size(); ++i)
        rows.push_back({rec.times[i], rec.m1[i], rec.h[i]});
    write_csv(out + "/trajectory.csv", {"t", "m1", "h"}, rows);
    write_json(out + "/events.json", events_to_json(rec.hitting_events));
    manifest["events"] = events_to_json(rec.hitting_events);
    manifest["final_m1"] = rec.m1.back();
    return kExitOk;
}

int run_mixing(const RunConfig& config, const std::string& out, json& manifest) {
    ExperimentSpec spec;
    spec.kind = ExperimentSpec::Kind::projected_tv;
    spec.alpha = config.params["alpha"].get<double>();
    spec.theta = config.params["theta"].get<double>();
    spec.n_list = {config.params["n"].get<int>()};
    spec.replicas = config.params["replicas"].get<int>();
    spec.horizon = config.params["horizon"].get<double>();
    spec.dt = config.params["dt"].get<double>();
    spec.seed = config.seed;
    spec.workers = config.workers;
    std::vector<std::string> inits;
    for (const auto& v : config.params["inits"]) inits.push_back(v.get<std::string>());

    const auto result = projected_tv_mixing(spec, inits);
    json summary;
    json replica_seeds = json::object();
    for (std::size_t ii = 0; ii < result.estimates.size(); ++ii) {
        const auto& est = result.estimates[ii];
        std::vector<CsvRow> rows;
        for (std::size_t i = 0; i < est.times.size(); ++i)
            rows.push_back({est.times[i], est.dhat[i], est.dhat_half[i]});
        write_csv(out + "/mixing_" + est.init_label + ".csv", {"t", "dhat", "dhat_half"}, rows);
        summary[est.init_label] = {{"t_mix_est", est.t_mix_est},
                                   {"censored", est.censored},
                                   {"undersampled", est.undersampled},
                                   {"tv_is_lower_bound", true}};
        json seeds = json::array();
        for (int r = 0; r < spec.replicas; ++r) seeds.push_back(replica_seed(spec, ii, r));
        replica_seeds[est.init_label] = seeds;
    }
    write_json(out + "/mixing.json", summary);
    manifest["mixing"] = summary;
    manifest["replica_seeds"] = replica_seeds;

    if (config.params.contains("assert_t_mix_max")) {
        const double t_max = config.params["assert_t_mix_max"].get<double>();
        for (const auto& est : result.estimates)
            if (est.censored || est.t_mix_est > t_max) return kExitAssertion;
    }
    return kExitOk;
}

int run_transit(const RunConfig& config, const std::string& out, json& manifest) {
    ExperimentSpec spec;
    spec.kind = ExperimentSpec::Kind::transit_rate;
    spec.alpha = config.params["alpha"].get<double>();
    spec.theta = config.params["theta"].get<double>();
    for (const auto& v : config.params["n_list"]) spec.n_list.push_back(v.get<int>());
    spec.replicas = config.params["replicas"].get<int>();
    spec.horizon = config.params["horizon"].get<double>();
    spec.burn_in = config.params["burn_in"].get<double>();
    spec.instances = config.params["instances"].get<int>();
    spec.dt = config.params["dt"].get<double>();
    spec.seed = config.seed;
    spec.workers = config.workers;

    const auto result = transit_rate(spec);
    std::vector<CsvRow> rows;
    for (const auto& cell : result.cells)
        rows.push_back({std::int64_t{cell.n}, cell.mean_tau, cell.mean_tau_se,
                        std::int64_t{cell.transits}, std::int64_t{cell.censored}});
    write_csv(out + "/transit.csv", {"n", "mean_tau", "mean_tau_se", "transits", "censored"},
              rows);
    json summary = {{"slope", result.slope},
                    {"slope_ci", {result.slope_ci_lo, result.slope_ci_hi}},
                    {"delta", result.delta},
                    {"excluded_n", result.excluded_n}};
    write_json(out + "/transit.json", summary);
    manifest["transit"] = summary;
    json replica_seeds = json::object();
    for (std::size_t ci = 0; ci < spec.n_list.size(); ++ci) {
        json seeds = json::array();
        for (int r = 0; r < spec.replicas; ++r) seeds.push_back(replica_seed(spec, ci, r));
        replica_seeds[std::to_string(spec.n_list[ci])] = seeds;
    }
    manifest["replica_seeds"] = replica_seeds;

    if (config.params.contains("assert_slope_min") &&
        result.slope < config.params["assert_slope_min"].get<double>())
        return kExitAssertion;
    if (config.params.contains("assert_slope_max") &&
        result.slope > config.params["assert_slope_max"].get<double>())
        return kExitAssertion;
    return kExitOk;
}

int run_sweep(const RunConfig& config, const std::string& out, json& manifest) {
    ExperimentSpec spec;
    spec.kind = ExperimentSpec::Kind::phase_diagram;
    for (const auto& v : config.params["alpha_grid"]) spec.alpha_grid.push_back(v.get<double>());
    for (const auto& v : config.params["theta_grid"]) spec.theta_grid.push_back(v.get<double>());
    spec.seed = config.seed;

    const auto cells = phase_diagram(spec);
    std::vector<CsvRow> rows;
    for (const auto& cell : cells)
        rows.push_back({cell.alpha, cell.theta, cell.m_e, cell.m_be, cell.m_pi, cell.valid,
                        cell.theta_0l, cell.delta, cell.label});
    write_csv(out + "/sweep.csv",
              {"alpha", "theta", "m_e", "m_be", "m_pi", "valid", "theta_0L", "delta", "label"},
              rows);
    manifest["cells"] = cells.size();
    return kExitOk;
}

}  // namespace

int dispatch(const RunConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    const std::string out = resolve_out_dir(config);
    try {
        ensure_directory(out);
        json manifest = manifest_base(config.params, config.seed);

        int code = kExitOk;
        if (config.command == "generate")
            code = run_generate(config, out, manifest);
        else if (config.command == "thresholds")
            code = run_thresholds(config, out, manifest);
        else if (config.command == "free-energy")
            code = run_free_energy(config, out, manifest);
        else if (config.command == "simulate")
            code = run_simulate(config, out, manifest);
        else if (config.command == "mixing")
            code = run_mixing(config, out, manifest);
        else if (config.command == "transit")
            code = run_transit(config, out, manifest);
        else if (config.command == "sweep")
            code = run_sweep(config, out, manifest);
        else
            throw domain_error("dispatch: unknown command " + config.command);

        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();
        manifest["runtime"] = {{"wall_ms", elapsed}};
        if (code == kExitAssertion) manifest["assertion_failed"] = true;
        write_json(out + "/manifest.json", manifest);
        return code;
    } catch (const domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        try {
            json manifest = manifest_base(config.params, config.seed);
            manifest["error"] = {{"kind", "domain"}, {"message", e.what()}};
            write_json(out + "/manifest.json", manifest);
        } catch (...) {
        }
        return kExitDomain;
    } catch (const numerical_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        try {
            json manifest = manifest_base(config.params, config.seed);
            manifest["error"] = {{"kind", "numerical"}, {"message", e.what()}};
            write_json(out + "/manifest.json", manifest);
        } catch (...) {
        }
        return kExitNumerical;
    }
}

int cli_main(int argc, char** argv) {
    CLI::App app{"slab: a numerical laboratory for Langevin dynamics on spiked matrices"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int workers = 0;
    bool validate_only = false;

    std::vector<CLI::App*> subs;
    for (const auto& [name, keys] : command_schema()) {
        (void)keys;
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--workers", workers, "worker pool size");
        sub->add_flag("--validate-only", validate_only, "parse and validate, run nothing");
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitDomain;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "error: cannot open config file " << config_path << "\n";
        return kExitNumerical;
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    RunConfig config;
    try {
        config = parse_config(text, command);
    } catch (const domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    }
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (workers > 0) {
        config.workers = workers;
        config.params["workers"] = workers;
    }
    if (validate_only) {
        std::cout << config.params.dump(2) << "\n";
        return kExitOk;
    }
    return dispatch(config);
}

}  // namespace slab
