// qsd: simulate, optimize and stress the looped sink-network receivers from
// the command line. Every run drops a metadata.json with the fully resolved
// configuration so results can be regenerated bit for bit.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qsd/qsd.hpp"

namespace fs = std::filesystem;
using qsd::ConfigError;
using qsd::io::json;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    int threads = 1;
    std::string ensemble_name;  // optional preset override
};

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

json noise_to_json(const qsd::NoiseModel& noise) {
    json gen;
    if (noise.generation.kind == qsd::GenerationStatistics::Kind::poisson)
        gen = "poisson";
    else
        gen = json{{"kind", "thermal"}, {"g2", noise.generation.g2}};
    return json{{"pair_rate", noise.pair_rate},
                {"accidental_rate_per_bin", noise.accidental_rate_per_bin},
                {"generation", gen}};
}

qsd::NoiseModel noise_from_json(const json& j) {
    qsd::io::check_known_keys(j, {"pair_rate", "accidental_rate_per_bin", "generation"},
                              "noise");
    qsd::NoiseModel noise;
    if (j.contains("pair_rate")) noise.pair_rate = j["pair_rate"].get<double>();
    if (j.contains("accidental_rate_per_bin"))
        noise.accidental_rate_per_bin = j["accidental_rate_per_bin"].get<double>();
    if (j.contains("generation")) {
        const json& g = j["generation"];
        if (g.is_string() && g == "poisson") {
            noise.generation.kind = qsd::GenerationStatistics::Kind::poisson;
        } else if (g.is_object()) {
            qsd::io::check_known_keys(g, {"kind", "g2"}, "noise.generation");
            std::string kind = g.value("kind", "thermal");
            if (kind == "poisson")
                noise.generation.kind = qsd::GenerationStatistics::Kind::poisson;
            else if (kind == "thermal")
                noise.generation.kind = qsd::GenerationStatistics::Kind::thermal;
            else
                throw ConfigError("noise.generation: unknown kind \"" + kind + "\"");
            if (g.contains("g2")) noise.generation.g2 = g["g2"].get<double>();
        } else {
            throw ConfigError("noise.generation: expected \"poisson\" or a thermal object");
        }
    }
    try {
        noise.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("noise: ") + e.what());
    }
    return noise;
}

/// Everything a command needs, resolved from preset + config + flags.
struct Resolved {
    std::string preset;
    qsd::Ensemble ensemble;
    qsd::Unitary2 u_forward;
    qsd::Unitary2 u_backward;
    qsd::ExtractionSchedule schedule;
    int max_loops = 12;
    qsd::NoiseModel noise;
    json config;  // original document, for command blocks

    qsd::NetworkConfig network() const {
        return {u_forward, u_backward, schedule, max_loops};
    }

    json echo() const {
        return json{{"ensemble", preset.empty() ? json("custom") : json(preset)},
                    {"states", qsd::io::ensemble_to_json(ensemble)},
                    {"receiver",
                     json{{"u_forward", qsd::io::unitary_to_json(u_forward)},
                          {"u_backward", qsd::io::unitary_to_json(u_backward)}}},
                    {"schedule", qsd::io::schedule_to_json(schedule)},
                    {"max_loops", max_loops},
                    {"noise", noise_to_json(noise)}};
    }
};

std::pair<qsd::Unitary2, qsd::Unitary2> preset_receiver(const std::string& name,
                                                        const qsd::Ensemble& ensemble) {
    if (name == "binary")
        return qsd::binary_optimal(ensemble.state(0), ensemble.state(1), ensemble.prior(0),
                                   ensemble.prior(1));
    if (name == "gu") return qsd::gu_receiver();
    return qsd::tetrad_receiver();
}

Resolved resolve(const GlobalOptions& options) {
    json config = load_config(options.config_path);
    qsd::io::check_known_keys(config,
                              {"ensemble", "receiver", "schedule", "max_loops", "noise",
                               "optimizer", "scaling", "montecarlo"},
                              "config");

    std::string preset;
    std::optional<qsd::Ensemble> ensemble;
    if (!options.ensemble_name.empty()) {
        preset = options.ensemble_name;
    } else if (config.contains("ensemble")) {
        if (config["ensemble"].is_string())
            preset = config["ensemble"].get<std::string>();
        else
            ensemble = qsd::io::ensemble_from_json(config["ensemble"], "config.ensemble");
    } else {
        preset = "binary";
    }
    if (!ensemble) {
        try {
            ensemble = qsd::ensemble_by_name(preset);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config.ensemble: ") + e.what());
        }
    }

    std::pair<qsd::Unitary2, qsd::Unitary2> receiver =
        preset.empty()
            ? std::pair<qsd::Unitary2, qsd::Unitary2>{qsd::Unitary2::identity(),
                                                      qsd::Unitary2::identity()}
            : preset_receiver(preset, *ensemble);
    if (config.contains("receiver")) {
        receiver = qsd::io::receiver_from_json(config["receiver"], "config.receiver");
    } else if (preset.empty()) {
        throw ConfigError("config: key \"receiver\" is required with a custom ensemble");
    }

    Resolved r{preset,
               std::move(*ensemble),
               receiver.first,
               receiver.second,
               config.contains("schedule")
                   ? qsd::io::schedule_from_json(config["schedule"], "config.schedule")
                   : qsd::experimental_schedule(),
               12,
               {},
               config};
    if (config.contains("max_loops")) r.max_loops = config["max_loops"].get<int>();
    if (r.max_loops < 1) throw ConfigError("config.max_loops: must be >= 1");
    r.noise.pair_rate = 2.0;
    r.noise.accidental_rate_per_bin = 0.0;
    if (config.contains("noise")) r.noise = noise_from_json(config["noise"]);
    return r;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out << text;
}

void write_metadata(const GlobalOptions& options, const std::string& command,
                    const Resolved& resolved, json command_block, json results) {
    json meta{{"version", qsd::version},
              {"command", command},
              {"seed", options.seed},
              {"threads", options.threads},
              {"config", resolved.echo()}};
    if (!command_block.is_null()) meta["config"][command] = std::move(command_block);
    if (!results.is_null()) meta["results"] = std::move(results);
    write_text(fs::path(options.out_dir) / "metadata.json", meta.dump(2) + "\n");
}

void cmd_states(const GlobalOptions& options, const Resolved& resolved) {
    write_text(fs::path(options.out_dir) / "states.json",
               qsd::io::ensemble_to_json(resolved.ensemble).dump(2) + "\n");
    write_metadata(options, "states", resolved, {}, {});
}

void cmd_simulate(const GlobalOptions& options, const Resolved& resolved) {
    fs::path dir(options.out_dir);
    qsd::NetworkConfig network = resolved.network();
    for (std::size_t i = 0; i < resolved.ensemble.size(); ++i) {
        const std::string& label = resolved.ensemble.label(i);
        qsd::TimeBinnedDistribution raw = qsd::evolve(network, resolved.ensemble.state(i));
        std::ostringstream raw_csv, cond_csv, free_csv;
        qsd::io::write_distribution_csv(raw_csv, raw);
        qsd::io::write_distribution_csv(cond_csv, qsd::conditional_distribution(raw));
        qsd::io::write_distribution_csv(free_csv,
                                        qsd::decay_free_distribution(raw, resolved.schedule));
        write_text(dir / ("distribution_" + label + ".csv"), raw_csv.str());
        write_text(dir / ("conditional_" + label + ".csv"), cond_csv.str());
        write_text(dir / ("decay_free_" + label + ".csv"), free_csv.str());
    }

    qsd::OutcomeTable table = qsd::make_outcome_table(network, resolved.ensemble);
    std::vector<double> cumulative =
        qsd::map_cumulative_correct(table, resolved.ensemble.priors());
    int first_bin = resolved.schedule.first_step_discarded ? 2 : 1;
    std::ostringstream cumulative_csv;
    qsd::io::write_cumulative_csv(cumulative_csv, first_bin, cumulative);
    write_text(dir / "cumulative.csv", cumulative_csv.str());

    write_metadata(options, "simulate", resolved, {},
                   json{{"final_cumulative_correct", cumulative.back()}});
}

void cmd_discriminate(const GlobalOptions& options, const Resolved& resolved) {
    fs::path dir(options.out_dir);
    qsd::OutcomeTable table = qsd::make_outcome_table(resolved.network(), resolved.ensemble);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < resolved.ensemble.size(); ++i)
        labels.push_back(resolved.ensemble.label(i));

    std::ostringstream table_csv;
    qsd::io::write_outcome_table_csv(table_csv, table, labels);
    write_text(dir / "outcome_table.csv", table_csv.str());

    qsd::DecisionRule rule = qsd::build_map_rule(table, resolved.ensemble.priors());
    double error = qsd::single_copy_error(table, resolved.ensemble.priors(), rule);
    json outcomes = json::array(), guesses = json::array();
    for (std::size_t o = 0; o < table.num_outcomes(); ++o) {
        outcomes.push_back(json::array({table.outcomes()[o].sink, table.outcomes()[o].bin}));
        guesses.push_back(labels[rule.guess[o]]);
    }
    write_text(dir / "map_rule.json",
               json{{"single_copy_error", error}, {"outcomes", outcomes}, {"guesses", guesses}}
                       .dump(2) +
                   "\n");
    write_metadata(options, "discriminate", resolved, {},
                   json{{"single_copy_error", error}});
}

void cmd_optimize(const GlobalOptions& options, const Resolved& resolved) {
    json block = resolved.config.value("optimizer", json::object());
    qsd::io::check_known_keys(block,
                              {"variant", "restarts", "max_iters", "ftol", "xtol",
                               "initial_scale", "bins_window", "margin_sink"},
                              "config.optimizer");

    qsd::ObjectiveSpec objective;
    objective.schedule = resolved.schedule;
    objective.max_loops = resolved.max_loops;
    std::string variant = block.value("variant", "map_error");
    if (variant == "map_error") {
        objective.variant = qsd::ObjectiveSpec::Variant::map_error;
    } else if (variant == "bin_assignment_margin") {
        objective.variant = qsd::ObjectiveSpec::Variant::bin_assignment_margin;
    } else {
        throw ConfigError("config.optimizer.variant: unknown variant \"" + variant + "\"");
    }
    if (block.contains("bins_window")) objective.bins_window = block["bins_window"].get<int>();
    if (block.contains("margin_sink")) objective.margin_sink = block["margin_sink"].get<int>();

    qsd::SearchSettings settings;
    settings.seed = options.seed;
    settings.threads = options.threads;
    if (block.contains("restarts")) settings.restarts = block["restarts"].get<int>();
    if (block.contains("max_iters")) settings.max_iters = block["max_iters"].get<int>();
    if (block.contains("ftol")) settings.ftol = block["ftol"].get<double>();
    if (block.contains("xtol")) settings.xtol = block["xtol"].get<double>();
    if (block.contains("initial_scale"))
        settings.initial_scale = block["initial_scale"].get<double>();

    qsd::OptimizeResult result;
    try {
        result = qsd::optimize(resolved.ensemble, objective, settings);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config.optimizer: ") + e.what());
    }

    fs::path dir(options.out_dir);
    write_text(dir / "receiver.json", qsd::io::receiver_to_json(result).dump(2) + "\n");
    std::ostringstream trace_csv;
    qsd::io::write_trace_csv(trace_csv, result.trace);
    write_text(dir / "trace.csv", trace_csv.str());

    json echo{{"variant", variant},
              {"restarts", settings.restarts},
              {"max_iters", settings.max_iters},
              {"ftol", settings.ftol},
              {"xtol", settings.xtol},
              {"initial_scale", settings.initial_scale},
              {"bins_window", objective.bins_window},
              {"margin_sink", objective.margin_sink}};
    write_metadata(options, "optimizer", resolved, echo,
                   json{{"objective", result.objective_value},
                        {"converged", result.converged},
                        {"best_restart", result.best_restart}});
}

void cmd_scaling(const GlobalOptions& options, const Resolved& resolved) {
    json block = resolved.config.value("scaling", json::object());
    qsd::io::check_known_keys(block, {"copies", "exact_max", "trials", "epsilon_floor"},
                              "config.scaling");
    std::vector<int> copies;
    if (block.contains("copies"))
        for (const auto& m : block["copies"]) copies.push_back(m.get<int>());
    if (copies.empty())
        for (int m = 1; m <= 8; ++m) copies.push_back(m);
    int exact_max = block.value("exact_max", 6);
    long long trials = block.value("trials", 100000ll);
    double epsilon_floor = block.value("epsilon_floor", 0.0);

    qsd::OutcomeTable table = qsd::make_outcome_table(resolved.network(), resolved.ensemble);
    std::vector<qsd::ErrorEstimate> errors;
    for (int m : copies) {
        qsd::MultiCopyMode mode;
        mode.epsilon_floor = epsilon_floor;
        if (m > exact_max) {
            mode.kind = qsd::MultiCopyMode::Kind::montecarlo;
            mode.trials = trials;
            mode.seed = qsd::derive_seed(options.seed, static_cast<std::uint64_t>(m));
        }
        try {
            errors.push_back(qsd::expected_multi_copy_error(table, resolved.ensemble.priors(),
                                                            m, mode));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config.scaling: ") + e.what());
        }
    }

    std::ostringstream csv;
    qsd::io::write_scaling_csv(csv, copies, errors);
    write_text(fs::path(options.out_dir) / "scaling.csv", csv.str());

    // least-squares slope of log error vs m over the strictly positive entries
    double n = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < copies.size(); ++i) {
        if (errors[i].value <= 0.0) continue;
        double x = copies[i], y = std::log(errors[i].value);
        n += 1.0;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    json slope;
    if (n >= 2.0 && n * sxx - sx * sx > 0.0) slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

    json echo{{"copies", copies},
              {"exact_max", exact_max},
              {"trials", trials},
              {"epsilon_floor", epsilon_floor}};
    write_metadata(options, "scaling", resolved, echo, json{{"log_error_slope", slope}});
}

void cmd_montecarlo(const GlobalOptions& options, const Resolved& resolved) {
    json block = resolved.config.value("montecarlo", json::object());
    qsd::io::check_known_keys(block,
                              {"k_values", "runs_per_k", "events_per_run", "window_sigmas",
                               "epsilon_floor", "sample_runs", "duration", "blind"},
                              "config.montecarlo");
    std::vector<int> k_values;
    if (block.contains("k_values"))
        for (const auto& k : block["k_values"]) k_values.push_back(k.get<int>());
    else
        k_values = {1, 2, 4, 8};
    int runs_per_k = block.value("runs_per_k", 32);
    qsd::EndToEndOptions e2e;
    e2e.events_per_run = block.value("events_per_run", 64);
    e2e.window_sigmas = block.value("window_sigmas", 2.0);
    e2e.epsilon_floor = block.value("epsilon_floor", 0.0);
    int sample_runs = block.value("sample_runs", 4);
    double duration = block.value("duration", 4.0);
    bool blind = block.value("blind", false);
    if (sample_runs < 1) throw ConfigError("config.montecarlo.sample_runs: must be >= 1");
    if (!(duration > 0.0)) throw ConfigError("config.montecarlo.duration: must be positive");

    fs::path dir(options.out_dir);
    qsd::NetworkConfig network = resolved.network();
    std::uint64_t record_root = qsd::derive_seed(options.seed, 2);
    std::uint64_t background_root = qsd::derive_seed(options.seed, 3);
    bool has_signal = resolved.noise.pair_rate > 0.0;

    // background pool shared by every cleaned record
    std::vector<qsd::EventRecord> dark;
    for (int r = 0; r < sample_runs; ++r)
        dark.push_back(qsd::simulate_background(network, resolved.noise, duration,
                                                qsd::derive_seed(background_root, r)));
    qsd::BackgroundEstimate background = qsd::estimate_background(dark);
    for (int r = 0; r < sample_runs; ++r) {
        std::ostringstream csv;
        qsd::io::write_record_csv(csv, dark[r]);
        write_text(dir / ("background_" + std::to_string(r) + ".csv"), csv.str());
    }
    if (!has_signal) {
        // background-only campaign: cleaned records should sit at zero
        for (int r = 0; r < sample_runs; ++r) {
            qsd::EventRecord cleaned = qsd::subtract_background(dark[r], background);
            std::ostringstream csv;
            qsd::io::write_record_csv(csv, cleaned);
            write_text(dir / ("cleaned_background_" + std::to_string(r) + ".csv"), csv.str());
        }
        json echo{{"k_values", k_values},       {"runs_per_k", runs_per_k},
                  {"events_per_run", e2e.events_per_run}, {"window_sigmas", e2e.window_sigmas},
                  {"epsilon_floor", e2e.epsilon_floor},   {"sample_runs", sample_runs},
                  {"duration", duration},       {"blind", blind}};
        write_metadata(options, "montecarlo", resolved, echo,
                       json{{"curve", json::array()}});
        return;
    }

    json key{{"states", json::object()}};
    json postselect_summary = json::object();
    int target_k = std::max(1, static_cast<int>(std::llround(resolved.noise.pair_rate * duration)));
    for (std::size_t i = 0; i < resolved.ensemble.size(); ++i) {
        const std::string& label = resolved.ensemble.label(i);
        std::string tag = blind ? "s" + std::to_string(i) : label;
        if (blind) key["states"][tag] = label;

        std::vector<qsd::EventRecord> events;
        for (int r = 0; r < sample_runs; ++r) {
            qsd::EventRecord rec = qsd::simulate_run(
                network, resolved.ensemble.state(i), resolved.noise, duration,
                qsd::derive_seed(record_root, i * static_cast<std::uint64_t>(sample_runs) + r),
                blind ? "" : label);
            events.push_back(rec);
            std::ostringstream raw_csv, cleaned_csv;
            qsd::io::write_record_csv(raw_csv, rec);
            qsd::io::write_record_csv(cleaned_csv, qsd::subtract_background(rec, background));
            write_text(dir / ("raw_" + tag + "_" + std::to_string(r) + ".csv"), raw_csv.str());
            write_text(dir / ("cleaned_" + tag + "_" + std::to_string(r) + ".csv"),
                       cleaned_csv.str());
        }
        try {
            qsd::PostselectResult sel =
                qsd::postselect_k_photon(events, target_k, e2e.window_sigmas);
            qsd::EventRecord averaged = qsd::subtract_background(sel.averaged, background);
            std::ostringstream csv;
            qsd::io::write_record_csv(csv, averaged);
            write_text(dir / ("average_" + tag + ".csv"), csv.str());
            postselect_summary[tag] = json{{"kept", sel.kept}, {"discarded", sel.discarded}};
        } catch (const std::domain_error&) {
            postselect_summary[tag] = json{{"kept", 0}, {"discarded", sample_runs}};
        }
    }

    std::vector<qsd::ErrorCurvePoint> curve;
    if (!k_values.empty()) {
        try {
            curve = qsd::end_to_end_error_curve(network, resolved.ensemble, resolved.noise,
                                                k_values, runs_per_k,
                                                qsd::derive_seed(options.seed, 1), e2e);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config.montecarlo: ") + e.what());
        }
        std::ostringstream curve_csv;
        qsd::io::write_error_curve_csv(curve_csv, curve);
        write_text(dir / "curve.csv", curve_csv.str());
    }
    if (blind) write_text(dir / "key.json", key.dump(2) + "\n");

    json curve_json = json::array();
    for (const auto& point : curve)
        curve_json.push_back(json{{"k", point.k},
                                  {"mean_copies", point.mean_copies},
                                  {"p_err", point.p_err},
                                  {"std_error", point.std_error}});
    json echo{{"k_values", k_values},       {"runs_per_k", runs_per_k},
              {"events_per_run", e2e.events_per_run}, {"window_sigmas", e2e.window_sigmas},
              {"epsilon_floor", e2e.epsilon_floor},   {"sample_runs", sample_runs},
              {"duration", duration},       {"blind", blind}};
    write_metadata(options, "montecarlo", resolved, echo,
                   json{{"target_k", target_k},
                        {"postselect", postselect_summary},
                        {"curve", curve_json}});
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sink-network state discrimination toolkit"};
    app.set_version_flag("--version", qsd::version);
    app.require_subcommand(1);

    GlobalOptions options;
    app.add_option("--config", options.config_path, "JSON configuration file");
    app.add_option("--out", options.out_dir, "output directory (created if missing)");
    app.add_option("--seed", options.seed, "base seed for all stochastic work");
    app.add_option("--threads", options.threads, "worker threads for parallel sections");

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"states", "write the resolved ensemble as JSON"},
        {"simulate", "time-binned, conditional, decay-free and cumulative distributions"},
        {"discriminate", "outcome table, MAP rule and single-copy error"},
        {"optimize", "receiver search with restarts and a convergence trace"},
        {"scaling", "multi-copy error versus copy number"},
        {"montecarlo", "photon-counting campaign with background and post-selection"}};
    for (const auto& [name, desc] : commands) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->fallthrough();  // global flags may follow the subcommand
        sub->add_option("--ensemble", options.ensemble_name,
                        "preset ensemble: binary, gu or tetrad");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (options.threads < 1) throw ConfigError("--threads: must be >= 1");
        if (!options.ensemble_name.empty() && options.ensemble_name != "binary" &&
            options.ensemble_name != "gu" && options.ensemble_name != "tetrad")
            throw ConfigError("--ensemble: unknown preset \"" + options.ensemble_name + "\"");
        fs::create_directories(options.out_dir);
        Resolved resolved = resolve(options);
        std::string command = app.get_subcommands()[0]->get_name();
        if (command == "states") cmd_states(options, resolved);
        else if (command == "simulate") cmd_simulate(options, resolved);
        else if (command == "discriminate") cmd_discriminate(options, resolved);
        else if (command == "optimize") cmd_optimize(options, resolved);
        else if (command == "scaling") cmd_scaling(options, resolved);
        else if (command == "montecarlo") cmd_montecarlo(options, resolved);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const qsd::CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
