#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qsd/core.hpp"
#include "qsd/ensembles.hpp"
#include "qsd/experiment.hpp"
#include "qsd/network.hpp"
#include "qsd/optimizer.hpp"

namespace qsd {

/// Malformed or inconsistent user-supplied configuration or data.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace io {

using json = nlohmann::ordered_json;

/// All floats in CSV output carry 9 significant digits.
inline std::string format_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline void check_known_keys(const json& obj, const std::vector<std::string>& allowed,
                             const std::string& context) {
    if (!obj.is_object())
        throw ConfigError(context + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const auto& k : allowed)
            if (it.key() == k) { ok = true; break; }
        if (!ok)
            throw ConfigError(context + ": unknown key \"" + it.key() + "\"");
    }
}

inline json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline Complex complex_from_json(const json& j, const std::string& context) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ConfigError(context + ": expected [re, im]");
    return Complex(j[0].get<double>(), j[1].get<double>());
}

inline json state_to_json(const PureState& s) {
    return json{{"a0", complex_to_json(s.a0())}, {"a1", complex_to_json(s.a1())}};
}

inline PureState state_from_json(const json& j, const std::string& context = "state") {
    check_known_keys(j, {"a0", "a1"}, context);
    if (!j.contains("a0") || !j.contains("a1"))
        throw ConfigError(context + ": keys a0 and a1 required");
    Complex a0 = complex_from_json(j["a0"], context + ".a0");
    Complex a1 = complex_from_json(j["a1"], context + ".a1");
    try {
        return PureState(a0, a1);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(context + ": " + e.what());
    }
}

inline json unitary_to_json(const Unitary2& u) {
    json m = json::array();
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) m.push_back(complex_to_json(u(r, c)));
    return json{{"m", m}};
}

inline Unitary2 unitary_from_json(const json& j, const std::string& context = "unitary") {
    check_known_keys(j, {"m"}, context);
    if (!j.contains("m") || !j["m"].is_array() || j["m"].size() != 4)
        throw ConfigError(context + ": key m must hold four row-major entries");
    RawMatrix2 m;
    for (int i = 0; i < 4; ++i)
        m[i] = complex_from_json(j["m"][i], context + ".m");
    try {
        return Unitary2(m);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(context + ": " + e.what());
    }
}

inline json schedule_to_json(const ExtractionSchedule& s) {
    json j{{"default_prob", s.default_prob}};
    j["first_step_override"] = s.first_step_override ? json(*s.first_step_override) : json(nullptr);
    j["first_step_discarded"] = s.first_step_discarded;
    return j;
}

inline ExtractionSchedule schedule_from_json(const json& j,
                                             const std::string& context = "schedule") {
    check_known_keys(j, {"default_prob", "first_step_override", "first_step_discarded"}, context);
    ExtractionSchedule s;
    if (j.contains("default_prob")) s.default_prob = j["default_prob"].get<double>();
    if (j.contains("first_step_override") && !j["first_step_override"].is_null())
        s.first_step_override = j["first_step_override"].get<double>();
    if (j.contains("first_step_discarded"))
        s.first_step_discarded = j["first_step_discarded"].get<bool>();
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(context + ": " + e.what());
    }
    return s;
}

inline json ensemble_to_json(const Ensemble& e) {
    json labels = json::array(), priors = json::array(), states = json::array();
    for (std::size_t i = 0; i < e.size(); ++i) {
        labels.push_back(e.label(i));
        priors.push_back(e.prior(i));
        states.push_back(state_to_json(e.state(i)));
    }
    return json{{"labels", labels}, {"priors", priors}, {"states", states}};
}

inline Ensemble ensemble_from_json(const json& j, const std::string& context = "ensemble") {
    check_known_keys(j, {"labels", "priors", "states"}, context);
    if (!j.contains("labels") || !j.contains("priors") || !j.contains("states"))
        throw ConfigError(context + ": keys labels, priors and states required");
    std::vector<std::string> labels;
    std::vector<double> priors;
    std::vector<PureState> states;
    for (const auto& l : j["labels"]) labels.push_back(l.get<std::string>());
    for (const auto& p : j["priors"]) priors.push_back(p.get<double>());
    for (std::size_t i = 0; i < j["states"].size(); ++i)
        states.push_back(state_from_json(j["states"][i], context + ".states"));
    try {
        return Ensemble(std::move(labels), std::move(states), std::move(priors));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(context + ": " + e.what());
    }
}

inline json distribution_to_json(const TimeBinnedDistribution& d) {
    json bins = json::array();
    for (const auto& b : d.bins) bins.push_back(json::array({b.p5, b.p6}));
    return json{{"first_bin_index", d.first_bin_index},
                {"bins", bins},
                {"residual", d.residual},
                {"discarded", d.discarded}};
}

inline TimeBinnedDistribution distribution_from_json(const json& j,
                                                     const std::string& context = "distribution") {
    check_known_keys(j, {"first_bin_index", "bins", "residual", "discarded"}, context);
    TimeBinnedDistribution d;
    if (j.contains("first_bin_index")) d.first_bin_index = j["first_bin_index"].get<int>();
    if (j.contains("residual")) d.residual = j["residual"].get<double>();
    if (j.contains("discarded")) d.discarded = j["discarded"].get<double>();
    if (j.contains("bins"))
        for (const auto& b : j["bins"])
            d.bins.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
    return d;
}

inline void write_distribution_csv(std::ostream& out, const TimeBinnedDistribution& d) {
    out << "# first_bin_index " << d.first_bin_index << "\n";
    out << "# residual " << format_g9(d.residual) << "\n";
    out << "# discarded " << format_g9(d.discarded) << "\n";
    out << "bin,p5,p6\n";
    for (std::size_t i = 0; i < d.bins.size(); ++i)
        out << (d.first_bin_index + static_cast<int>(i)) << ',' << format_g9(d.bins[i].p5)
            << ',' << format_g9(d.bins[i].p6) << "\n";
}

inline TimeBinnedDistribution read_distribution_csv(std::istream& in) {
    TimeBinnedDistribution d;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string key;
            ls >> key;
            if (key == "first_bin_index") ls >> d.first_bin_index;
            else if (key == "residual") ls >> d.residual;
            else if (key == "discarded") ls >> d.discarded;
            else throw ConfigError("distribution csv: unknown header \"" + key + "\"");
            continue;
        }
        if (!header_seen) {
            if (line != "bin,p5,p6")
                throw ConfigError("distribution csv: expected header bin,p5,p6");
            header_seen = true;
            continue;
        }
        std::istringstream ls(line);
        std::string bin_s, p5_s, p6_s;
        if (!std::getline(ls, bin_s, ',') || !std::getline(ls, p5_s, ',') ||
            !std::getline(ls, p6_s))
            throw ConfigError("distribution csv: malformed row \"" + line + "\"");
        d.bins.push_back({std::stod(p5_s), std::stod(p6_s)});
    }
    if (!header_seen)
        throw ConfigError("distribution csv: missing header");
    return d;
}

inline void write_record_csv(std::ostream& out, const EventRecord& rec) {
    out << "# duration " << format_g9(rec.duration) << "\n";
    out << "# raw " << (rec.raw ? 1 : 0) << "\n";
    out << "# seed " << rec.seed << "\n";
    out << "# clamped " << rec.clamped_cells << "\n";
    if (!rec.state_label.empty()) out << "# state " << rec.state_label << "\n";
    out << "sink,bin,count\n";
    for (std::size_t o = 0; o < rec.cells.size(); ++o)
        out << rec.cells[o].sink << ',' << rec.cells[o].bin << ','
            << format_g9(rec.counts[o]) << "\n";
}

inline EventRecord read_record_csv(std::istream& in) {
    EventRecord rec;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string key;
            ls >> key;
            if (key == "duration") ls >> rec.duration;
            else if (key == "raw") { int v; ls >> v; rec.raw = v != 0; }
            else if (key == "seed") ls >> rec.seed;
            else if (key == "clamped") ls >> rec.clamped_cells;
            else if (key == "state") ls >> rec.state_label;
            else throw ConfigError("record csv: unknown header \"" + key + "\"");
            continue;
        }
        if (!header_seen) {
            if (line != "sink,bin,count")
                throw ConfigError("record csv: expected header sink,bin,count");
            header_seen = true;
            continue;
        }
        std::istringstream ls(line);
        std::string sink_s, bin_s, count_s;
        if (!std::getline(ls, sink_s, ',') || !std::getline(ls, bin_s, ',') ||
            !std::getline(ls, count_s))
            throw ConfigError("record csv: malformed row \"" + line + "\"");
        rec.cells.push_back({std::stoi(sink_s), std::stoi(bin_s)});
        rec.counts.push_back(std::stod(count_s));
    }
    if (!header_seen)
        throw ConfigError("record csv: missing header");
    return rec;
}

inline void write_outcome_table_csv(std::ostream& out, const OutcomeTable& table,
                                    const std::vector<std::string>& labels) {
    out << "state";
    for (const auto& o : table.outcomes()) out << ",sink" << o.sink << "_bin" << o.bin;
    out << "\n";
    for (std::size_t i = 0; i < table.rows().size(); ++i) {
        out << (i < labels.size() ? labels[i] : "state" + std::to_string(i + 1));
        for (double p : table.rows()[i]) out << ',' << format_g9(p);
        out << "\n";
    }
}

inline void write_scaling_csv(std::ostream& out, const std::vector<int>& copies,
                              const std::vector<ErrorEstimate>& errors) {
    out << "m,error,std_error,exact\n";
    for (std::size_t i = 0; i < copies.size(); ++i)
        out << copies[i] << ',' << format_g9(errors[i].value) << ','
            << format_g9(errors[i].std_error) << ',' << (errors[i].exact ? 1 : 0) << "\n";
}

inline void write_error_curve_csv(std::ostream& out, const std::vector<ErrorCurvePoint>& curve) {
    out << "k,mean_copies,p_err,std_error\n";
    for (const auto& p : curve)
        out << p.k << ',' << format_g9(p.mean_copies) << ',' << format_g9(p.p_err) << ','
            << format_g9(p.std_error) << "\n";
}

inline void write_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace) {
    out << "restart,iteration,objective\n";
    for (const auto& t : trace)
        out << t.restart << ',' << t.iteration << ',' << format_g9(t.objective) << "\n";
}

inline void write_cumulative_csv(std::ostream& out, int first_bin_index,
                                 const std::vector<double>& values) {
    out << "bin,cumulative_correct\n";
    for (std::size_t i = 0; i < values.size(); ++i)
        out << (first_bin_index + static_cast<int>(i)) << ',' << format_g9(values[i]) << "\n";
}

inline json receiver_to_json(const OptimizeResult& r) {
    return json{{"u_forward", unitary_to_json(r.u_forward)},
                {"u_backward", unitary_to_json(r.u_backward)},
                {"objective", r.objective_value},
                {"variant", r.variant == ObjectiveSpec::Variant::map_error
                                ? "map_error"
                                : "bin_assignment_margin"},
                {"seed", r.seed},
                {"restarts", r.restarts.size()}};
}

inline std::pair<Unitary2, Unitary2> receiver_from_json(const json& j,
                                                        const std::string& context = "receiver") {
    check_known_keys(j, {"u_forward", "u_backward", "objective", "variant", "seed", "restarts"},
                     context);
    if (!j.contains("u_forward") || !j.contains("u_backward"))
        throw ConfigError(context + ": keys u_forward and u_backward required");
    return {unitary_from_json(j["u_forward"], context + ".u_forward"),
            unitary_from_json(j["u_backward"], context + ".u_backward")};
}

}  // namespace io
}  // namespace qsd
