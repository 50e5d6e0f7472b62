#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "qsd/discrimination.hpp"
#include "qsd/ensembles.hpp"
#include "qsd/network.hpp"
#include "qsd/parallel.hpp"
#include "qsd/rng.hpp"
#include "qsd/simplex.hpp"

namespace qsd {

/// Angle chart covering all of U(2):
///   e^{i g} [[cos t, e^{i p2} sin t], [-e^{i(p1 - p2)} sin t, e^{i p1} cos t]].
/// The matrix is unitary for every angle choice, so unconstrained searches
/// can move through the chart freely.
struct UnitaryParams {
    double theta = 0.0;
    double phase1 = 0.0;
    double phase2 = 0.0;
    double global = 0.0;

    Unitary2 to_unitary() const {
        double c = std::cos(theta), s = std::sin(theta);
        Complex g = std::polar(1.0, global);
        return Unitary2(g * c,
                        g * std::polar(s, phase2),
                        -g * std::polar(s, phase1 - phase2),
                        g * std::polar(c, phase1));
    }

    static UnitaryParams from_unitary(const Unitary2& u) {
        UnitaryParams p;
        double c = std::abs(u(0, 0)), s = std::abs(u(0, 1));
        p.theta = std::atan2(s, c);
        if (c > 1e-14) {
            p.global = std::arg(u(0, 0));
            p.phase1 = std::arg(u(1, 1)) - p.global;
            if (s > 1e-14) p.phase2 = std::arg(u(0, 1)) - p.global;
        } else {
            p.global = 0.0;
            p.phase2 = std::arg(u(0, 1));
            p.phase1 = std::arg(-u(1, 0)) + p.phase2;
        }
        return p;
    }
};

struct ObjectiveSpec {
    enum class Variant { map_error, bin_assignment_margin };
    Variant variant = Variant::map_error;
    ExtractionSchedule schedule;
    int max_loops = 12;
    int bins_window = 4;   // bin-assignment variant: bins available for assignment
    int margin_sink = 5;   // sink whose decay-free populations are compared

    void validate() const {
        schedule.validate();
        if (max_loops < 1) throw std::invalid_argument("ObjectiveSpec: max_loops must be >= 1");
        if (bins_window < 1) throw std::invalid_argument("ObjectiveSpec: bins_window must be >= 1");
        if (margin_sink != 5 && margin_sink != 6)
            throw std::invalid_argument("ObjectiveSpec: margin_sink must be 5 or 6");
    }
};

struct SearchSettings {
    int restarts = 32;
    int max_iters = 400;
    double ftol = 1e-12;
    double xtol = 1e-10;
    double initial_scale = 0.6;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct TracePoint {
    int restart = 0;
    int iteration = 0;
    double objective = 0.0;  // natural orientation of the chosen variant
};

struct RestartSummary {
    int index = 0;
    double start_objective = 0.0;
    double final_objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct OptimizeResult {
    Unitary2 u_forward = Unitary2::identity();
    Unitary2 u_backward = Unitary2::identity();
    double objective_value = 0.0;
    ObjectiveSpec::Variant variant = ObjectiveSpec::Variant::map_error;
    bool converged = false;
    int best_restart = 0;
    std::uint64_t seed = 0;
    std::vector<RestartSummary> restarts;
    std::vector<TracePoint> trace;
};

/// Helstrom-saturating receiver for two states: forward rows are the
/// eigenvectors of p1|psi1><psi1| - p2|psi2><psi2| (positive part onto sink
/// 5), backward the inverse. Throws for indistinguishable inputs.
inline std::pair<Unitary2, Unitary2> binary_optimal(const PureState& psi1, const PureState& psi2,
                                                    double p1, double p2) {
    if (!(p1 >= 0.0) || !(p2 >= 0.0) || std::abs(p1 + p2 - 1.0) > 1e-12)
        throw std::invalid_argument("binary_optimal: priors must be nonnegative and sum to 1");
    if (std::abs(inner_product(psi1, psi2)) > 1.0 - 1e-12)
        throw std::domain_error("binary_optimal: states coincide up to phase");
    double a = p1 * std::norm(psi1.a0()) - p2 * std::norm(psi2.a0());
    double d = p1 * std::norm(psi1.a1()) - p2 * std::norm(psi2.a1());
    Complex b = p1 * psi1.a0() * std::conj(psi1.a1()) - p2 * psi2.a0() * std::conj(psi2.a1());
    auto es = detail::herm_eigensystem(a, b, d);
    auto canonical = [](std::array<Complex, 2> v) {
        Complex lead = (std::abs(v[0]) >= std::abs(v[1])) ? v[0] : v[1];
        Complex ph = (std::abs(lead) < 1e-300) ? Complex(1.0, 0.0) : std::conj(lead) / std::abs(lead);
        return std::array<Complex, 2>{v[0] * ph, v[1] * ph};
    };
    auto hi = canonical(es.vec_hi);
    auto lo = canonical(es.vec_lo);
    Unitary2 uf(std::conj(hi[0]), std::conj(hi[1]),
                std::conj(lo[0]), std::conj(lo[1]));
    return {uf, uf.adjoint()};
}

/// Receiver resolving the geometrically uniform four-state set into
/// 4-periodic signatures.
inline std::pair<Unitary2, Unitary2> gu_receiver() {
    Unitary2 uf = Unitary2::hadamard();
    Complex i(0.0, 1.0);
    double h = 0.5;
    Unitary2 ub(h * (1.0 + i), h * (1.0 + i),
                h * (1.0 - i), h * (i - 1.0));
    return {uf, ub};
}

/// Published tetrad receiver entries, sanitized to exact unitaries.
inline std::pair<Unitary2, Unitary2> tetrad_receiver() {
    RawMatrix2 uf{Complex(0.953021, 0.0), Complex(0.302905, 0.0),
                  Complex(-0.302905, 0.0), Complex(0.953021, 0.0)};
    RawMatrix2 ub{Complex(-0.674645, 0.216571), Complex(0.2118, -0.673121),
                  Complex(-0.2118, -0.673121), Complex(-0.674645, -0.216571)};
    return {nearest_unitary(uf), nearest_unitary(ub)};
}

namespace detail {

inline double margin_objective(const NetworkConfig& config, const Ensemble& ensemble,
                               int bins_window, int margin_sink) {
    std::vector<std::vector<double>> vals(ensemble.size());
    int available = 0;
    for (std::size_t h = 0; h < ensemble.size(); ++h) {
        auto dist = evolve(config, ensemble.state(h));
        auto df = decay_free_distribution(dist, config.schedule);
        available = static_cast<int>(df.bins.size());
        vals[h].reserve(bins_window);
        for (int bN = 0; bN < bins_window && bN < available; ++bN)
            vals[h].push_back(margin_sink == 5 ? df.bins[bN].p5 : df.bins[bN].p6);
    }
    int window = std::min(bins_window, available);
    if (window < static_cast<int>(ensemble.size()))
        throw std::invalid_argument("margin objective: fewer bins than states");
    std::vector<int> pick(ensemble.size());
    double best = -1e300;
    // assign states to distinct bins; <= 4 states keeps this tiny
    auto rec = [&](auto&& self, std::size_t state, unsigned used) -> void {
        if (state == ensemble.size()) {
            double worst = 1e300;
            for (std::size_t s = 0; s < ensemble.size(); ++s) {
                int b = pick[s];
                double others = -1e300;
                for (std::size_t t = 0; t < ensemble.size(); ++t)
                    if (t != s) others = std::max(others, vals[t][b]);
                worst = std::min(worst, vals[s][b] - others);
            }
            best = std::max(best, worst);
            return;
        }
        for (int b = 0; b < window; ++b) {
            if (used & (1u << b)) continue;
            pick[state] = b;
            self(self, state + 1, used | (1u << b));
        }
    };
    rec(rec, 0, 0u);
    return best;
}

}  // namespace detail

/// Random-restart simplex search over receiver pairs. Global phases are
/// gauge-fixed, leaving a 6-dimensional space. Deterministic for a fixed
/// seed regardless of thread count.
inline OptimizeResult optimize(const Ensemble& ensemble, const ObjectiveSpec& objective,
                               const SearchSettings& settings) {
    objective.validate();
    if (ensemble.size() > 4)
        throw std::invalid_argument("optimize: at most four states supported");
    if (objective.variant == ObjectiveSpec::Variant::bin_assignment_margin &&
        static_cast<std::size_t>(objective.bins_window) < ensemble.size())
        throw std::invalid_argument("optimize: bins_window smaller than the ensemble");
    if (settings.restarts < 1 || settings.max_iters < 1)
        throw std::invalid_argument("optimize: restarts and max_iters must be positive");

    const bool margin = objective.variant == ObjectiveSpec::Variant::bin_assignment_margin;
    auto natural = [&](double internal) { return margin ? -internal : internal; };

    auto build_config = [&](const std::vector<double>& x) {
        UnitaryParams pf{x[0], x[1], x[2], 0.0};
        UnitaryParams pb{x[3], x[4], x[5], 0.0};
        return NetworkConfig{pf.to_unitary(), pb.to_unitary(), objective.schedule,
                             objective.max_loops};
    };
    auto internal_objective = [&](const std::vector<double>& x) {
        NetworkConfig config = build_config(x);
        if (margin)
            return -detail::margin_objective(config, ensemble, objective.bins_window,
                                             objective.margin_sink);
        OutcomeTable table = make_outcome_table(config, ensemble);
        DecisionRule rule = build_map_rule(table, ensemble.priors());
        return single_copy_error(table, ensemble.priors(), rule);
    };

    struct PerRestart {
        SimplexResult simplex;
        double start = 0.0;
        std::vector<TracePoint> trace;
    };
    std::vector<PerRestart> runs(settings.restarts);

    parallel_for(static_cast<std::size_t>(settings.restarts), settings.threads,
                 [&](std::size_t r) {
        auto eng = make_engine(derive_seed(settings.seed, r));
        UnitaryParams pf = UnitaryParams::from_unitary(haar_unitary(eng));
        UnitaryParams pb = UnitaryParams::from_unitary(haar_unitary(eng));
        std::vector<double> x0{pf.theta, pf.phase1, pf.phase2,
                               pb.theta, pb.phase1, pb.phase2};
        PerRestart& run = runs[r];
        run.start = natural(internal_objective(x0));
        auto on_iter = [&](int it, double best) {
            run.trace.push_back({static_cast<int>(r), it, natural(best)});
        };
        run.simplex = nelder_mead(internal_objective, std::move(x0), settings.initial_scale,
                                  settings.max_iters, settings.ftol, settings.xtol, on_iter);
        // fresh simplexes at the found point escape collapsed geometry
        double scale = settings.initial_scale * 0.05;
        for (int round = 0; round < 3; ++round, scale *= 0.1) {
            int offset = run.simplex.iterations;
            auto on_polish = [&](int it, double best) {
                run.trace.push_back({static_cast<int>(r), offset + it, natural(best)});
            };
            SimplexResult polish = nelder_mead(internal_objective, run.simplex.x, scale,
                                               settings.max_iters, settings.ftol,
                                               settings.xtol, on_polish);
            polish.iterations += offset;
            if (polish.value < run.simplex.value)
                run.simplex = std::move(polish);
            else
                run.simplex.iterations = polish.iterations;
        }
    });

    int best = 0;
    for (int r = 1; r < settings.restarts; ++r)
        if (runs[r].simplex.value < runs[best].simplex.value) best = r;

    OptimizeResult out;
    NetworkConfig cfg = build_config(runs[best].simplex.x);
    out.u_forward = cfg.u_forward;
    out.u_backward = cfg.u_backward;
    out.objective_value = natural(runs[best].simplex.value);
    out.variant = objective.variant;
    out.converged = runs[best].simplex.converged;
    out.best_restart = best;
    out.seed = settings.seed;
    for (int r = 0; r < settings.restarts; ++r) {
        out.restarts.push_back({r, runs[r].start, natural(runs[r].simplex.value),
                                runs[r].simplex.iterations, runs[r].simplex.converged});
        out.trace.insert(out.trace.end(), runs[r].trace.begin(), runs[r].trace.end());
    }
    return out;
}

}  // namespace qsd
