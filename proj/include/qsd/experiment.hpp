#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsd/discrimination.hpp"
#include "qsd/network.hpp"
#include "qsd/rng.hpp"

namespace qsd {

/// Photon-pair number statistics of the source. Thermal statistics carry
/// excess variance mu + (g2 - 1) mu^2 and are sampled as a gamma-Poisson
/// mixture with shape 1 / (g2 - 1).
struct GenerationStatistics {
    enum class Kind { poisson, thermal };
    Kind kind = Kind::poisson;
    double g2 = 2.0;

    void validate() const {
        if (kind == Kind::thermal && !(g2 >= 1.0))
            throw std::invalid_argument("GenerationStatistics: thermal g2 must be >= 1");
    }
};

struct NoiseModel {
    double pair_rate = 0.0;              // detected signal pairs per unit time
    double accidental_rate_per_bin = 0.0;
    GenerationStatistics generation;

    void validate() const {
        if (!(pair_rate >= 0.0) || !(accidental_rate_per_bin >= 0.0))
            throw std::invalid_argument("NoiseModel: rates must be nonnegative");
        generation.validate();
    }
};

/// One acquisition window. Cells follow the outcome-table layout (bin-major,
/// sink 5 before 6). Raw records hold integral counts; subtraction and
/// averaging produce non-raw records with real-valued counts.
struct EventRecord {
    std::vector<Outcome> cells;
    std::vector<double> counts;
    double duration = 0.0;
    bool raw = true;
    std::uint64_t seed = 0;
    std::string state_label;
    int clamped_cells = 0;

    double total() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }
};

namespace detail {

inline long long sample_pair_total(std::mt19937_64& eng, double mean,
                                   const GenerationStatistics& gen) {
    if (mean <= 0.0) return 0;
    if (gen.kind == GenerationStatistics::Kind::poisson || gen.g2 <= 1.0 + 1e-12) {
        std::poisson_distribution<long long> pois(mean);
        return pois(eng);
    }
    double shape = 1.0 / (gen.g2 - 1.0);
    std::gamma_distribution<double> gamma(shape, mean / shape);
    std::poisson_distribution<long long> pois_mixed;
    double lambda = gamma(eng);
    if (lambda <= 0.0) return 0;
    pois_mixed.param(std::poisson_distribution<long long>::param_type(lambda));
    return pois_mixed(eng);
}

inline void add_multinomial(std::mt19937_64& eng, long long n, const std::vector<double>& probs,
                            std::vector<double>& counts) {
    long long left = n;
    double mass = 1.0;
    for (std::size_t o = 0; o + 1 < probs.size() && left > 0; ++o) {
        double p = probs[o] / mass;
        if (p > 1.0) p = 1.0;
        std::binomial_distribution<long long> bin(left, p);
        long long c = bin(eng);
        counts[o] += double(c);
        left -= c;
        mass -= probs[o];
        if (mass <= 0.0) break;
    }
    if (left > 0) counts[probs.size() - 1] += double(left);
}

}  // namespace detail

/// Samples one acquisition: a generation-statistics draw of signal pairs
/// lands multinomially on the conditional arrival distribution, then each
/// cell picks up Poisson accidentals.
inline EventRecord simulate_run(const NetworkConfig& config, const PureState& state,
                                const NoiseModel& noise, double duration, std::uint64_t seed,
                                const std::string& label = "") {
    noise.validate();
    if (!(duration > 0.0))
        throw std::invalid_argument("simulate_run: duration must be positive");
    TimeBinnedDistribution cond = conditional_distribution(evolve(config, state));
    EventRecord rec;
    rec.duration = duration;
    rec.seed = seed;
    rec.state_label = label;
    std::vector<double> probs;
    for (std::size_t i = 0; i < cond.bins.size(); ++i) {
        int bin = cond.first_bin_index + static_cast<int>(i);
        rec.cells.push_back({5, bin});
        rec.cells.push_back({6, bin});
        probs.push_back(cond.bins[i].p5);
        probs.push_back(cond.bins[i].p6);
    }
    rec.counts.assign(rec.cells.size(), 0.0);
    auto eng = make_engine(seed);
    long long n = detail::sample_pair_total(eng, noise.pair_rate * duration, noise.generation);
    detail::add_multinomial(eng, n, probs, rec.counts);
    if (noise.accidental_rate_per_bin > 0.0) {
        std::poisson_distribution<long long> acc(noise.accidental_rate_per_bin * duration);
        for (double& c : rec.counts) c += double(acc(eng));
    }
    return rec;
}

/// Accidental-only acquisition with the same cell layout.
inline EventRecord simulate_background(const NetworkConfig& config, const NoiseModel& noise,
                                       double duration, std::uint64_t seed) {
    NoiseModel dark = noise;
    dark.pair_rate = 0.0;
    return simulate_run(config, basis_h(), dark, duration, seed, "background");
}

struct BackgroundEstimate {
    std::vector<Outcome> cells;
    std::vector<double> rates;
    std::vector<double> std_errors;
    std::vector<bool> one_sided;  // zero-count cells: std_error is an upper bound
    double total_duration = 0.0;
};

namespace detail {

inline void require_same_layout(const std::vector<Outcome>& a, const std::vector<Outcome>& b,
                                const char* who) {
    if (a != b)
        throw std::invalid_argument(std::string(who) + ": cell layout mismatch");
}

}  // namespace detail

/// Pools raw noise-only records into per-cell accidental rates with
/// counting-statistics errors.
inline BackgroundEstimate estimate_background(const std::vector<EventRecord>& records) {
    if (records.empty())
        throw std::invalid_argument("estimate_background: no records");
    BackgroundEstimate est;
    est.cells = records[0].cells;
    est.rates.assign(est.cells.size(), 0.0);
    for (const auto& r : records) {
        if (!r.raw)
            throw std::invalid_argument("estimate_background: records must be raw");
        detail::require_same_layout(est.cells, r.cells, "estimate_background");
        if (!(r.duration > 0.0))
            throw std::invalid_argument("estimate_background: nonpositive duration");
        est.total_duration += r.duration;
        for (std::size_t o = 0; o < est.rates.size(); ++o) est.rates[o] += r.counts[o];
    }
    est.std_errors.resize(est.rates.size());
    est.one_sided.resize(est.rates.size());
    for (std::size_t o = 0; o < est.rates.size(); ++o) {
        double c = est.rates[o];
        est.rates[o] = c / est.total_duration;
        est.one_sided[o] = c == 0.0;
        est.std_errors[o] = (c > 0.0 ? std::sqrt(c) : 1.0) / est.total_duration;
    }
    return est;
}

/// Removes the expected accidentals cell by cell, clamping at zero. The
/// number of clamped cells is recorded on the returned record.
inline EventRecord subtract_background(const EventRecord& record, const BackgroundEstimate& bg) {
    detail::require_same_layout(record.cells, bg.cells, "subtract_background");
    EventRecord out = record;
    out.raw = false;
    out.clamped_cells = 0;
    for (std::size_t o = 0; o < out.counts.size(); ++o) {
        double c = record.counts[o] - bg.rates[o] * record.duration;
        if (c < 0.0) {
            c = 0.0;
            ++out.clamped_cells;
        }
        out.counts[o] = c;
    }
    return out;
}

struct PostselectResult {
    EventRecord averaged;
    int kept = 0;
    int discarded = 0;
};

/// Keeps records whose total count lies in k +- window_sigmas * sqrt(k)
/// (the Poisson acceptance window) and averages them cell-wise.
inline PostselectResult postselect_k_photon(const std::vector<EventRecord>& records, int k,
                                            double window_sigmas) {
    if (records.empty())
        throw std::invalid_argument("postselect_k_photon: no records");
    if (k < 1)
        throw std::invalid_argument("postselect_k_photon: k must be >= 1");
    if (!(window_sigmas >= 0.0))
        throw std::invalid_argument("postselect_k_photon: window must be nonnegative");
    const auto& first = records[0];
    PostselectResult out;
    out.averaged.cells = first.cells;
    out.averaged.counts.assign(first.cells.size(), 0.0);
    out.averaged.duration = first.duration;
    out.averaged.raw = false;
    out.averaged.state_label = first.state_label;
    double half_width = window_sigmas * std::sqrt(double(k));
    for (const auto& r : records) {
        detail::require_same_layout(first.cells, r.cells, "postselect_k_photon");
        if (std::abs(r.duration - first.duration) > 1e-9 * std::max(1.0, first.duration))
            throw std::invalid_argument("postselect_k_photon: records differ in duration");
        if (std::abs(r.total() - double(k)) <= half_width) {
            for (std::size_t o = 0; o < r.counts.size(); ++o)
                out.averaged.counts[o] += r.counts[o];
            ++out.kept;
        } else {
            ++out.discarded;
        }
    }
    if (out.kept == 0)
        throw std::domain_error("postselect_k_photon: no records inside the acceptance window");
    for (double& c : out.averaged.counts) c /= double(out.kept);
    return out;
}

/// Largest-remainder rounding to integer counts preserving the rounded
/// total; ties fall to the lower cell index.
inline std::vector<long long> round_counts(const std::vector<double>& counts) {
    long long target = 0;
    double sum = 0.0;
    std::vector<long long> out(counts.size());
    std::vector<std::pair<double, std::size_t>> rem(counts.size());
    for (std::size_t o = 0; o < counts.size(); ++o) {
        if (!(counts[o] >= 0.0))
            throw std::invalid_argument("round_counts: negative count");
        sum += counts[o];
        out[o] = static_cast<long long>(std::floor(counts[o]));
        rem[o] = {counts[o] - double(out[o]), o};
    }
    target = std::llround(sum);
    long long placed = std::accumulate(out.begin(), out.end(), 0ll);
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
        return a.first > b.first;
    });
    for (std::size_t i = 0; placed < target && i < rem.size(); ++i, ++placed)
        ++out[rem[i].second];
    return out;
}

struct ErrorCurvePoint {
    int k = 0;
    double mean_copies = 0.0;
    double p_err = 0.0;
    double std_error = 0.0;
};

struct EndToEndOptions {
    int events_per_run = 64;
    double window_sigmas = 2.0;
    double epsilon_floor = 0.0;  // likelihood floor for counts left in dead cells
};

/// Full pipeline estimate of the discrimination error at each target copy
/// number: acquire, post-select around k, subtract accidentals, round to an
/// integer event, and score the Bayesian call of the true state.
inline std::vector<ErrorCurvePoint> end_to_end_error_curve(
    const NetworkConfig& config, const Ensemble& ensemble, const NoiseModel& noise,
    const std::vector<int>& k_values, int runs_per_k, std::uint64_t seed,
    const EndToEndOptions& options = {}) {
    noise.validate();
    if (!(noise.pair_rate > 0.0))
        throw std::invalid_argument("end_to_end_error_curve: pair_rate must be positive");
    if (k_values.empty() || runs_per_k < 2 || options.events_per_run < 2)
        throw std::invalid_argument("end_to_end_error_curve: need k values, >= 2 runs and >= 2 events");

    OutcomeTable table = make_outcome_table(config, ensemble);
    std::size_t H = ensemble.size();
    std::uint64_t stride = 2ull * static_cast<std::uint64_t>(options.events_per_run);

    std::vector<ErrorCurvePoint> curve;
    for (std::size_t ki = 0; ki < k_values.size(); ++ki) {
        int k = k_values[ki];
        if (k < 1)
            throw std::invalid_argument("end_to_end_error_curve: k must be >= 1");
        double duration = double(k) / noise.pair_rate;
        ErrorCurvePoint point;
        point.k = k;
        double var_acc = 0.0;
        double copies_acc = 0.0;
        for (std::size_t i = 0; i < H; ++i) {
            double sum = 0.0, sum_sq = 0.0;
            for (int r = 0; r < runs_per_k; ++r) {
                std::uint64_t base =
                    ((ki * H + i) * static_cast<std::uint64_t>(runs_per_k) + r) * stride;
                std::vector<EventRecord> events;
                events.reserve(options.events_per_run);
                for (int e = 0; e < options.events_per_run; ++e)
                    events.push_back(simulate_run(config, ensemble.state(i), noise, duration,
                                                  derive_seed(seed, base + e),
                                                  ensemble.label(i)));
                EventRecord averaged = postselect_k_photon(events, k, options.window_sigmas).averaged;
                if (noise.accidental_rate_per_bin > 0.0) {
                    std::vector<EventRecord> dark;
                    dark.reserve(options.events_per_run);
                    for (int e = 0; e < options.events_per_run; ++e)
                        dark.push_back(simulate_background(
                            config, noise, duration,
                            derive_seed(seed, base + options.events_per_run + e)));
                    averaged = subtract_background(averaged, estimate_background(dark));
                }
                std::vector<long long> rounded = round_counts(averaged.counts);
                auto post = posterior_from_rows(rounded, table.rows(), ensemble.priors(),
                                                options.epsilon_floor);
                double err = 1.0 - post[i];
                sum += err;
                sum_sq += err * err;
                copies_acc += ensemble.prior(i) *
                              double(std::accumulate(rounded.begin(), rounded.end(), 0ll));
            }
            double n = double(runs_per_k);
            double mean = sum / n;
            double var = std::max(0.0, (sum_sq - sum * sum / n) / std::max(1.0, n - 1.0));
            point.p_err += ensemble.prior(i) * mean;
            var_acc += ensemble.prior(i) * ensemble.prior(i) * var / n;
        }
        point.std_error = std::sqrt(var_acc);
        point.mean_copies = copies_acc / double(runs_per_k);
        curve.push_back(point);
    }
    return curve;
}

}  // namespace qsd
