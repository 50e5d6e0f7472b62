#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "qsd/core.hpp"
#include "qsd/ensembles.hpp"

namespace qsd {

/// Per-encounter extraction probabilities at the sinker nodes. Probabilities
/// live in (0, 1]. The first encounter may use an override (unbalanced
/// coupling) and may be discarded from the recorded distribution.
struct ExtractionSchedule {
    double default_prob = 0.3;
    std::optional<double> first_step_override;
    bool first_step_discarded = false;

    void validate() const {
        auto check = [](double q) {
            if (!(q > 0.0) || q > 1.0)
                throw std::invalid_argument("ExtractionSchedule: extraction probability must lie in (0, 1]");
        };
        check(default_prob);
        if (first_step_override) check(*first_step_override);
    }

    /// k is the 1-based encounter index.
    double extraction_prob(int k) const {
        if (k == 1 && first_step_override) return *first_step_override;
        return default_prob;
    }
};

inline ExtractionSchedule uniform_schedule(double prob) {
    ExtractionSchedule s;
    s.default_prob = prob;
    s.validate();
    return s;
}

/// Schedule used in the tabletop realization: first pass extracted with
/// probability 0.7 and discarded, later passes with 0.3.
inline ExtractionSchedule experimental_schedule() {
    ExtractionSchedule s;
    s.default_prob = 0.3;
    s.first_step_override = 0.7;
    s.first_step_discarded = true;
    return s;
}

/// Looped sink network: forward unitary into the sinker pair, probabilistic
/// extraction into sinks 5/6, backward unitary for the surviving amplitude.
struct NetworkConfig {
    Unitary2 u_forward;
    Unitary2 u_backward;
    ExtractionSchedule schedule;
    int max_loops = 12;

    void validate() const {
        schedule.validate();
        if (max_loops < 1)
            throw std::invalid_argument("NetworkConfig: max_loops must be >= 1");
    }
};

struct SinkBin {
    double p5 = 0.0;
    double p6 = 0.0;
    double total() const { return p5 + p6; }
};

/// Arrival probabilities per retained time bin. bins[i] belongs to encounter
/// first_bin_index + i (1-based); `discarded` holds the mass of a dropped
/// first bin and `residual` the mass still circulating after max_loops.
/// Conservation: sum of bins + residual + discarded = 1.
struct TimeBinnedDistribution {
    std::vector<SinkBin> bins;
    double residual = 0.0;
    double discarded = 0.0;
    int first_bin_index = 1;

    double total_extracted() const {
        double s = 0.0;
        for (const auto& b : bins) s += b.total();
        return s;
    }
};

inline TimeBinnedDistribution evolve(const NetworkConfig& config, const PureState& input) {
    config.validate();
    TimeBinnedDistribution out;
    Complex v0 = input.a0(), v1 = input.a1();
    double envelope = 1.0;
    for (int k = 1; k <= config.max_loops; ++k) {
        Complex w0 = config.u_forward(0, 0) * v0 + config.u_forward(0, 1) * v1;
        Complex w1 = config.u_forward(1, 0) * v0 + config.u_forward(1, 1) * v1;
        double q = config.schedule.extraction_prob(k);
        SinkBin bin{envelope * q * std::norm(w0), envelope * q * std::norm(w1)};
        if (k == 1 && config.schedule.first_step_discarded) {
            out.discarded = bin.total();
            out.first_bin_index = 2;
        } else {
            out.bins.push_back(bin);
        }
        envelope *= 1.0 - q;
        v0 = config.u_backward(0, 0) * w0 + config.u_backward(0, 1) * w1;
        v1 = config.u_backward(1, 0) * w0 + config.u_backward(1, 1) * w1;
    }
    out.residual = envelope;
    return out;
}

/// Normalizes the retained bins to unit total (arrival probabilities
/// conditioned on extraction within the recorded window).
inline TimeBinnedDistribution conditional_distribution(const TimeBinnedDistribution& dist) {
    double total = dist.total_extracted();
    if (!(total > 0.0))
        throw std::domain_error("conditional_distribution: no mass in retained bins");
    TimeBinnedDistribution out;
    out.bins.reserve(dist.bins.size());
    for (const auto& b : dist.bins)
        out.bins.push_back({b.p5 / total, b.p6 / total});
    out.first_bin_index = dist.first_bin_index;
    return out;
}

/// Removes the extraction-envelope decay: each bin is divided by its
/// envelope weight and normalized, leaving the per-encounter landing
/// probabilities. Bins with no mass come out as (0, 0).
inline TimeBinnedDistribution decay_free_distribution(const TimeBinnedDistribution& dist,
                                                      const ExtractionSchedule& schedule) {
    schedule.validate();
    TimeBinnedDistribution out;
    out.bins.reserve(dist.bins.size());
    out.first_bin_index = dist.first_bin_index;
    for (std::size_t i = 0; i < dist.bins.size(); ++i) {
        int k = dist.first_bin_index + static_cast<int>(i);
        double env = 1.0;
        for (int j = 1; j < k; ++j) env *= 1.0 - schedule.extraction_prob(j);
        env *= schedule.extraction_prob(k);
        double t = dist.bins[i].total();
        if (env <= 0.0 || t <= 0.0) {
            out.bins.push_back({0.0, 0.0});
            continue;
        }
        SinkBin scaled{dist.bins[i].p5 / env, dist.bins[i].p6 / env};
        double s = scaled.total();
        out.bins.push_back({scaled.p5 / s, scaled.p6 / s});
    }
    return out;
}

inline Unitary2 loop_operator(const NetworkConfig& config) {
    return config.u_forward * config.u_backward;
}

/// Assignment of the two sinks to the two hypotheses of a binary ensemble.
struct SinkMap {
    int state_for_sink5 = 0;
    int state_for_sink6 = 1;

    void validate() const {
        bool ok = (state_for_sink5 == 0 && state_for_sink6 == 1) ||
                  (state_for_sink5 == 1 && state_for_sink6 == 0);
        if (!ok)
            throw std::invalid_argument("SinkMap: sinks must map onto states {0, 1}");
    }
};

/// Probability of a correct call among arrivals up to each retained bin:
/// entry i is (prior-weighted mass landing in the mapped sink through bin i)
/// over (prior-weighted mass extracted through bin i).
inline std::vector<double> cumulative_correct(const NetworkConfig& config,
                                              const Ensemble& ensemble,
                                              const SinkMap& map) {
    map.validate();
    if (ensemble.size() != 2)
        throw std::invalid_argument("cumulative_correct: binary ensemble required");
    TimeBinnedDistribution d0 = evolve(config, ensemble.state(0));
    TimeBinnedDistribution d1 = evolve(config, ensemble.state(1));
    std::vector<double> out;
    out.reserve(d0.bins.size());
    double correct = 0.0, total = 0.0;
    for (std::size_t i = 0; i < d0.bins.size(); ++i) {
        double c0 = (map.state_for_sink5 == 0) ? d0.bins[i].p5 : d0.bins[i].p6;
        double c1 = (map.state_for_sink5 == 1) ? d1.bins[i].p5 : d1.bins[i].p6;
        correct += ensemble.prior(0) * c0 + ensemble.prior(1) * c1;
        total += ensemble.prior(0) * d0.bins[i].total() + ensemble.prior(1) * d1.bins[i].total();
        if (!(total > 0.0))
            throw std::domain_error("cumulative_correct: no extracted mass through bin");
        out.push_back(correct / total);
    }
    return out;
}

}  // namespace qsd
