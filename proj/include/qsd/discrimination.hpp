#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsd/network.hpp"
#include "qsd/rng.hpp"

namespace qsd {

/// Exact enumeration would exceed the configured composition budget.
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Outcome {
    int sink = 5;  // 5 or 6
    int bin = 1;   // 1-based encounter index
    bool operator==(const Outcome&) const = default;
};

/// Conditional arrival probabilities P(outcome | state), one row per
/// hypothesis. Rows are probability distributions over the outcome list.
class OutcomeTable {
public:
    OutcomeTable(std::vector<Outcome> outcomes, std::vector<std::vector<double>> rows)
        : outcomes_(std::move(outcomes)), rows_(std::move(rows)) {
        if (outcomes_.empty() || rows_.empty())
            throw std::invalid_argument("OutcomeTable: empty table");
        for (const auto& row : rows_) {
            if (row.size() != outcomes_.size())
                throw std::invalid_argument("OutcomeTable: row length mismatch");
            double sum = 0.0;
            for (double p : row) {
                if (!(p >= -1e-15) || !std::isfinite(p))
                    throw std::invalid_argument("OutcomeTable: negative probability");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-10)
                throw std::invalid_argument("OutcomeTable: row sums to " + std::to_string(sum));
        }
        for (auto& row : rows_)
            for (double& p : row) p = std::max(p, 0.0);
    }

    std::size_t num_outcomes() const { return outcomes_.size(); }
    std::size_t num_hypotheses() const { return rows_.size(); }
    const std::vector<Outcome>& outcomes() const { return outcomes_; }
    const std::vector<std::vector<double>>& rows() const { return rows_; }
    double prob(std::size_t hyp, std::size_t outcome) const { return rows_[hyp][outcome]; }

private:
    std::vector<Outcome> outcomes_;
    std::vector<std::vector<double>> rows_;
};

/// Outcomes ordered bin-major, sink 5 before sink 6 within each bin.
inline OutcomeTable make_outcome_table(const NetworkConfig& config, const Ensemble& ensemble) {
    std::vector<Outcome> outcomes;
    std::vector<std::vector<double>> rows(ensemble.size());
    for (std::size_t h = 0; h < ensemble.size(); ++h) {
        TimeBinnedDistribution cond =
            conditional_distribution(evolve(config, ensemble.state(h)));
        if (h == 0) {
            for (std::size_t i = 0; i < cond.bins.size(); ++i) {
                int bin = cond.first_bin_index + static_cast<int>(i);
                outcomes.push_back({5, bin});
                outcomes.push_back({6, bin});
            }
        }
        rows[h].reserve(2 * cond.bins.size());
        for (const auto& b : cond.bins) {
            rows[h].push_back(b.p5);
            rows[h].push_back(b.p6);
        }
    }
    return OutcomeTable(std::move(outcomes), std::move(rows));
}

struct DecisionRule {
    std::vector<int> guess;        // hypothesis index per outcome
    bool lowest_index_ties = true;
};

/// Maximum a posteriori rule; exact prior-weighted ties resolve to the
/// lowest hypothesis index.
inline DecisionRule build_map_rule(const OutcomeTable& table, const std::vector<double>& priors) {
    if (priors.size() != table.num_hypotheses())
        throw std::invalid_argument("build_map_rule: priors/hypotheses mismatch");
    DecisionRule rule;
    rule.guess.resize(table.num_outcomes());
    for (std::size_t o = 0; o < table.num_outcomes(); ++o) {
        int best = 0;
        double best_w = priors[0] * table.prob(0, o);
        for (std::size_t j = 1; j < table.num_hypotheses(); ++j) {
            double w = priors[j] * table.prob(j, o);
            if (w > best_w) {
                best = static_cast<int>(j);
                best_w = w;
            }
        }
        rule.guess[o] = best;
    }
    return rule;
}

inline double single_copy_error(const OutcomeTable& table, const std::vector<double>& priors,
                                const DecisionRule& rule) {
    if (rule.guess.size() != table.num_outcomes())
        throw std::invalid_argument("single_copy_error: rule/table mismatch");
    double correct = 0.0;
    for (std::size_t o = 0; o < table.num_outcomes(); ++o) {
        int g = rule.guess[o];
        correct += priors.at(g) * table.prob(g, o);
    }
    return 1.0 - correct;
}

/// MAP success probability restricted to the outcomes observed up to each
/// bin, renormalized by the extracted mass through that bin. For a receiver
/// saturating the Helstrom bound every entry equals the bound.
inline std::vector<double> map_cumulative_correct(const OutcomeTable& table,
                                                  const std::vector<double>& priors) {
    if (priors.size() != table.num_hypotheses())
        throw std::invalid_argument("map_cumulative_correct: priors/hypotheses mismatch");
    std::vector<double> out;
    const auto& outcomes = table.outcomes();
    double best_mass = 0.0, total_mass = 0.0;
    for (std::size_t o = 0; o < outcomes.size(); ++o) {
        double best = 0.0, mass = 0.0;
        for (std::size_t j = 0; j < priors.size(); ++j) {
            double w = priors[j] * table.prob(j, o);
            mass += w;
            best = std::max(best, w);
        }
        best_mass += best;
        total_mass += mass;
        if (o + 1 == outcomes.size() || outcomes[o + 1].bin != outcomes[o].bin)
            out.push_back(total_mass > 0.0 ? best_mass / total_mass : 0.0);
    }
    return out;
}

struct CountVector {
    std::vector<long long> counts;  // aligned with the table's outcome list

    long long total() const {
        long long t = 0;
        for (long long c : counts) t += c;
        return t;
    }
};

/// Posterior over hypotheses from iid copy counts, computed in log space
/// with max subtraction. A positive epsilon floors each per-copy likelihood
/// factor, rescuing counts that contradict every hypothesis; with the floor
/// at zero such counts throw.
inline std::vector<double> posterior_from_rows(const std::vector<long long>& counts,
                                               const std::vector<std::vector<double>>& rows,
                                               const std::vector<double>& priors,
                                               double epsilon = 0.0) {
    if (rows.empty() || rows.size() != priors.size())
        throw std::invalid_argument("posterior_from_rows: rows/priors mismatch");
    std::size_t k = rows[0].size();
    if (counts.size() != k)
        throw std::invalid_argument("posterior_from_rows: counts/rows mismatch");
    std::vector<double> logw(rows.size());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < rows.size(); ++j) {
        double lw = (priors[j] > 0.0) ? std::log(priors[j])
                                      : -std::numeric_limits<double>::infinity();
        for (std::size_t o = 0; o < k; ++o) {
            long long c = counts[o];
            if (c < 0)
                throw std::invalid_argument("posterior_from_rows: negative count");
            if (c == 0) continue;
            double p = std::max(rows[j][o], epsilon);
            lw += (p > 0.0) ? c * std::log(p)
                            : -std::numeric_limits<double>::infinity();
        }
        logw[j] = lw;
        best = std::max(best, lw);
    }
    if (!std::isfinite(best))
        throw std::domain_error("posterior_from_rows: counts contradict every hypothesis");
    double z = 0.0;
    std::vector<double> post(rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j) {
        post[j] = std::exp(logw[j] - best);
        z += post[j];
    }
    for (double& p : post) p /= z;
    return post;
}

inline std::vector<double> multi_copy_posterior(const CountVector& counts,
                                                const OutcomeTable& table,
                                                const std::vector<double>& priors,
                                                double epsilon = 0.0) {
    return posterior_from_rows(counts.counts, table.rows(), priors, epsilon);
}

struct MultiCopyMode {
    enum class Kind { exact, montecarlo };
    Kind kind = Kind::exact;
    std::uint64_t seed = 1;
    long long trials = 100000;
    double epsilon_floor = 0.0;
    long long max_compositions = 20000000;
};

struct ErrorEstimate {
    double value = 0.0;
    double std_error = 0.0;  // zero in exact mode
    bool exact = true;
    bool epsilon_floor_applied = false;
};

namespace detail {

inline double compositions_count(int m, int k) {
    // C(m + k - 1, k - 1), saturating
    double c = 1.0;
    for (int i = 1; i <= k - 1; ++i) c *= double(m + i) / double(i);
    return c;
}

}  // namespace detail

/// Bayes error of the MAP decision on m iid copies. Exact mode enumerates
/// count compositions; when their number exceeds mode.max_compositions a
/// CapacityError names the Monte Carlo alternative.
inline ErrorEstimate expected_multi_copy_error(const OutcomeTable& table,
                                               const std::vector<double>& priors,
                                               int m, const MultiCopyMode& mode) {
    if (priors.size() != table.num_hypotheses())
        throw std::invalid_argument("expected_multi_copy_error: priors/hypotheses mismatch");
    if (m < 0)
        throw std::invalid_argument("expected_multi_copy_error: negative copy count");
    const auto& rows = table.rows();
    std::size_t H = rows.size();
    std::size_t K = table.num_outcomes();

    ErrorEstimate est;
    est.epsilon_floor_applied = mode.epsilon_floor > 0.0;

    if (mode.kind == MultiCopyMode::Kind::exact) {
        if (detail::compositions_count(m, static_cast<int>(K)) >
            static_cast<double>(mode.max_compositions))
            throw CapacityError(
                "expected_multi_copy_error: composition count for m=" + std::to_string(m) +
                " over " + std::to_string(K) +
                " outcomes exceeds the exact-mode budget; use montecarlo mode");
        std::vector<std::vector<double>> logp(H, std::vector<double>(K));
        for (std::size_t j = 0; j < H; ++j)
            for (std::size_t o = 0; o < K; ++o)
                logp[j][o] = rows[j][o] > 0.0 ? std::log(rows[j][o])
                                              : -std::numeric_limits<double>::infinity();
        std::vector<double> lg(m + 2);
        for (int i = 0; i <= m + 1; ++i) lg[i] = std::lgamma(double(i) + 1.0);
        std::vector<double> logprior(H);
        for (std::size_t j = 0; j < H; ++j)
            logprior[j] = priors[j] > 0.0 ? std::log(priors[j])
                                          : -std::numeric_limits<double>::infinity();
        double sum_max = 0.0;
        std::vector<double> ll(H);
        // place counts cell by cell; ll carries sum_o c log p - sum_o lgamma(c+1)
        auto rec = [&](auto&& self, std::size_t cell, int remaining) -> void {
            if (cell == K - 1) {
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < H; ++j) {
                    double lw = logprior[j] + ll[j] - lg[remaining];
                    if (remaining > 0) {
                        if (logp[j][cell] == -std::numeric_limits<double>::infinity())
                            continue;
                        lw += remaining * logp[j][cell];
                    }
                    best = std::max(best, lw);
                }
                if (std::isfinite(best)) sum_max += std::exp(best + lg[m]);
                return;
            }
            std::vector<double> saved = ll;
            for (int c = 0; c <= remaining; ++c) {
                if (c > 0) {
                    bool alive = false;
                    for (std::size_t j = 0; j < H; ++j) {
                        if (logp[j][cell] == -std::numeric_limits<double>::infinity())
                            ll[j] = -std::numeric_limits<double>::infinity();
                        else
                            ll[j] = saved[j] + c * logp[j][cell] - lg[c];
                        alive = alive || std::isfinite(ll[j]);
                    }
                    if (!alive) break;
                }
                self(self, cell + 1, remaining - c);
            }
            ll = saved;
        };
        rec(rec, 0, m);
        est.value = 1.0 - sum_max;
        est.std_error = 0.0;
        est.exact = true;
        return est;
    }

    if (mode.trials < 1)
        throw std::invalid_argument("expected_multi_copy_error: trials must be positive");
    std::discrete_distribution<int> pick(priors.begin(), priors.end());
    double sum = 0.0, sum_sq = 0.0;
    for (long long t = 0; t < mode.trials; ++t) {
        auto eng = make_engine(derive_seed(mode.seed, static_cast<std::uint64_t>(t)));
        int j = pick(eng);
        std::vector<long long> counts(K, 0);
        int left = m;
        double mass = 1.0;
        for (std::size_t o = 0; o + 1 < K && left > 0; ++o) {
            double p = rows[j][o] / mass;
            if (p > 1.0) p = 1.0;
            std::binomial_distribution<int> bin(left, p);
            int c = bin(eng);
            counts[o] = c;
            left -= c;
            mass -= rows[j][o];
            if (mass <= 0.0) break;
        }
        if (left > 0) counts[K - 1] += left;
        auto post = posterior_from_rows(counts, rows, priors, mode.epsilon_floor);
        double err = 1.0 - *std::max_element(post.begin(), post.end());
        sum += err;
        sum_sq += err * err;
    }
    double n = static_cast<double>(mode.trials);
    est.value = sum / n;
    double var = std::max(0.0, (sum_sq - sum * sum / n) / std::max(1.0, n - 1.0));
    est.std_error = std::sqrt(var / n);
    est.exact = false;
    return est;
}

}  // namespace qsd
