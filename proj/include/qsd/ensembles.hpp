#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsd/core.hpp"

namespace qsd {

/// Labeled candidate states with prior probabilities.
class Ensemble {
public:
    Ensemble(std::vector<std::string> labels, std::vector<PureState> states,
             std::vector<double> priors)
        : labels_(std::move(labels)), states_(std::move(states)), priors_(std::move(priors)) {
        if (states_.empty() || states_.size() != priors_.size() ||
            states_.size() != labels_.size())
            throw std::invalid_argument("Ensemble: labels, states and priors must have equal nonzero size");
        double sum = 0.0;
        for (double p : priors_) {
            if (!(p >= 0.0))
                throw std::invalid_argument("Ensemble: negative prior");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("Ensemble: priors sum to " + std::to_string(sum));
    }

    std::size_t size() const { return states_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::vector<PureState>& states() const { return states_; }
    const std::vector<double>& priors() const { return priors_; }
    const PureState& state(std::size_t i) const { return states_.at(i); }
    double prior(std::size_t i) const { return priors_.at(i); }
    const std::string& label(std::size_t i) const { return labels_.at(i); }

private:
    std::vector<std::string> labels_;
    std::vector<PureState> states_;
    std::vector<double> priors_;
};

/// cos(pi/8)|H> ± sin(pi/8)|V>, equal priors. Overlap cos(pi/4).
inline Ensemble binary_pair() {
    double c = std::cos(std::numbers::pi / 8.0);
    double s = std::sin(std::numbers::pi / 8.0);
    return Ensemble({"psi1", "psi2"},
                    {PureState(c, s), PureState(c, -s)},
                    {0.5, 0.5});
}

/// Geometrically uniform four-state set {|+>, |->, |R>, |L>}, equal priors.
inline Ensemble gu_set() {
    double s = std::sqrt(0.5);
    Complex i(0.0, 1.0);
    return Ensemble({"plus", "minus", "right", "left"},
                    {PureState(s, s), PureState(s, -s),
                     PureState(s, i * s), PureState(s, -i * s)},
                    {0.25, 0.25, 0.25, 0.25});
}

/// Maximally equidistant tetrad: (-|H> + sqrt(2) e^{i phi_k} |V>)/sqrt(3)
/// with phases -2pi/3, +2pi/3, 0, plus |H>. All pairwise squared overlaps
/// are 1/3.
inline Ensemble tetrad_set() {
    double a = -std::sqrt(1.0 / 3.0);
    double b = std::sqrt(2.0 / 3.0);
    double phi = 2.0 * std::numbers::pi / 3.0;
    std::vector<PureState> states{PureState(a, b * std::polar(1.0, -phi)),
                                  PureState(a, b * std::polar(1.0, phi)),
                                  PureState(a, b), basis_h()};
    return Ensemble({"psi1", "psi2", "psi3", "psi4"}, states,
                    {0.25, 0.25, 0.25, 0.25});
}

inline Ensemble ensemble_by_name(const std::string& name) {
    if (name == "binary") return binary_pair();
    if (name == "gu") return gu_set();
    if (name == "tetrad") return tetrad_set();
    throw std::invalid_argument("unknown ensemble: " + name);
}

}  // namespace qsd
