#pragma once

// Reference implementations kept deliberately independent of the library's
// code paths; tests compare the two.

#include <cmath>
#include <complex>
#include <vector>

#include "qsd/network.hpp"

namespace oracle {

/// Evolves explicit sink amplitudes: each extraction event detaches
/// sqrt(q)-weighted amplitude into its own bin mode, the remainder is
/// damped by sqrt(1-q) and sent backward. No probability envelope is used.
inline qsd::TimeBinnedDistribution ledger_evolve(const qsd::NetworkConfig& config,
                                                 const qsd::PureState& input) {
    using qsd::Complex;
    qsd::TimeBinnedDistribution out;
    Complex v0 = input.a0(), v1 = input.a1();
    for (int k = 1; k <= config.max_loops; ++k) {
        Complex w0 = config.u_forward(0, 0) * v0 + config.u_forward(0, 1) * v1;
        Complex w1 = config.u_forward(1, 0) * v0 + config.u_forward(1, 1) * v1;
        double q = config.schedule.extraction_prob(k);
        double rq = std::sqrt(q), rs = std::sqrt(1.0 - q);
        Complex s5 = rq * w0, s6 = rq * w1;
        if (k == 1 && config.schedule.first_step_discarded) {
            out.discarded = std::norm(s5) + std::norm(s6);
            out.first_bin_index = 2;
        } else {
            out.bins.push_back({std::norm(s5), std::norm(s6)});
        }
        w0 *= rs;
        w1 *= rs;
        v0 = config.u_backward(0, 0) * w0 + config.u_backward(0, 1) * w1;
        v1 = config.u_backward(1, 0) * w0 + config.u_backward(1, 1) * w1;
    }
    out.residual = std::norm(v0) + std::norm(v1);
    return out;
}

/// Best projective measurement by grid search with local refinement:
/// guess psi1 on outcome (cos t, e^{i p} sin t), psi2 on its complement.
inline double helstrom_bruteforce(const qsd::PureState& psi1, const qsd::PureState& psi2,
                                  double p1, double p2) {
    using qsd::Complex;
    auto success = [&](double t, double p) {
        Complex v0 = std::cos(t), v1 = std::polar(std::sin(t), p);
        auto overlap2 = [&](const qsd::PureState& s) {
            Complex ip = std::conj(v0) * s.a0() + std::conj(v1) * s.a1();
            return std::norm(ip);
        };
        return p1 * overlap2(psi1) + p2 * (1.0 - overlap2(psi2));
    };
    const double pi = 3.14159265358979323846;
    double best = -1.0, bt = 0.0, bp = 0.0;
    double ct = pi / 2.0, cp = pi, wt = pi / 2.0, wp = pi;
    for (int round = 0; round < 7; ++round) {
        int n = (round == 0) ? 64 : 16;
        for (int i = -n; i <= n; ++i) {
            for (int j = -n; j <= n; ++j) {
                double t = ct + wt * i / n;
                double p = cp + wp * j / n;
                double s = success(t, p);
                if (s > best) {
                    best = s;
                    bt = t;
                    bp = p;
                }
            }
        }
        ct = bt;
        cp = bp;
        wt /= (round == 0) ? 32.0 : 8.0;
        wp /= (round == 0) ? 32.0 : 8.0;
    }
    return best;
}

}  // namespace oracle
