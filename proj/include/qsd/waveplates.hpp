#pragma once

#include <cmath>
#include <numbers>

#include "qsd/core.hpp"
#include "qsd/simplex.hpp"

namespace qsd {

/// Jones matrix of a retarder with fast axis at angle theta and retardance
/// delta, in the symmetric convention
///   W(theta, delta) = R(theta) diag(e^{-i delta/2}, e^{+i delta/2}) R(-theta).
inline Unitary2 waveplate(double theta, double delta) {
    double c = std::cos(theta), s = std::sin(theta);
    Complex em = std::polar(1.0, -0.5 * delta);
    Complex ep = std::polar(1.0, 0.5 * delta);
    return Unitary2(c * c * em + s * s * ep, c * s * (em - ep),
                    c * s * (em - ep), s * s * em + c * c * ep);
}

inline Unitary2 qwp(double theta) { return waveplate(theta, std::numbers::pi / 2.0); }
inline Unitary2 hwp(double theta) { return waveplate(theta, std::numbers::pi); }

/// Fast-axis angles realizing a target unitary as QWP(qwp2) HWP(hwp) QWP(qwp1)
/// = e^{i global_phase} * target, with qwp1 applied first. Angles lie in
/// [0, pi), the natural period of a retarder.
struct WaveplateDecomposition {
    double qwp1 = 0.0;
    double hwp = 0.0;
    double qwp2 = 0.0;
    double global_phase = 0.0;
};

namespace detail {

inline double mod_pi(double x) {
    double y = std::fmod(x, std::numbers::pi);
    if (y < 0.0) y += std::numbers::pi;
    return y;
}

}  // namespace detail

/// Closed-form triple-plate decomposition. The target is reduced to SU(2),
/// read as a unit quaternion, and the plate angles follow from its polar
/// angles; the leftover sign lands in global_phase.
inline WaveplateDecomposition waveplate_decomposition(const Unitary2& u) {
    Complex sq = std::sqrt(u.det());
    if (std::abs(sq) < 1e-300)
        throw std::invalid_argument("waveplate_decomposition: singular target");
    Complex v00 = u(0, 0) / sq, v01 = u(0, 1) / sq;
    Complex v10 = u(1, 0) / sq, v11 = u(1, 1) / sq;

    double w = 0.5 * (v00.real() + v11.real());
    double z = 0.5 * (v11.imag() - v00.imag());
    double y = 0.5 * (v10.real() - v01.real());
    double x = -0.5 * (v01.imag() + v10.imag());

    // product quaternion: w = -cos t cos s, y = cos t sin s,
    //                     x = -sin t cos u, z = sin t sin u,
    // with 2 qwp1 = u + s, 2 hwp = u - t, 2 qwp2 = u - s
    double r1 = std::hypot(w, y);
    double r2 = std::hypot(x, z);
    double t = std::atan2(r2, r1);
    double s_ang = (r1 > 1e-300) ? std::atan2(y, -w) : 0.0;
    double u_ang = (r2 > 1e-300) ? std::atan2(z, -x) : 0.0;

    WaveplateDecomposition out;
    out.qwp1 = detail::mod_pi(0.5 * (u_ang + s_ang));
    out.hwp = detail::mod_pi(0.5 * (u_ang - t));
    out.qwp2 = detail::mod_pi(0.5 * (u_ang - s_ang));

    // derivative-free polish of the analytic seed; kept only if it helps
    auto residual = [&](const std::vector<double>& ang) {
        return operator_distance_up_to_phase(qwp(ang[2]) * hwp(ang[1]) * qwp(ang[0]), u);
    };
    std::vector<double> seed{out.qwp1, out.hwp, out.qwp2};
    double seed_res = residual(seed);
    SimplexResult polished = nelder_mead(residual, seed, 1e-4, 60, 1e-16, 1e-12);
    if (polished.value < seed_res) {
        out.qwp1 = detail::mod_pi(polished.x[0]);
        out.hwp = detail::mod_pi(polished.x[1]);
        out.qwp2 = detail::mod_pi(polished.x[2]);
    }

    Unitary2 product = qwp(out.qwp2) * hwp(out.hwp) * qwp(out.qwp1);
    Complex tr = std::conj(u(0, 0)) * product(0, 0) + std::conj(u(0, 1)) * product(0, 1) +
                 std::conj(u(1, 0)) * product(1, 0) + std::conj(u(1, 1)) * product(1, 1);
    out.global_phase = std::arg(tr);
    return out;
}

}  // namespace qsd
