#pragma once

#include <cstdint>
#include <random>

#include "qsd/core.hpp"

namespace qsd {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stream seed for work unit `index` under master seed `seed`. Every
/// parallel or repeated sampling task derives its engine this way, so
/// results do not depend on thread count or evaluation order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

inline PureState random_state(std::mt19937_64& eng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Complex a0(g(eng), g(eng)), a1(g(eng), g(eng));
    return PureState::normalized(a0, a1);
}

/// Haar-distributed U(2): QR of a complex Ginibre matrix with the phase
/// convention fixed by the R diagonal.
inline Unitary2 haar_unitary(std::mt19937_64& eng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Complex z0(g(eng), g(eng)), z1(g(eng), g(eng));
    double n = std::sqrt(std::norm(z0) + std::norm(z1));
    while (n < 1e-12) {
        z0 = Complex(g(eng), g(eng));
        z1 = Complex(g(eng), g(eng));
        n = std::sqrt(std::norm(z0) + std::norm(z1));
    }
    Complex q00 = z0 / n, q10 = z1 / n;
    // second Ginibre column, Gram-Schmidt against the first
    Complex w0(g(eng), g(eng)), w1(g(eng), g(eng));
    Complex c = std::conj(q00) * w0 + std::conj(q10) * w1;
    w0 -= c * q00;
    w1 -= c * q10;
    double m = std::sqrt(std::norm(w0) + std::norm(w1));
    while (m < 1e-12) {
        w0 = Complex(g(eng), g(eng));
        w1 = Complex(g(eng), g(eng));
        c = std::conj(q00) * w0 + std::conj(q10) * w1;
        w0 -= c * q00;
        w1 -= c * q10;
        m = std::sqrt(std::norm(w0) + std::norm(w1));
    }
    Complex q01 = w0 / m, q11 = w1 / m;
    // multiply columns by the phases of the R diagonal (Mezzadri correction)
    std::uniform_real_distribution<double> u(0.0, 2.0 * 3.14159265358979323846);
    Complex p0 = std::polar(1.0, u(eng));
    Complex p1 = std::polar(1.0, u(eng));
    return Unitary2(q00 * p0, q01 * p1, q10 * p0, q11 * p1);
}

}  // namespace qsd
