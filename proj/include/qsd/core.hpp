#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace qsd {

using Complex = std::complex<double>;

using RawMatrix2 = std::array<Complex, 4>;  // row-major

namespace detail {

inline bool is_finite(Complex z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}

}  // namespace detail

/// Normalized single-qubit pure state. Construction rejects non-normalized
/// or non-finite amplitudes; use PureState::normalized to rescale explicitly.
class PureState {
public:
    PureState(Complex a0, Complex a1) : a0_(a0), a1_(a1) {
        if (!detail::is_finite(a0) || !detail::is_finite(a1))
            throw std::invalid_argument("PureState: non-finite amplitude");
        double n2 = std::norm(a0) + std::norm(a1);
        if (std::abs(n2 - 1.0) > 1e-12)
            throw std::invalid_argument("PureState: squared norm " + std::to_string(n2) +
                                        " deviates from 1 beyond 1e-12");
    }

    static PureState normalized(Complex a0, Complex a1) {
        if (!detail::is_finite(a0) || !detail::is_finite(a1))
            throw std::invalid_argument("PureState: non-finite amplitude");
        double n = std::sqrt(std::norm(a0) + std::norm(a1));
        if (n < 1e-300)
            throw std::invalid_argument("PureState: cannot normalize zero vector");
        return PureState(a0 / n, a1 / n);
    }

    Complex a0() const { return a0_; }
    Complex a1() const { return a1_; }

private:
    Complex a0_, a1_;
};

inline PureState basis_h() { return PureState(1.0, 0.0); }
inline PureState basis_v() { return PureState(0.0, 1.0); }

inline Complex inner_product(const PureState& a, const PureState& b) {
    return std::conj(a.a0()) * b.a0() + std::conj(a.a1()) * b.a1();
}

/// 2x2 unitary, row-major. Construction enforces U†U = I within 1e-10
/// entrywise; matrices that fail must go through nearest_unitary explicitly.
class Unitary2 {
public:
    explicit Unitary2(const RawMatrix2& m) : m_(m) {
        for (Complex z : m)
            if (!detail::is_finite(z))
                throw std::invalid_argument("Unitary2: non-finite entry");
        double defect = unitarity_defect(m);
        if (defect > 1e-10)
            throw std::invalid_argument("Unitary2: unitarity defect " +
                                        std::to_string(defect) + " exceeds 1e-10");
    }

    Unitary2(Complex m00, Complex m01, Complex m10, Complex m11)
        : Unitary2(RawMatrix2{m00, m01, m10, m11}) {}

    /// max entrywise |M†M - I|
    static double unitarity_defect(const RawMatrix2& m) {
        Complex g00 = std::conj(m[0]) * m[0] + std::conj(m[2]) * m[2];
        Complex g01 = std::conj(m[0]) * m[1] + std::conj(m[2]) * m[3];
        Complex g11 = std::conj(m[1]) * m[1] + std::conj(m[3]) * m[3];
        double d = std::abs(g00 - 1.0);
        d = std::max(d, std::abs(g11 - 1.0));
        d = std::max(d, std::abs(g01));
        return d;
    }

    Complex operator()(int r, int c) const { return m_[2 * r + c]; }
    const RawMatrix2& raw() const { return m_; }

    Unitary2 adjoint() const {
        return Unitary2(std::conj(m_[0]), std::conj(m_[2]),
                        std::conj(m_[1]), std::conj(m_[3]));
    }

    Complex trace() const { return m_[0] + m_[3]; }
    Complex det() const { return m_[0] * m_[3] - m_[1] * m_[2]; }

    friend Unitary2 operator*(const Unitary2& a, const Unitary2& b) {
        return Unitary2(a.m_[0] * b.m_[0] + a.m_[1] * b.m_[2],
                        a.m_[0] * b.m_[1] + a.m_[1] * b.m_[3],
                        a.m_[2] * b.m_[0] + a.m_[3] * b.m_[2],
                        a.m_[2] * b.m_[1] + a.m_[3] * b.m_[3]);
    }

    static Unitary2 identity() { return Unitary2(1.0, 0.0, 0.0, 1.0); }

    static Unitary2 hadamard() {
        double s = std::sqrt(0.5);
        return Unitary2(s, s, s, -s);
    }

private:
    RawMatrix2 m_;
};

inline PureState apply_unitary(const Unitary2& u, const PureState& s) {
    return PureState::normalized(u(0, 0) * s.a0() + u(0, 1) * s.a1(),
                                 u(1, 0) * s.a0() + u(1, 1) * s.a1());
}

namespace detail {

struct HermEigen2 {
    double lo, hi;                    // eigenvalues, lo <= hi
    std::array<Complex, 2> vec_lo, vec_hi;  // orthonormal eigenvectors
};

/// Eigensystem of the hermitian matrix [[a, b], [conj(b), d]], a and d real.
inline HermEigen2 herm_eigensystem(double a, Complex b, double d) {
    HermEigen2 out;
    double half_tr = 0.5 * (a + d);
    double disc = std::hypot(0.5 * (a - d), std::abs(b));
    out.lo = half_tr - disc;
    out.hi = half_tr + disc;
    if (std::abs(b) == 0.0) {
        if (a >= d) {
            out.vec_hi = {1.0, 0.0};
            out.vec_lo = {0.0, 1.0};
        } else {
            out.vec_hi = {0.0, 1.0};
            out.vec_lo = {1.0, 0.0};
        }
        return out;
    }
    // (b, hi - a) and (lo - d, conj(b)) are parallel; pick the larger for stability
    std::array<Complex, 2> v1 = {b, Complex(out.hi - a, 0.0)};
    std::array<Complex, 2> v2 = {Complex(out.hi - d, 0.0), std::conj(b)};
    double n1 = std::norm(v1[0]) + std::norm(v1[1]);
    double n2 = std::norm(v2[0]) + std::norm(v2[1]);
    std::array<Complex, 2> v = (n1 >= n2) ? v1 : v2;
    double n = std::sqrt((n1 >= n2) ? n1 : n2);
    out.vec_hi = {v[0] / n, v[1] / n};
    out.vec_lo = {-std::conj(out.vec_hi[1]), std::conj(out.vec_hi[0])};
    return out;
}

}  // namespace detail

/// Closest unitary in Frobenius norm (unitary factor of the polar
/// decomposition). Throws for singular or non-finite input.
inline Unitary2 nearest_unitary(const RawMatrix2& m) {
    for (Complex z : m)
        if (!detail::is_finite(z))
            throw std::invalid_argument("nearest_unitary: non-finite entry");
    // H = M†M, then U = M H^{-1/2}
    double h00 = std::norm(m[0]) + std::norm(m[2]);
    double h11 = std::norm(m[1]) + std::norm(m[3]);
    Complex h01 = std::conj(m[0]) * m[1] + std::conj(m[2]) * m[3];
    auto es = detail::herm_eigensystem(h00, h01, h11);
    if (!(es.lo > 0.0) || es.lo <= 1e-24 * es.hi)
        throw std::invalid_argument("nearest_unitary: singular input");
    double ihi = 1.0 / std::sqrt(es.hi);
    double ilo = 1.0 / std::sqrt(es.lo);
    // H^{-1/2} = ihi * Phi + ilo * Plo with projectors built from eigenvectors
    auto proj = [](const std::array<Complex, 2>& v, int r, int c) {
        return v[r] * std::conj(v[c]);
    };
    RawMatrix2 s;  // H^{-1/2}
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
            s[2 * r + c] = ihi * proj(es.vec_hi, r, c) + ilo * proj(es.vec_lo, r, c);
    RawMatrix2 u;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
            u[2 * r + c] = m[2 * r + 0] * s[0 + c] + m[2 * r + 1] * s[2 + c];
    return Unitary2(u);
}

/// Optimal success probability for discriminating psi1 vs psi2 with
/// priors p1, p2: (1 + sqrt(1 - 4 p1 p2 |<psi1|psi2>|^2)) / 2.
inline double helstrom_bound(const PureState& psi1, const PureState& psi2,
                             double p1, double p2) {
    if (!(p1 >= 0.0) || !(p2 >= 0.0) || std::abs(p1 + p2 - 1.0) > 1e-12)
        throw std::invalid_argument("helstrom_bound: priors must be nonnegative and sum to 1");
    double ov2 = std::norm(inner_product(psi1, psi2));
    double rad = 1.0 - 4.0 * p1 * p2 * ov2;
    if (rad < 0.0) rad = 0.0;  // guards rounding at |overlap| = 1, p1 = p2
    return 0.5 * (1.0 + std::sqrt(rad));
}

/// min over global phase of the max entrywise |A - e^{i phi} B|.
/// The minimizing phase for the Frobenius norm, phi = arg tr(B†A), is used;
/// for 2x2 unitaries it is within rounding of the entrywise optimum.
inline double distance_up_to_phase(const Unitary2& a, const Unitary2& b) {
    Complex t = 0.0;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
            t += std::conj(b(r, c)) * a(r, c);
    Complex phase = (std::abs(t) < 1e-300) ? Complex(1.0, 0.0) : t / std::abs(t);
    double d = 0.0;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
            d = std::max(d, std::abs(a(r, c) - phase * b(r, c)));
    return d;
}

/// Largest singular value of A - e^{i phi} B at the Frobenius-optimal phase.
inline double operator_distance_up_to_phase(const Unitary2& a, const Unitary2& b) {
    Complex t = 0.0;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
            t += std::conj(b(r, c)) * a(r, c);
    Complex phase = (std::abs(t) < 1e-300) ? Complex(1.0, 0.0) : t / std::abs(t);
    RawMatrix2 d;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
            d[2 * r + c] = a(r, c) - phase * b(r, c);
    double h00 = std::norm(d[0]) + std::norm(d[2]);
    double h11 = std::norm(d[1]) + std::norm(d[3]);
    Complex h01 = std::conj(d[0]) * d[1] + std::conj(d[2]) * d[3];
    auto es = detail::herm_eigensystem(h00, h01, h11);
    return std::sqrt(std::max(es.hi, 0.0));
}

}  // namespace qsd
