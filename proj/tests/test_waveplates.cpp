#include <catch2/catch_amalgamated.hpp>

#include "qsd/optimizer.hpp"
#include "qsd/rng.hpp"
#include "qsd/waveplates.hpp"

using namespace qsd;

namespace {

Unitary2 reconstruct(const WaveplateDecomposition& w) {
    return qwp(w.qwp2) * hwp(w.hwp) * qwp(w.qwp1);
}

double entrywise_distance(const Unitary2& a, const Unitary2& b) {
    double d = 0.0;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) d = std::max(d, std::abs(a(r, c) - b(r, c)));
    return d;
}

}  // namespace

TEST_CASE("waveplate matrices follow the symmetric convention") {
    Unitary2 w0 = waveplate(0.0, 1.1);
    CHECK(std::abs(w0(0, 0) - std::polar(1.0, -0.55)) < 1e-15);
    CHECK(std::abs(w0(1, 1) - std::polar(1.0, 0.55)) < 1e-15);
    CHECK(std::abs(w0(0, 1)) < 1e-15);

    auto eng = make_engine(401);
    std::uniform_real_distribution<double> ang(0.0, 3.2);
    for (int i = 0; i < 25; ++i) {
        double th = ang(eng);
        Unitary2 h2 = hwp(th) * hwp(th);
        CHECK(distance_up_to_phase(h2, Unitary2::identity()) < 1e-14);
        Unitary2 q2 = qwp(th) * qwp(th);
        CHECK(entrywise_distance(q2, hwp(th)) < 1e-14);
        CHECK(entrywise_distance(waveplate(th + std::numbers::pi, 0.7), waveplate(th, 0.7)) < 1e-14);
    }
}

TEST_CASE("decomposition reconstructs canonical receivers exactly") {
    auto [gu_f, gu_b] = gu_receiver();
    auto [tet_f, tet_b] = tetrad_receiver();
    for (const Unitary2& u : {Unitary2::identity(), Unitary2::hadamard(), gu_f, gu_b,
                              tet_f, tet_b}) {
        WaveplateDecomposition w = waveplate_decomposition(u);
        CHECK(w.qwp1 >= 0.0);
        CHECK(w.qwp1 < std::numbers::pi);
        CHECK(w.hwp >= 0.0);
        CHECK(w.hwp < std::numbers::pi);
        CHECK(w.qwp2 >= 0.0);
        CHECK(w.qwp2 < std::numbers::pi);
        Unitary2 g = reconstruct(w);
        CHECK(operator_distance_up_to_phase(g, u) < 1e-10);
        // the reported phase makes the match entrywise, not just projective
        Complex ph = std::polar(1.0, w.global_phase);
        Unitary2 target(ph * u(0, 0), ph * u(0, 1), ph * u(1, 0), ph * u(1, 1));
        CHECK(entrywise_distance(g, target) < 1e-10);
    }
}

TEST_CASE("decomposition covers haar-random targets") {
    auto eng = make_engine(409);
    double worst = 0.0;
    for (int i = 0; i < 300; ++i) {
        Unitary2 u = haar_unitary(eng);
        WaveplateDecomposition w = waveplate_decomposition(u);
        worst = std::max(worst, operator_distance_up_to_phase(reconstruct(w), u));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("axis-aligned targets hit degenerate branches") {
    // diagonal and antidiagonal targets exercise the r1 ~ 0 / r2 ~ 0 limbs
    std::vector<Unitary2> targets{
        Unitary2(std::polar(1.0, 0.3), 0.0, 0.0, std::polar(1.0, -0.3)),
        Unitary2(0.0, std::polar(1.0, 0.9), std::polar(1.0, -0.9), 0.0),
        Unitary2(0.0, Complex(0.0, 1.0), Complex(0.0, 1.0), 0.0),
        Unitary2(-1.0, 0.0, 0.0, -1.0)};
    for (const Unitary2& u : targets) {
        WaveplateDecomposition w = waveplate_decomposition(u);
        CHECK(operator_distance_up_to_phase(reconstruct(w), u) < 1e-10);
    }
}
