#include <catch2/catch_amalgamated.hpp>

#include "qsd/optimizer.hpp"
#include "qsd/rng.hpp"

using namespace qsd;

TEST_CASE("parameter chart covers the unitary group") {
    auto eng = make_engine(301);
    std::uniform_real_distribution<double> ang(-8.0, 8.0);
    for (int i = 0; i < 100; ++i) {
        UnitaryParams p{ang(eng), ang(eng), ang(eng), ang(eng)};
        Unitary2 u = p.to_unitary();  // construction asserts unitarity
        UnitaryParams q = UnitaryParams::from_unitary(u);
        Unitary2 v = q.to_unitary();
        double d = 0.0;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) d = std::max(d, std::abs(u(r, c) - v(r, c)));
        CHECK(d < 1e-12);
    }
    for (int i = 0; i < 100; ++i) {
        Unitary2 u = haar_unitary(eng);
        Unitary2 v = UnitaryParams::from_unitary(u).to_unitary();
        double d = 0.0;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) d = std::max(d, std::abs(u(r, c) - v(r, c)));
        CHECK(d < 1e-12);
    }
}

TEST_CASE("simplex search solves a smooth problem") {
    auto quad = [](const std::vector<double>& x) {
        double f = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double d = x[i] - (0.5 + double(i));
            f += (1.0 + double(i)) * d * d;
        }
        return f;
    };
    SimplexResult res = nelder_mead(quad, {0.0, 0.0, 0.0, 0.0}, 0.7, 500, 1e-14, 1e-9);
    CHECK(res.converged);
    CHECK(res.value < 1e-12);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(res.x[i] - (0.5 + double(i))) < 1e-6);
}

TEST_CASE("binary receivers invert the forward rotation") {
    auto eng = make_engine(307);
    std::uniform_real_distribution<double> unif(0.05, 0.95);
    for (int i = 0; i < 200; ++i) {
        PureState a = random_state(eng), b = random_state(eng);
        if (std::abs(inner_product(a, b)) > 1.0 - 1e-6) continue;
        double p1 = unif(eng), p2 = 1.0 - p1;
        auto [uf, ub] = binary_optimal(a, b, p1, p2);
        Unitary2 prod = uf * ub;
        CHECK(distance_up_to_phase(prod, Unitary2::identity()) < 1e-10);
        Ensemble pair({"a", "b"}, {a, b}, {p1, p2});
        NetworkConfig cfg{uf, ub, uniform_schedule(0.3), 12};
        auto cum = cumulative_correct(cfg, pair, SinkMap{});
        double bound = helstrom_bound(a, b, p1, p2);
        for (double c : cum) CHECK(std::abs(c - bound) < 1e-9);
    }
    CHECK_THROWS_AS(binary_optimal(basis_h(), basis_h(), 0.5, 0.5), std::domain_error);
}

TEST_CASE("canonical binary receiver is the hadamard") {
    Ensemble bin = binary_pair();
    auto [uf, ub] = binary_optimal(bin.state(0), bin.state(1), 0.5, 0.5);
    CHECK(distance_up_to_phase(uf, Unitary2::hadamard()) < 1e-12);
    CHECK(distance_up_to_phase(ub, Unitary2::hadamard()) < 1e-12);
}

TEST_CASE("gu receiver matches its published form") {
    auto [uf, ub] = gu_receiver();
    CHECK(distance_up_to_phase(uf, Unitary2::hadamard()) < 1e-15);
    double h = 0.5;
    Unitary2 expected(Complex(h, h), Complex(h, h), Complex(h, -h), Complex(-h, h));
    double d = 0.0;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) d = std::max(d, std::abs(ub(r, c) - expected(r, c)));
    CHECK(d < 1e-15);

    Unitary2 loop = uf * ub;
    Unitary2 fourth = loop * loop * loop * loop;
    CHECK(distance_up_to_phase(fourth, Unitary2::identity()) < 1e-12);
}

TEST_CASE("tetrad receiver entries sanitize cleanly") {
    RawMatrix2 uf_raw{Complex(0.953021, 0.0), Complex(0.302905, 0.0),
                      Complex(-0.302905, 0.0), Complex(0.953021, 0.0)};
    RawMatrix2 ub_raw{Complex(-0.674645, 0.216571), Complex(0.2118, -0.673121),
                      Complex(-0.2118, -0.673121), Complex(-0.674645, -0.216571)};
    double duf = Unitary2::unitarity_defect(uf_raw);
    double dub = Unitary2::unitarity_defect(ub_raw);
    CHECK(duf < 1e-5);
    CHECK(dub < 1e-5);

    auto [uf, ub] = tetrad_receiver();
    CHECK(Unitary2::unitarity_defect(uf.raw()) < 1e-12);
    CHECK(Unitary2::unitarity_defect(ub.raw()) < 1e-12);

    // the published digits land the loop within a few 1e-3 of the ideal
    Unitary2 target(std::sqrt(0.5), Complex(0.0, std::sqrt(0.5)),
                    Complex(0.0, std::sqrt(0.5)), std::sqrt(0.5));
    CHECK(distance_up_to_phase(uf * ub, target) < 3e-3);
}

TEST_CASE("margin objective scores the gu receiver at one half") {
    auto [uf, ub] = gu_receiver();
    NetworkConfig cfg{uf, ub, uniform_schedule(0.3), 12};
    CHECK(std::abs(detail::margin_objective(cfg, gu_set(), 4, 5) - 0.5) < 1e-9);
}

TEST_CASE("search recovers the optimal binary error") {
    ObjectiveSpec obj;
    obj.schedule = uniform_schedule(0.3);
    SearchSettings settings;
    settings.restarts = 8;
    settings.max_iters = 600;
    settings.seed = 5;
    OptimizeResult res = optimize(binary_pair(), obj, settings);
    CHECK(std::abs(res.objective_value - 0.146446609406726) < 1e-6);
    CHECK(res.converged);
    CHECK(res.restarts.size() == 8);
    for (const auto& r : res.restarts) CHECK(res.objective_value <= r.start_objective + 1e-15);
    CHECK_FALSE(res.trace.empty());
}

TEST_CASE("search is deterministic for a fixed seed") {
    ObjectiveSpec obj;
    obj.schedule = uniform_schedule(0.3);
    SearchSettings settings;
    settings.restarts = 6;
    settings.max_iters = 200;
    settings.seed = 17;
    OptimizeResult a = optimize(gu_set(), obj, settings);
    OptimizeResult b = optimize(gu_set(), obj, settings);
    settings.threads = 4;
    OptimizeResult c = optimize(gu_set(), obj, settings);
    CHECK(a.objective_value == b.objective_value);
    CHECK(a.objective_value == c.objective_value);
    for (int r = 0; r < 2; ++r)
        for (int col = 0; col < 2; ++col) {
            CHECK(a.u_forward(r, col) == c.u_forward(r, col));
            CHECK(a.u_backward(r, col) == c.u_backward(r, col));
        }
    CHECK(std::abs(a.objective_value - 0.5) < 1e-6);  // flat optimum for the gu set
}

TEST_CASE("margin search finds a half-margin receiver for the gu set") {
    ObjectiveSpec obj;
    obj.variant = ObjectiveSpec::Variant::bin_assignment_margin;
    obj.schedule = uniform_schedule(0.3);
    obj.bins_window = 4;
    SearchSettings settings;
    settings.restarts = 24;
    settings.max_iters = 500;
    settings.seed = 11;
    OptimizeResult res = optimize(gu_set(), obj, settings);
    CHECK(res.objective_value > 0.5 - 1e-6);
    NetworkConfig cfg{res.u_forward, res.u_backward, obj.schedule, obj.max_loops};
    OutcomeTable t = make_outcome_table(cfg, gu_set());
    double err = single_copy_error(t, gu_set().priors(), build_map_rule(t, gu_set().priors()));
    CHECK(std::abs(err - 0.5) < 1e-6);
}

TEST_CASE("search settings are validated") {
    ObjectiveSpec obj;
    obj.schedule = uniform_schedule(0.3);
    SearchSettings s;
    s.restarts = 0;
    CHECK_THROWS_AS(optimize(binary_pair(), obj, s), std::invalid_argument);

    ObjectiveSpec bad = obj;
    bad.variant = ObjectiveSpec::Variant::bin_assignment_margin;
    bad.bins_window = 2;
    CHECK_THROWS_AS(optimize(gu_set(), bad, SearchSettings{}), std::invalid_argument);

    ObjectiveSpec sink = obj;
    sink.margin_sink = 4;
    CHECK_THROWS_AS(optimize(gu_set(), sink, SearchSettings{}), std::invalid_argument);
}
