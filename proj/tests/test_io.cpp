#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "qsd/ensembles.hpp"
#include "qsd/io.hpp"
#include "qsd/network.hpp"
#include "qsd/optimizer.hpp"
#include "qsd/rng.hpp"

using namespace qsd;
using io::json;

TEST_CASE("format_g9 keeps nine significant digits") {
    CHECK(io::format_g9(0.8535533905932738) == "0.853553391");
    CHECK(io::format_g9(1.0) == "1");
    CHECK(io::format_g9(0.1) == "0.1");
    CHECK(io::format_g9(-2.5e-13) == "-2.5e-13");
    CHECK(io::format_g9(0.0) == "0");
}

TEST_CASE("state json round trip") {
    Ensemble tetrad = tetrad_set();
    for (std::size_t i = 0; i < tetrad.size(); ++i) {
        const PureState& s = tetrad.state(i);
        json j = json::parse(io::state_to_json(s).dump());
        PureState back = io::state_from_json(j);
        CHECK(back.a0() == s.a0());
        CHECK(back.a1() == s.a1());
    }

    CHECK_THROWS_AS(io::state_from_json(json{{"a0", {1.0, 0.0}}}), ConfigError);
    CHECK_THROWS_MATCHES(
        io::state_from_json(json{{"a0", {1.0, 0.0}}, {"a1", {0.0, 0.0}}, {"a2", {0.0, 0.0}}}),
        ConfigError, Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("a2")));
    CHECK_THROWS_AS(io::state_from_json(json{{"a0", {1.0, 0.0}}, {"a1", "x"}}), ConfigError);
    // norm violation surfaces as a config error
    CHECK_THROWS_AS(io::state_from_json(json{{"a0", {0.9, 0.0}}, {"a1", {0.0, 0.0}}}),
                    ConfigError);
    CHECK_THROWS_AS(io::state_from_json(json::array({1, 2})), ConfigError);
}

TEST_CASE("unitary json round trip") {
    auto [gu_f, gu_b] = gu_receiver();
    auto eng = make_engine(17);
    std::vector<Unitary2> samples = {Unitary2::hadamard(), Unitary2::identity(), gu_f, gu_b,
                                     haar_unitary(eng), haar_unitary(eng)};
    for (const auto& u : samples) {
        json j = json::parse(io::unitary_to_json(u).dump());
        Unitary2 back = io::unitary_from_json(j);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) CHECK(back(r, c) == u(r, c));
    }

    json bad = io::unitary_to_json(Unitary2::hadamard());
    bad["m"][0] = json::array({2.0, 0.0});  // not unitary
    CHECK_THROWS_AS(io::unitary_from_json(bad), ConfigError);
    bad = io::unitary_to_json(Unitary2::hadamard());
    bad["m"].erase(3);
    CHECK_THROWS_AS(io::unitary_from_json(bad), ConfigError);
    bad = io::unitary_to_json(Unitary2::hadamard());
    bad["extra"] = 1;
    CHECK_THROWS_AS(io::unitary_from_json(bad), ConfigError);
}

TEST_CASE("schedule json round trip") {
    for (const ExtractionSchedule& s : {uniform_schedule(0.25), experimental_schedule()}) {
        json j = json::parse(io::schedule_to_json(s).dump());
        ExtractionSchedule back = io::schedule_from_json(j);
        CHECK(back.default_prob == s.default_prob);
        CHECK(back.first_step_override == s.first_step_override);
        CHECK(back.first_step_discarded == s.first_step_discarded);
    }

    CHECK(io::schedule_to_json(uniform_schedule(0.25))["first_step_override"].is_null());
    CHECK_THROWS_AS(io::schedule_from_json(json{{"default_prob", 1.5}}), ConfigError);
    CHECK_THROWS_AS(io::schedule_from_json(json{{"default_prob", 0.3}, {"steps", 4}}),
                    ConfigError);
}

TEST_CASE("ensemble json round trip") {
    for (const char* name : {"binary", "gu", "tetrad"}) {
        Ensemble e = ensemble_by_name(name);
        json j = json::parse(io::ensemble_to_json(e).dump());
        Ensemble back = io::ensemble_from_json(j);
        REQUIRE(back.size() == e.size());
        for (std::size_t i = 0; i < e.size(); ++i) {
            CHECK(back.label(i) == e.label(i));
            CHECK(back.prior(i) == e.prior(i));
            CHECK(back.state(i).a0() == e.state(i).a0());
            CHECK(back.state(i).a1() == e.state(i).a1());
        }
    }

    json j = io::ensemble_to_json(binary_pair());
    j["priors"][0] = 0.9;  // no longer sums to one
    CHECK_THROWS_AS(io::ensemble_from_json(j), ConfigError);
    j = io::ensemble_to_json(binary_pair());
    j.erase("labels");
    CHECK_THROWS_AS(io::ensemble_from_json(j), ConfigError);
}

TEST_CASE("distribution json round trip") {
    NetworkConfig config{Unitary2::hadamard(), Unitary2::hadamard(), experimental_schedule(), 6};
    TimeBinnedDistribution d = evolve(config, binary_pair().state(0));
    json j = json::parse(io::distribution_to_json(d).dump());
    TimeBinnedDistribution back = io::distribution_from_json(j);
    CHECK(back.first_bin_index == d.first_bin_index);
    CHECK(back.residual == d.residual);
    CHECK(back.discarded == d.discarded);
    REQUIRE(back.bins.size() == d.bins.size());
    for (std::size_t i = 0; i < d.bins.size(); ++i) {
        CHECK(back.bins[i].p5 == d.bins[i].p5);
        CHECK(back.bins[i].p6 == d.bins[i].p6);
    }
    CHECK_THROWS_AS(io::distribution_from_json(json{{"bins", json::array()}, {"tail", 1}}),
                    ConfigError);
}

TEST_CASE("distribution csv round trip is byte stable") {
    NetworkConfig config{Unitary2::hadamard(), Unitary2::hadamard(), experimental_schedule(), 6};
    TimeBinnedDistribution d = evolve(config, binary_pair().state(1));

    std::ostringstream first;
    io::write_distribution_csv(first, d);
    std::istringstream in(first.str());
    TimeBinnedDistribution back = io::read_distribution_csv(in);
    std::ostringstream second;
    io::write_distribution_csv(second, back);
    CHECK(first.str() == second.str());
    CHECK(back.first_bin_index == 2);

    std::istringstream junk_header("# speed 3\nbin,p5,p6\n");
    CHECK_THROWS_AS(io::read_distribution_csv(junk_header), ConfigError);
    std::istringstream wrong_cols("p5,p6\n1,0.5,0.5\n");
    CHECK_THROWS_AS(io::read_distribution_csv(wrong_cols), ConfigError);
    std::istringstream short_row("bin,p5,p6\n1,0.5\n");
    CHECK_THROWS_AS(io::read_distribution_csv(short_row), ConfigError);
    std::istringstream empty("");
    CHECK_THROWS_AS(io::read_distribution_csv(empty), ConfigError);
}

TEST_CASE("record csv round trip is byte stable") {
    EventRecord rec;
    rec.cells = {{5, 2}, {6, 2}, {5, 3}, {6, 3}};
    rec.counts = {3.0, 0.0, 1.25, 7.0};
    rec.duration = 2.5;
    rec.raw = false;
    rec.seed = 90210;
    rec.state_label = "psi2";
    rec.clamped_cells = 1;

    std::ostringstream first;
    io::write_record_csv(first, rec);
    std::istringstream in(first.str());
    EventRecord back = io::read_record_csv(in);
    std::ostringstream second;
    io::write_record_csv(second, back);
    CHECK(first.str() == second.str());
    CHECK(back.cells == rec.cells);
    CHECK(back.counts == rec.counts);
    CHECK(back.duration == rec.duration);
    CHECK_FALSE(back.raw);
    CHECK(back.seed == rec.seed);
    CHECK(back.state_label == rec.state_label);
    CHECK(back.clamped_cells == rec.clamped_cells);

    // label header is omitted when empty
    rec.state_label.clear();
    std::ostringstream unlabeled;
    io::write_record_csv(unlabeled, rec);
    CHECK(unlabeled.str().find("# state") == std::string::npos);

    std::istringstream junk("# weight 2\nsink,bin,count\n");
    CHECK_THROWS_AS(io::read_record_csv(junk), ConfigError);
}

TEST_CASE("table, scaling, curve, trace and cumulative writers") {
    NetworkConfig config{Unitary2::hadamard(), Unitary2::hadamard(), uniform_schedule(0.5), 2};
    OutcomeTable table = make_outcome_table(config, binary_pair());
    std::ostringstream table_out;
    io::write_outcome_table_csv(table_out, table, {"psi1", "psi2"});
    std::string table_csv = table_out.str();
    CHECK(table_csv.find("state,sink5_bin1,sink6_bin1,sink5_bin2,sink6_bin2\n") == 0);
    CHECK(table_csv.find("\npsi1,") != std::string::npos);
    CHECK(table_csv.find("\npsi2,") != std::string::npos);

    std::ostringstream scaling_out;
    io::write_scaling_csv(scaling_out, {1, 2},
                          {{0.5, 0.0, true, false}, {0.25, 0.01, false, false}});
    CHECK(scaling_out.str() == "m,error,std_error,exact\n1,0.5,0,1\n2,0.25,0.01,0\n");

    std::ostringstream curve_out;
    io::write_error_curve_csv(curve_out, {{4, 3.5, 0.125, 0.5}});
    CHECK(curve_out.str() == "k,mean_copies,p_err,std_error\n4,3.5,0.125,0.5\n");

    std::ostringstream trace_out;
    io::write_trace_csv(trace_out, {{0, 0, 1.0}, {0, 1, 0.75}});
    CHECK(trace_out.str() == "restart,iteration,objective\n0,0,1\n0,1,0.75\n");

    std::ostringstream cumulative_out;
    io::write_cumulative_csv(cumulative_out, 2, {0.853553391, 0.853553391});
    CHECK(cumulative_out.str() ==
          "bin,cumulative_correct\n2,0.853553391\n3,0.853553391\n");
}

TEST_CASE("receiver json round trip") {
    Ensemble pair = binary_pair();
    ObjectiveSpec objective;
    objective.schedule = uniform_schedule(0.3);
    SearchSettings settings;
    settings.restarts = 2;
    settings.max_iters = 60;
    settings.seed = 3;
    OptimizeResult result = optimize(pair, objective, settings);

    json j = json::parse(io::receiver_to_json(result).dump());
    auto [uf, ub] = io::receiver_from_json(j);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
            CHECK(uf(r, c) == result.u_forward(r, c));
            CHECK(ub(r, c) == result.u_backward(r, c));
        }
    CHECK(j["variant"] == "map_error");
    CHECK(j["restarts"] == 2);

    j.erase("u_backward");
    CHECK_THROWS_AS(io::receiver_from_json(j), ConfigError);
    j["u_backward"] = io::unitary_to_json(Unitary2::identity());
    j["comment"] = "hi";
    CHECK_THROWS_AS(io::receiver_from_json(j), ConfigError);
}
