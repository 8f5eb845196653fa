#include <doctest.h>

#include <cmath>
#include <fstream>

#include "saup/eval.hpp"
#include "saup/rng.hpp"
#include "saup/synth.hpp"
#include "util.hpp"

using namespace saup;

namespace {

double pairwise_auroc(const std::vector<double>& s, const std::vector<int>& y) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (y[i] == 1 && y[j] == 0) {
                num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
                den += 1.0;
            }
    return num / den;
}

void random_instance(Rng& rng, std::vector<double>& s, std::vector<int>& y) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 200));
    s.resize(n);
    y.resize(n);
    const int levels = static_cast<int>(rng.uniform_int(2, 20));  // coarse grid forces ties
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = rng.bernoulli(0.5) ? static_cast<double>(rng.uniform_int(0, levels)) / levels : rng.uniform();
        y[i] = rng.bernoulli(0.4) ? 1 : 0;
    }
    y[0] = 0;
    y[1] = 1;
}

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return Errc::Io;
}

Dataset separable() { return load_dataset(test::fixture("separable.jsonl")); }

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("auroc examples") {
    std::vector<double> s1{0.9, 0.8, 0.2, 0.1};
    std::vector<int> y1{1, 1, 0, 0};
    CHECK(auroc(s1, y1) == 1.0);
    std::vector<double> flat(5, 0.3);
    std::vector<int> y2{1, 0, 1, 0, 0};
    CHECK(auroc(flat, y2) == 0.5);
    std::vector<double> s3{0.9, 0.4, 0.6, 0.1};
    std::vector<int> y3{1, 0, 0, 1};
    CHECK(auroc(s3, y3) == 0.5);
}

TEST_CASE("auroc errors") {
    std::vector<double> s{0.1, 0.2};
    std::vector<int> same{1, 1}, bad{0, 2}, short_{1};
    CHECK(code_of([&] { auroc(s, same); }) == Errc::SingleClass);
    CHECK(code_of([&] { auroc(s, short_); }) == Errc::LengthMismatch);
    CHECK(code_of([&] { auroc(s, bad); }) == Errc::OutOfRange);
}

TEST_CASE("auroc agrees with the pairwise count") {
    Rng rng(77);
    std::vector<double> s;
    std::vector<int> y;
    for (int trial = 0; trial < 200; ++trial) {
        random_instance(rng, s, y);
        CHECK(std::abs(auroc(s, y) - pairwise_auroc(s, y)) <= 1e-12);
    }
}

TEST_CASE("auroc label flip and monotone transforms") {
    Rng rng(78);
    std::vector<double> s;
    std::vector<int> y;
    for (int trial = 0; trial < 100; ++trial) {
        random_instance(rng, s, y);
        std::vector<int> flipped(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) flipped[i] = 1 - y[i];
        CHECK(auroc(s, y) + auroc(s, flipped) == 1.0);
        std::vector<double> t(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) t[i] = std::exp(3.0 * s[i]) - 7.0;
        CHECK(auroc(t, y) == auroc(s, y));
    }
}

TEST_CASE("separable fixture scores 1.0 and a constant method scores 0.5") {
    Dataset d = separable();
    StubScorer stub;
    std::vector<MethodConfig> methods;
    for (const char* name : {"rms", "saup-d", "saup-p", "saup-pd", "last-step", "semantic-entropy", "p-true"})
        methods.push_back(*method_preset(name));
    EvalReport r = evaluate(d, methods, stub);
    CHECK(r.summary.n_trajectories == 8);
    CHECK(r.summary.n_incorrect == 4);
    for (const char* name : {"rms", "saup-d", "saup-p", "saup-pd", "last-step", "semantic-entropy"})
        CHECK_MESSAGE(r.method(name).auroc == 1.0, name);
    CHECK(r.method("p-true").auroc == 0.5);
    CHECK_THROWS_AS(r.method("nope"), Error);
}

TEST_CASE("unlabeled trajectories are scored but excluded") {
    Dataset d = separable();
    d.trajectories[0].correct.reset();
    StubScorer stub;
    std::vector<MethodConfig> methods{*method_preset("rms")};
    EvalReport r = evaluate(d, methods, stub);
    CHECK(r.method("rms").n_labeled == 7);
    CHECK(r.method("rms").records.size() == 8);
    CHECK_FALSE(r.method("rms").records[0].correct.has_value());
}

TEST_CASE("evaluate does not depend on the job count") {
    SynthConfig cfg;
    cfg.n_trajectories = 200;
    Dataset d = generate(cfg).dataset;
    StubScorer stub;
    std::vector<MethodConfig> methods{*method_preset("rms"), *method_preset("saup-pd")};
    auto a = report_to_json(evaluate(d, methods, stub, 1)).dump();
    auto b = report_to_json(evaluate(d, methods, stub, 4)).dump();
    CHECK(a == b);
}

TEST_CASE("missing fields are reported") {
    Dataset d = separable();
    d.trajectories[2].steps[0].samples.reset();
    MethodConfig se = *method_preset("semantic-entropy");
    CHECK_NOTHROW(check_method_requirements(d, se));  // only the last step matters
    MethodConfig all = se;
    all.aggregation = Aggregation::Rms;
    CHECK(code_of([&] { check_method_requirements(d, all); }) == Errc::FieldUnavailable);
}

TEST_CASE("method configs") {
    for (const auto& name : method_preset_names()) {
        auto m = method_preset(name);
        REQUIRE(m);
        CHECK(m->name == name);
        MethodConfig back = method_from_json(method_to_json(*m));
        CHECK(back.estimator == m->estimator);
        CHECK(back.aggregation == m->aggregation);
        CHECK(back.surrogate == m->surrogate);
    }
    MethodConfig m = method_from_json(nlohmann::json::parse(
        R"({"preset":"saup-pd","name":"mine","alpha":0.25,"stabilizer":"log1p","distance":{"mode":"reciprocal","window":"current_step"}})"));
    CHECK(m.name == "mine");
    CHECK(m.surrogate == Surrogate::Hybrid);
    CHECK(m.alpha == 0.25);
    CHECK(m.stabilizer == Stabilizer::Log1p);
    CHECK(m.distance.mode == DistanceMode::Reciprocal);
    CHECK(m.distance.window == ContextWindow::CurrentStep);

    CHECK(code_of([] { method_from_json("bogus"); }) == Errc::InvalidConfig);
    CHECK(method_from_json(nlohmann::json::parse(R"({"preset":"rms"})")).name == "rms");
    CHECK(code_of([] { method_from_json(nlohmann::json::parse(R"({"estimator":"p_true"})")); }) ==
          Errc::InvalidConfig);
    CHECK(code_of([] { method_from_json(nlohmann::json::parse(R"({"name":"x","surrogate":"magic"})")); }) ==
          Errc::InvalidConfig);
    CHECK(code_of([] { method_from_json(nlohmann::json::parse(R"({"name":"x","alpha":"high"})")); }) ==
          Errc::InvalidConfig);

    MethodConfig bad = *method_preset("saup-p");
    bad.aggregation = Aggregation::Arithmetic;
    CHECK(code_of([&] { validate_method(bad); }) == Errc::InvalidConfig);
    MethodConfig hmm = *method_preset("saup-hmmd");
    CHECK(code_of([&] { validate_method(hmm); }) == Errc::InvalidConfig);
    hmm.model = std::make_shared<ChmmModel>();
    hmm.obs_mode = ObservationMode::Sum;
    CHECK(code_of([&] { validate_method(hmm); }) == Errc::DimensionMismatch);
}

TEST_CASE("scatter export") {
    MethodResult r;
    r.records = {{"b", 4.0, false, 2}, {"a", 2.0, true, 3}};
    auto rows = export_scatter(r, ScatterNormalization::MinMax);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].id == "a");
    CHECK(rows[0].normalized_score == 0.0);
    CHECK(rows[1].normalized_score == 1.0);
    CHECK(rows[0].n_steps == 3);

    r.records = {{"c", 3.0, {}, 1}, {"a", 1.0, {}, 1}, {"b", 2.0, {}, 1}};
    rows = export_scatter(r, ScatterNormalization::MinMax);
    CHECK(rows[0].normalized_score == 0.0);
    CHECK(rows[1].normalized_score == 0.5);
    CHECK(rows[2].normalized_score == 1.0);
    CHECK(export_scatter(r, ScatterNormalization::None)[2].normalized_score == 3.0);

    r.records = {{"x", 7.0, {}, 1}, {"y", 7.0, {}, 1}};
    for (const auto& row : export_scatter(r, ScatterNormalization::MinMax)) CHECK(row.normalized_score == 0.0);

    CHECK(scatter_csv(export_scatter(r, ScatterNormalization::None)) ==
          "id,n_steps,normalized_score,correct\nx,1,7,\ny,1,7,\n");
}

TEST_CASE("report serialization") {
    Dataset d = separable();
    StubScorer stub;
    std::vector<MethodConfig> methods{*method_preset("rms"), *method_preset("p-true")};
    EvalReport r = evaluate(d, methods, stub);
    auto j = report_to_json(r);
    CHECK(j["schema"] == "saup-eval-report");
    CHECK(j["version"] == 1);
    EvalReport back = report_from_json(j);
    CHECK(report_to_json(back) == j);
    CHECK(report_table_csv(r) == "method,auroc,n\nrms,1,8\np-true,0.5,8\n");
    CHECK(format_sig9(1.0 / 3.0) == "0.333333333");
    CHECK(round_sig9(1.0 / 3.0) == 0.333333333);
    CHECK(format_sig9(123456789012.0) == "1.23456789e+11");
    j["version"] = 9;
    CHECK_THROWS_AS(report_from_json(j), Error);
}

}
