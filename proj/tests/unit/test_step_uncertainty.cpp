#include <doctest.h>

#include <cmath>
#include <set>

#include "saup/rng.hpp"
#include "saup/step_uncertainty.hpp"

using namespace saup;

namespace {

// mpmath, 30 digits
constexpr double kLn2 = 0.693147180559945309417232121458;
constexpr double kNe987 = 0.228393003636922807;
constexpr double kLik987 = 0.685179010910768421;
constexpr double kPred91 = 1.20397280432593599;
constexpr double kSe7525 = 0.562335144618808349;

TokenSequence seq(std::vector<double> lps) { return {"x", std::move(lps)}; }

std::vector<Sample> samples(std::initializer_list<std::pair<double, int>> xs) {
    std::vector<Sample> out;
    for (auto [lp, c] : xs) out.push_back({lp, c, std::nullopt});
    return out;
}

}  // namespace

TEST_SUITE("step_uncertainty") {

TEST_CASE("normalized entropy") {
    CHECK(normalized_entropy(seq({0, 0}), seq({})).value == 0.0);
    CHECK(std::abs(normalized_entropy(seq({std::log(0.5), std::log(0.5)}), seq({})).value - kLn2) < 1e-12);
    CHECK(std::abs(normalized_entropy(seq({std::log(0.9)}), seq({std::log(0.8), std::log(0.7)})).value - kNe987) <
          1e-12);
    CHECK_THROWS_AS(normalized_entropy(seq({}), seq({})), Error);
}

TEST_CASE("likelihood") {
    CHECK(likelihood_uncertainty(seq({0}), seq({})).value == 0.0);
    CHECK(std::abs(likelihood_uncertainty(seq({std::log(0.5)}), seq({std::log(0.5)})).value - 2 * kLn2) < 1e-12);
    CHECK(std::abs(likelihood_uncertainty(seq({std::log(0.9), std::log(0.8), std::log(0.7)}), seq({})).value -
                   kLik987) < 1e-12);
    try {
        likelihood_uncertainty(seq({}), seq({}));
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NoLogits);
    }
}

TEST_CASE("predictive entropy") {
    CHECK(predictive_entropy(samples({{0.0, 0}})).value == 0.0);
    CHECK(std::abs(predictive_entropy(samples({{std::log(0.5), 0}, {std::log(0.5), 1}})).value - kLn2) < 1e-12);
    CHECK(std::abs(predictive_entropy(samples({{std::log(0.9), 0}, {std::log(0.1), 1}})).value - kPred91) < 1e-12);
    try {
        predictive_entropy({});
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NoSamples);
    }
}

TEST_CASE("p_true") {
    CHECK(p_true_uncertainty(1.0).value == 0.0);
    CHECK(p_true_uncertainty(0.0).value == 1.0);
    CHECK(p_true_uncertainty(0.25).value == 0.75);
    for (double bad : {-0.1, 1.5, std::nan("")}) {
        try {
            p_true_uncertainty(bad);
            FAIL("no error");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::OutOfRange);
        }
    }
}

TEST_CASE("semantic entropy examples") {
    CHECK(std::abs(semantic_entropy(samples({{-1.0, 3}, {-2.0, 3}, {-0.5, 3}})).value) < 1e-15);
    CHECK(std::abs(semantic_entropy(samples({{std::log(0.3), 0}, {std::log(0.3), 1}})).value - kLn2) < 1e-12);
    CHECK(std::abs(semantic_entropy(samples({{std::log(0.75), 0}, {std::log(0.25), 1}})).value - kSe7525) < 1e-12);
    // Mass is what matters, not sample counts: two samples in cluster 0 split 0.75.
    CHECK(std::abs(semantic_entropy(samples({{std::log(0.375), 0}, {std::log(0.375), 0}, {std::log(0.25), 1}})).value -
                   kSe7525) < 1e-12);
}

TEST_CASE("semantic entropy survives underflow") {
    // exp(-2000) underflows; log-space accumulation must still see equal masses.
    CHECK(std::abs(semantic_entropy(samples({{-2000.0, 0}, {-2000.0, 1}})).value - kLn2) < 1e-12);
}

TEST_CASE("semantic entropy errors") {
    try {
        semantic_entropy({});
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NoSamples);
    }
    auto zero = samples({{-INFINITY, 0}, {-INFINITY, 1}});
    try {
        semantic_entropy(zero);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DegenerateMass);
    }
}

TEST_CASE("length-normalized semantic entropy") {
    std::vector<Sample> s{{-4.0, 0, 4}, {-2.0, 1, 2}};
    // per-token logprob -1 for both -> equal masses
    CHECK(std::abs(semantic_entropy(s, {true}).value - kLn2) < 1e-12);
    s[1].n_tokens.reset();
    try {
        semantic_entropy(s, {true});
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::FieldUnavailable);
    }
}

TEST_CASE("semantic entropy is bounded by log of the cluster count") {
    Rng rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(1, 12));
        std::vector<Sample> s;
        std::set<std::int64_t> clusters;
        for (int i = 0; i < n; ++i) {
            s.push_back({-rng.uniform(0.0, 30.0), rng.uniform_int(0, 5), std::nullopt});
            clusters.insert(s.back().cluster_id);
        }
        const double h = semantic_entropy(s).value;
        CHECK(h >= 0.0);
        CHECK(h <= std::log(static_cast<double>(clusters.size())) + 1e-12);
    }
}

TEST_CASE("estimator dispatch and field requirements") {
    Step step;
    step.thought = seq({std::log(0.5)});
    step.action = seq({std::log(0.5)});
    CHECK(step_supports(step, Estimator::NormalizedEntropy));
    CHECK_FALSE(step_supports(step, Estimator::SemanticEntropy));
    CHECK_FALSE(step_supports(step, Estimator::PTrue));
    CHECK(std::abs(estimate_step(step, Estimator::Likelihood).value - 2 * kLn2) < 1e-12);
    step.p_true = 0.4;
    CHECK(estimate_step(step, Estimator::PTrue).value == doctest::Approx(0.6));
    CHECK(estimate_step(step, Estimator::PTrue).estimator == Estimator::PTrue);
    CHECK_THROWS_AS(estimate_step(step, Estimator::PredictiveEntropy), Error);

    CHECK(required_field(Estimator::SemanticEntropy) == StepField::Samples);
    for (Estimator e : {Estimator::NormalizedEntropy, Estimator::Likelihood, Estimator::PredictiveEntropy,
                        Estimator::PTrue, Estimator::SemanticEntropy})
        CHECK(parse_estimator(estimator_name(e)) == e);
    CHECK_FALSE(parse_estimator("entropy").has_value());
}

}
