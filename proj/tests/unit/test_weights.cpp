#include <doctest.h>

#include <cmath>

#include "chmm_util.hpp"
#include "saup/weights.hpp"

using namespace saup;

namespace {

std::vector<StepFeatures> feats(std::initializer_list<std::pair<double, double>> ds) {
    std::vector<StepFeatures> out;
    for (auto [a, o] : ds) out.push_back({{}, a, o});
    return out;
}

void check_close(const std::vector<double>& got, const std::vector<double>& want, double tol = 1e-12) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= tol);
}

ChmmModel flat_model() {
    ChmmModel m;
    m.n_states = 3;
    m.obs_dim = 2;
    m.pi = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    m.trans.assign(3, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    GaussianMixture g{{1.0}, {{0.3, 0.3}}, {{0.05, 0.05}}};
    m.emissions = {g, g, g};
    return m;
}

}  // namespace

TEST_SUITE("weights") {

TEST_CASE("position weights") {
    check_close(weights_position(3, 1.0).w, {1.0 / 3, 2.0 / 3, 1.0});
    check_close(weights_position(1, 1.0).w, {1.0});
    check_close(weights_position(2, 2.0).w, {0.25, 1.0});
    CHECK_THROWS_AS(weights_position(0, 1.0), Error);
    CHECK_THROWS_AS(weights_position(3, 0.0), Error);
}

TEST_CASE("plain weights") {
    check_close(weights_plain(feats({{0.2, 0.3}})).w, {0.5 + 1e-6}, 1e-15);
    check_close(weights_plain(feats({{0.0, 0.0}})).w, {1e-6}, 0.0);
    check_close(weights_plain(feats({{0, 0}, {0.5, 0.5}, {1, 1}})).w, {1e-6, 1.000001, 2.000001}, 1e-15);
    CHECK_THROWS_AS(weights_plain({}), Error);
    CHECK_THROWS_AS(weights_plain(feats({{-0.1, 0.0}})), Error);
}

TEST_CASE("hybrid weights") {
    auto f = feats({{0.1, 0.4}, {0.0, 0.7}, {0.3, 0.3}, {0.9, 0.05}});
    check_close(weights_hybrid(f, 1.0, 1.5).w, weights_position(4, 1.5).w, 0.0);
    auto plain = weights_plain(f).w;
    const double hi = *std::max_element(plain.begin(), plain.end());
    for (double& p : plain) p /= hi;
    check_close(weights_hybrid(f, 0.0).w, plain, 0.0);

    // plain = [0.5, 1.0] after the floor
    auto g = feats({{0.25, 0.25 - 1e-6}, {0.5, 0.5 - 1e-6}});
    check_close(weights_hybrid(g, 0.5).w, {0.5, 1.0});

    auto zero = feats({{0, 0}, {0, 0}});
    auto w = weights_hybrid(zero, 0.0).w;
    for (double x : w) CHECK(x == 1e-6);
    CHECK_THROWS_AS(weights_hybrid(f, 1.2), Error);
}

TEST_CASE("posterior weights") {
    PosteriorMatrix onehot{3, {0, 0, 1, 0, 0, 1}, 0.0};
    check_close(weights_from_posterior(onehot, {}).w, {3.0, 3.0}, 0.0);
    PosteriorMatrix uniform{3, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.0};
    check_close(weights_from_posterior(uniform, {}).w, {2.0});
    CHECK_THROWS_AS(weights_from_posterior(uniform, StateWeightMap{{1.0, 2.0}}), Error);
    CHECK_THROWS_AS(weights_from_posterior(uniform, StateWeightMap{{1.0, 0.0, 2.0}}), Error);
}

TEST_CASE("hmm weights with identical emissions are the map mean") {
    auto f = feats({{0.1, 0.2}, {0.9, 0.8}, {0.5, 0.5}});
    auto seq = observations_from_features(f, ObservationMode::Pair);
    check_close(weights_hmm(flat_model(), seq, {}).w, {2.0, 2.0, 2.0});
    check_close(weights_hmm(flat_model(), seq, StateWeightMap{{1.0, 1.0, 4.0}}).w, {2.0, 2.0, 2.0});
}

TEST_CASE("hmm weights stay within the map range") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        ChmmModel m = test::random_model(rng, 3, 2, 1);
        auto seq = test::random_sequence(rng, 2, 6);
        for (double w : weights_hmm(m, seq, {}).w) {
            CHECK(w >= 1.0);
            CHECK(w <= 3.0);
        }
    }
}

TEST_CASE("observation layouts") {
    auto f = feats({{0.1, 0.2}, {0.3, 0.4}});
    auto pair = observations_from_features(f, ObservationMode::Pair);
    CHECK(pair.dim() == 2);
    CHECK(pair.data() == std::vector<double>{0.1, 0.2, 0.3, 0.4});
    auto sum = observations_from_features(f, ObservationMode::Sum);
    CHECK(sum.dim() == 1);
    CHECK(sum[1][0] == doctest::Approx(0.7));
}

}
