#include "saup/distance.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <set>

namespace saup {

namespace {

bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

std::set<std::string> token_set(std::string_view text) {
    std::set<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_ascii_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_ascii_space(text[j])) ++j;
        if (j > i) {
            std::string tok(text.substr(i, j - i));
            for (char& c : tok)
                if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
            out.insert(std::move(tok));
        }
        i = j;
    }
    return out;
}

void check_score(double s) {
    if (!(s >= 0.0 && s <= 1.0)) throw Error(Errc::OutOfRange, "relevance score " + std::to_string(s) + " outside [0, 1]");
}

std::string step_text(const Step& s) { return s.thought.text + " " + s.action.text + " " + s.observation; }

}  // namespace

std::vector<double> RelevanceScorer::score_batch(std::span<const ScorePair> pairs) const {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const ScorePair& p : pairs) out.push_back(score(p.context, p.query));
    return out;
}

double stub_score(std::string_view context, std::string_view query) {
    const auto a = token_set(context);
    const auto b = token_set(query);
    if (a.empty() && b.empty()) return 1.0;
    std::size_t common = 0;
    for (const auto& tok : a) common += b.count(tok);
    const std::size_t uni = a.size() + b.size() - common;
    return static_cast<double>(common) / static_cast<double>(uni);
}

std::size_t CachingScorer::KeyHash::operator()(const Key& k) const noexcept {
    const std::size_t h1 = std::hash<std::string>{}(k.context);
    const std::size_t h2 = std::hash<std::string>{}(k.query);
    return h1 ^ (h2 + 0x9e3779b97f4a7c15ULL + (h1 << 6) + (h1 >> 2));
}

double CachingScorer::score(std::string_view context, std::string_view query) const {
    Key key{std::string(context), std::string(query)};
    {
        std::shared_lock lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    const double s = inner_->score(context, query);
    std::unique_lock lock(mutex_);
    cache_.emplace(std::move(key), s);
    return s;
}

std::vector<double> CachingScorer::score_batch(std::span<const ScorePair> pairs) const {
    std::vector<double> out(pairs.size());
    std::vector<ScorePair> missing;
    std::vector<std::size_t> missing_at;
    {
        std::shared_lock lock(mutex_);
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            auto it = cache_.find(Key{pairs[i].context, pairs[i].query});
            if (it != cache_.end()) {
                out[i] = it->second;
            } else {
                missing.push_back(pairs[i]);
                missing_at.push_back(i);
            }
        }
    }
    if (missing.empty()) return out;
    const std::vector<double> fresh = inner_->score_batch(missing);
    if (fresh.size() != missing.size())
        throw Error(Errc::ScorerUnavailable, "scorer returned " + std::to_string(fresh.size()) + " scores for " +
                                                 std::to_string(missing.size()) + " pairs");
    std::unique_lock lock(mutex_);
    for (std::size_t j = 0; j < missing.size(); ++j) {
        out[missing_at[j]] = fresh[j];
        cache_.emplace(Key{std::move(missing[j].context), std::move(missing[j].query)}, fresh[j]);
    }
    return out;
}

std::size_t CachingScorer::size() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
}

double distance_from_score(double s, const DistanceConfig& cfg) {
    check_score(s);
    switch (cfg.mode) {
        case DistanceMode::OneMinus: return 1.0 - s;
        case DistanceMode::Reciprocal: {
            if (!(cfg.epsilon > 0.0)) throw Error(Errc::InvalidConfig, "distance epsilon must be positive");
            const double d = 1.0 / (s + cfg.epsilon) - 1.0 / (1.0 + cfg.epsilon);
            return std::max(d, 0.0);
        }
    }
    throw Error(Errc::InvalidConfig, "unknown distance mode");
}

std::pair<ScorePair, ScorePair> step_score_pairs(const Trajectory& t, std::size_t n, const DistanceConfig& cfg) {
    if (n < 1 || n > t.steps.size())
        throw Error(Errc::OutOfRange, "step " + std::to_string(n) + " outside 1.." + std::to_string(t.steps.size()));
    std::string context;
    if (cfg.window == ContextWindow::Cumulative) {
        for (std::size_t i = 0; i < n; ++i) {
            if (i) context += ' ';
            context += step_text(t.steps[i]);
        }
    } else {
        context = step_text(t.steps[n - 1]);
    }
    const Step& s = t.steps[n - 1];
    std::string query = cfg.query_includes_thought ? s.thought.text + " " + s.action.text : s.action.text;
    return {ScorePair{std::move(context), t.question}, ScorePair{s.observation, std::move(query)}};
}

StepDistances compute_step_distances(const Trajectory& t, std::size_t n, const RelevanceScorer& scorer,
                                     const DistanceConfig& cfg) {
    const auto [drift, interaction] = step_score_pairs(t, n, cfg);
    return {distance_from_score(scorer.score(drift.context, drift.query), cfg),
            distance_from_score(scorer.score(interaction.context, interaction.query), cfg)};
}

std::vector<StepDistances> compute_distances(const Trajectory& t, const RelevanceScorer& scorer,
                                             const DistanceConfig& cfg) {
    std::vector<ScorePair> pairs;
    pairs.reserve(2 * t.steps.size());
    for (std::size_t n = 1; n <= t.steps.size(); ++n) {
        auto [drift, interaction] = step_score_pairs(t, n, cfg);
        pairs.push_back(std::move(drift));
        pairs.push_back(std::move(interaction));
    }
    const std::vector<double> scores = scorer.score_batch(pairs);
    if (scores.size() != pairs.size())
        throw Error(Errc::ScorerUnavailable, "scorer batch returned the wrong number of scores");
    std::vector<StepDistances> out(t.steps.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = {distance_from_score(scores[2 * i], cfg), distance_from_score(scores[2 * i + 1], cfg)};
    return out;
}

std::vector<StepFeatures> compute_features(const Trajectory& t, Estimator estimator, const RelevanceScorer& scorer,
                                           const DistanceConfig& cfg, const SemanticEntropyOptions& se_opts) {
    const auto distances = compute_distances(t, scorer, cfg);
    std::vector<StepFeatures> out(t.steps.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = {estimate_step(t.steps[i], estimator, se_opts), distances[i].d_a, distances[i].d_o};
    return out;
}

}  // namespace saup
