#pragma once

#include <chrono>
#include <memory>
#include <semaphore>
#include <string>

#include "saup/distance.hpp"

namespace saup {

struct RemoteScorerOptions {
    std::chrono::milliseconds timeout{10000};
    int max_retries = 2;
    /// Upper bound on requests in flight at once across all threads.
    int max_in_flight = 4;
    /// Pairs per POST /score_batch request.
    std::size_t batch_size = 64;
};

/// HTTP client for the relevance-scorer service:
///   POST /score        {"context","query"}      -> {"score"}
///   POST /score_batch  {"pairs":[{...},...]}    -> {"scores":[...]}
///   GET  /healthz                               -> {"status","mode"}
/// Transport failures and non-2xx replies raise ScorerUnavailable after the
/// retry budget is spent; scores outside [0, 1] raise OutOfRange.
class RemoteScorer final : public RelevanceScorer {
public:
    explicit RemoteScorer(std::string base_url, RemoteScorerOptions opts = {});
    ~RemoteScorer() override;

    double score(std::string_view context, std::string_view query) const override;
    std::vector<double> score_batch(std::span<const ScorePair> pairs) const override;
    std::string identity() const override { return "remote:" + base_url_; }

    /// Returns the service mode ("stub" or "model").
    std::string health() const;

private:
    std::string post(const std::string& path, const std::string& body) const;

    std::string base_url_;
    RemoteScorerOptions opts_;
    std::unique_ptr<std::counting_semaphore<>> in_flight_;
};

}  // namespace saup
