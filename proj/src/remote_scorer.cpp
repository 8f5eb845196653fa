#include "saup/remote_scorer.hpp"

#include <httplib.h>
#include <json.hpp>

namespace saup {

using nlohmann::json;

namespace {

class SlotGuard {
public:
    explicit SlotGuard(std::counting_semaphore<>& sem) : sem_(sem) { sem_.acquire(); }
    ~SlotGuard() { sem_.release(); }
    SlotGuard(const SlotGuard&) = delete;
    SlotGuard& operator=(const SlotGuard&) = delete;

private:
    std::counting_semaphore<>& sem_;
};

double checked(const json& v) {
    if (!v.is_number()) throw Error(Errc::ScorerUnavailable, "scorer reply has a non-numeric score");
    const double s = v.get<double>();
    if (!(s >= 0.0 && s <= 1.0)) throw Error(Errc::OutOfRange, "scorer returned " + std::to_string(s));
    return s;
}

json parse_reply(const std::string& body) {
    try {
        return json::parse(body);
    } catch (const json::parse_error& e) {
        throw Error(Errc::ScorerUnavailable, std::string("unparseable scorer reply: ") + e.what());
    }
}

}  // namespace

RemoteScorer::RemoteScorer(std::string base_url, RemoteScorerOptions opts)
    : base_url_(std::move(base_url)), opts_(opts) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
    if (base_url_.empty()) throw Error(Errc::InvalidConfig, "empty scorer URL");
    if (opts_.max_in_flight < 1 || opts_.batch_size < 1 || opts_.max_retries < 0)
        throw Error(Errc::InvalidConfig, "invalid remote scorer options");
    in_flight_ = std::make_unique<std::counting_semaphore<>>(opts_.max_in_flight);
}

RemoteScorer::~RemoteScorer() = default;

std::string RemoteScorer::post(const std::string& path, const std::string& body) const {
    SlotGuard slot(*in_flight_);
    std::string last_error;
    for (int attempt = 0; attempt <= opts_.max_retries; ++attempt) {
        httplib::Client cli(base_url_);
        cli.set_connection_timeout(opts_.timeout);
        cli.set_read_timeout(opts_.timeout);
        cli.set_write_timeout(opts_.timeout);
        auto res = cli.Post(path, body, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) return res->body;
        last_error = "HTTP " + std::to_string(res->status);
        // Client errors will not change on retry.
        if (res->status >= 400 && res->status < 500) break;
    }
    throw Error(Errc::ScorerUnavailable, "POST " + base_url_ + path + " failed: " + last_error);
}

double RemoteScorer::score(std::string_view context, std::string_view query) const {
    const json req{{"context", context}, {"query", query}};
    const json reply = parse_reply(post("/score", req.dump()));
    auto it = reply.find("score");
    if (it == reply.end()) throw Error(Errc::ScorerUnavailable, "scorer reply lacks 'score'");
    return checked(*it);
}

std::vector<double> RemoteScorer::score_batch(std::span<const ScorePair> pairs) const {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (std::size_t start = 0; start < pairs.size(); start += opts_.batch_size) {
        const std::size_t end = std::min(pairs.size(), start + opts_.batch_size);
        json arr = json::array();
        for (std::size_t i = start; i < end; ++i)
            arr.push_back({{"context", pairs[i].context}, {"query", pairs[i].query}});
        const json reply = parse_reply(post("/score_batch", json{{"pairs", arr}}.dump()));
        auto it = reply.find("scores");
        if (it == reply.end() || !it->is_array() || it->size() != end - start)
            throw Error(Errc::ScorerUnavailable, "scorer batch reply has the wrong shape");
        for (const json& v : *it) out.push_back(checked(v));
    }
    return out;
}

std::string RemoteScorer::health() const {
    SlotGuard slot(*in_flight_);
    httplib::Client cli(base_url_);
    cli.set_connection_timeout(opts_.timeout);
    cli.set_read_timeout(opts_.timeout);
    auto res = cli.Get("/healthz");
    if (!res) throw Error(Errc::ScorerUnavailable, "GET /healthz failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw Error(Errc::ScorerUnavailable, "GET /healthz returned HTTP " + std::to_string(res->status));
    const json reply = parse_reply(res->body);
    if (reply.value("status", "") != "ok") throw Error(Errc::ScorerUnavailable, "scorer reports unhealthy");
    return reply.value("mode", "");
}

}  // namespace saup
