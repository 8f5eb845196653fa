#include "saup/trajectory.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace saup {

using nlohmann::json;

namespace {

const std::set<std::string> kKnownTopKeys = {"id",    "question", "final_answer", "steps",
                                             "correct", "meta"};
const std::set<std::string> kKnownStepKeys = {"index",   "thought", "action", "observation",
                                              "samples", "p_true"};

[[noreturn]] void fail(Errc code, std::size_t line_no, const std::string& what) {
    throw Error(code, "line " + std::to_string(line_no) + ": " + what);
}

const json& require(const json& obj, const char* key, std::size_t line_no, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(Errc::MissingField, line_no, "missing field '" + path + key + "'");
    return *it;
}

std::string require_string(const json& obj, const char* key, std::size_t line_no,
                           const std::string& path = {}) {
    const json& v = require(obj, key, line_no, path);
    if (!v.is_string()) fail(Errc::MalformedLine, line_no, "field '" + path + key + "' must be a string");
    return v.get<std::string>();
}

double require_number(const json& v, std::size_t line_no, const std::string& field) {
    if (!v.is_number()) fail(Errc::MalformedLine, line_no, "field '" + field + "' must be a number");
    return v.get<double>();
}

double checked_logprob(double lp, std::size_t line_no) {
    if (std::isnan(lp) || lp > kLogprobTolerance) {
        std::ostringstream os;
        os.precision(17);
        os << "logprob " << lp << " exceeds 0";
        fail(Errc::InvalidLogprob, line_no, os.str());
    }
    return lp > 0.0 ? 0.0 : lp;
}

TokenSequence parse_tokens(const json& v, std::size_t line_no, const std::string& field) {
    if (!v.is_object()) fail(Errc::MalformedLine, line_no, "field '" + field + "' must be an object");
    TokenSequence seq;
    seq.text = require_string(v, "text", line_no, field + ".");
    const json& lps = require(v, "token_logprobs", line_no, field + ".");
    if (!lps.is_array()) fail(Errc::MalformedLine, line_no, "'" + field + ".token_logprobs' must be an array");
    seq.token_logprobs.reserve(lps.size());
    for (const json& lp : lps)
        seq.token_logprobs.push_back(
            checked_logprob(require_number(lp, line_no, field + ".token_logprobs"), line_no));
    return seq;
}

Step parse_step(const json& v, std::size_t line_no, std::size_t position,
                std::map<std::string, std::string>& meta) {
    const std::string path = "steps[" + std::to_string(position) + "].";
    if (!v.is_object()) fail(Errc::MalformedLine, line_no, path + " must be an object");
    Step step;
    step.index = static_cast<int>(position) + 1;
    if (auto it = v.find("index"); it != v.end()) {
        if (!it->is_number_integer()) fail(Errc::MalformedLine, line_no, path + "index must be an integer");
        step.index = it->get<int>();
    }
    step.thought = parse_tokens(require(v, "thought", line_no, path), line_no, path + "thought");
    step.action = parse_tokens(require(v, "action", line_no, path), line_no, path + "action");
    step.observation = require_string(v, "observation", line_no, path);

    if (auto it = v.find("samples"); it != v.end() && !it->is_null()) {
        if (!it->is_array()) fail(Errc::MalformedLine, line_no, path + "samples must be an array");
        std::vector<Sample> samples;
        for (const json& s : *it) {
            if (!s.is_object()) fail(Errc::MalformedLine, line_no, path + "samples[] must be objects");
            Sample sample;
            sample.total_logprob = checked_logprob(
                require_number(require(s, "total_logprob", line_no, path + "samples[]."), line_no,
                               path + "samples[].total_logprob"),
                line_no);
            const json& cid = require(s, "cluster_id", line_no, path + "samples[].");
            if (!cid.is_number_integer())
                fail(Errc::MalformedLine, line_no, path + "samples[].cluster_id must be an integer");
            sample.cluster_id = cid.get<std::int64_t>();
            if (auto nt = s.find("n_tokens"); nt != s.end() && !nt->is_null()) {
                if (!nt->is_number_integer())
                    fail(Errc::MalformedLine, line_no, path + "samples[].n_tokens must be an integer");
                sample.n_tokens = nt->get<std::int64_t>();
            }
            samples.push_back(sample);
        }
        step.samples = std::move(samples);
    }
    if (auto it = v.find("p_true"); it != v.end() && !it->is_null())
        step.p_true = require_number(*it, line_no, path + "p_true");

    for (const auto& [key, value] : v.items())
        if (!kKnownStepKeys.count(key)) meta.emplace("steps." + std::to_string(position + 1) + "." + key, value.dump());
    return step;
}

json tokens_to_json(const TokenSequence& seq) {
    return json{{"text", seq.text}, {"token_logprobs", seq.token_logprobs}};
}

bool is_blank(const std::string& line) {
    for (char c : line)
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    return true;
}

}  // namespace

std::string describe(const Violation& v) {
    std::string kind;
    switch (v.kind) {
        case ViolationKind::EmptySteps: kind = "EmptySteps"; break;
        case ViolationKind::NonContiguousIndex: kind = "NonContiguousIndex"; break;
        case ViolationKind::InvalidLogprob: kind = "InvalidLogprob"; break;
        case ViolationKind::NegativeClusterId: kind = "NegativeClusterId"; break;
        case ViolationKind::OutOfRange: kind = "OutOfRange"; break;
        case ViolationKind::NonFinite: kind = "NonFinite"; break;
    }
    if (v.step == 0) return kind + "(" + v.field + ")";
    return kind + "(step " + std::to_string(v.step) + ", " + v.field + ")";
}

std::vector<Violation> validate_trajectory(const Trajectory& t) {
    std::vector<Violation> out;
    if (t.steps.empty()) {
        out.push_back({ViolationKind::EmptySteps, 0, "steps"});
        return out;
    }
    auto check_logprobs = [&](const TokenSequence& seq, int step, const char* field) {
        for (double lp : seq.token_logprobs) {
            if (!std::isfinite(lp) && !(std::isinf(lp) && lp < 0)) {
                out.push_back({ViolationKind::NonFinite, step, field});
                return;
            }
            if (lp > kLogprobTolerance) {
                out.push_back({ViolationKind::InvalidLogprob, step, field});
                return;
            }
        }
    };
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        const Step& s = t.steps[i];
        const int pos = static_cast<int>(i) + 1;
        if (s.index != pos) out.push_back({ViolationKind::NonContiguousIndex, pos, "index"});
        check_logprobs(s.thought, pos, "thought.token_logprobs");
        check_logprobs(s.action, pos, "action.token_logprobs");
        if (s.samples) {
            for (const Sample& sample : *s.samples) {
                if (sample.cluster_id < 0) {
                    out.push_back({ViolationKind::NegativeClusterId, pos, "samples.cluster_id"});
                    break;
                }
            }
            for (const Sample& sample : *s.samples) {
                if (std::isnan(sample.total_logprob) || sample.total_logprob > kLogprobTolerance) {
                    out.push_back({ViolationKind::InvalidLogprob, pos, "samples.total_logprob"});
                    break;
                }
            }
            for (const Sample& sample : *s.samples) {
                if (sample.n_tokens && *sample.n_tokens < 1) {
                    out.push_back({ViolationKind::OutOfRange, pos, "samples.n_tokens"});
                    break;
                }
            }
        }
        if (s.p_true && !(*s.p_true >= 0.0 && *s.p_true <= 1.0))
            out.push_back({ViolationKind::OutOfRange, pos, "p_true"});
    }
    return out;
}

Trajectory parse_trajectory_line(const std::string& line, std::size_t line_no) {
    json doc;
    try {
        doc = json::parse(line);
    } catch (const json::parse_error& e) {
        fail(Errc::MalformedLine, line_no, e.what());
    }
    if (!doc.is_object()) fail(Errc::MalformedLine, line_no, "expected a JSON object");

    Trajectory t;
    t.id = require_string(doc, "id", line_no);
    t.question = require_string(doc, "question", line_no);
    t.final_answer = require_string(doc, "final_answer", line_no);

    if (auto it = doc.find("meta"); it != doc.end() && !it->is_null()) {
        if (!it->is_object()) fail(Errc::MalformedLine, line_no, "field 'meta' must be an object");
        for (const auto& [key, value] : it->items()) {
            if (!value.is_string()) fail(Errc::MalformedLine, line_no, "meta values must be strings");
            t.meta[key] = value.get<std::string>();
        }
    }

    const json& steps = require(doc, "steps", line_no, "");
    if (!steps.is_array()) fail(Errc::MalformedLine, line_no, "field 'steps' must be an array");
    for (std::size_t i = 0; i < steps.size(); ++i) t.steps.push_back(parse_step(steps[i], line_no, i, t.meta));

    if (auto it = doc.find("correct"); it != doc.end() && !it->is_null()) {
        if (!it->is_boolean()) fail(Errc::MalformedLine, line_no, "field 'correct' must be a boolean");
        t.correct = it->get<bool>();
    }

    for (const auto& [key, value] : doc.items())
        if (!kKnownTopKeys.count(key)) t.meta.emplace(key, value.dump());

    if (auto violations = validate_trajectory(t); !violations.empty()) {
        std::string msg = "trajectory '" + t.id + "':";
        for (const auto& v : violations) msg += " " + describe(v);
        fail(Errc::InvalidTrajectory, line_no, msg);
    }
    t.meta[kLineMetaKey] = std::to_string(line_no);
    return t;
}

ParseReport parse_dataset_lenient(std::istream& in, std::string source) {
    ParseReport report;
    report.dataset.source = std::move(source);
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank(line)) continue;
        try {
            Trajectory t = parse_trajectory_line(line, line_no);
            if (!seen.insert(t.id).second) {
                report.issues.push_back({line_no, Errc::DuplicateId,
                                         "line " + std::to_string(line_no) + ": duplicate id '" + t.id + "'"});
                continue;
            }
            report.dataset.trajectories.push_back(std::move(t));
        } catch (const Error& e) {
            report.issues.push_back({line_no, e.code(), e.what()});
        }
    }
    return report;
}

Dataset parse_dataset(std::istream& in, std::string source) {
    ParseReport report = parse_dataset_lenient(in, std::move(source));
    if (!report.issues.empty()) {
        const ParseIssue& first = report.issues.front();
        // Error prefixes the code name itself; strip the copy already in the message.
        std::string msg = first.message;
        const std::string prefix = std::string(errc_name(first.code)) + ": ";
        if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
        throw Error(first.code, msg);
    }
    return std::move(report.dataset);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open dataset '" + path + "'");
    return parse_dataset(in, path);
}

std::string serialize_trajectory(const Trajectory& t) {
    json doc;
    doc["id"] = t.id;
    doc["question"] = t.question;
    doc["final_answer"] = t.final_answer;
    json steps = json::array();
    for (const Step& s : t.steps) {
        json js;
        js["index"] = s.index;
        js["thought"] = tokens_to_json(s.thought);
        js["action"] = tokens_to_json(s.action);
        js["observation"] = s.observation;
        if (s.samples) {
            json samples = json::array();
            for (const Sample& sample : *s.samples) {
                json o{{"total_logprob", sample.total_logprob}, {"cluster_id", sample.cluster_id}};
                if (sample.n_tokens) o["n_tokens"] = *sample.n_tokens;
                samples.push_back(std::move(o));
            }
            js["samples"] = std::move(samples);
        }
        if (s.p_true) js["p_true"] = *s.p_true;
        steps.push_back(std::move(js));
    }
    doc["steps"] = std::move(steps);
    if (t.correct) doc["correct"] = *t.correct;
    json meta = json::object();
    for (const auto& [key, value] : t.meta)
        if (key != kLineMetaKey) meta[key] = value;
    if (!meta.empty()) doc["meta"] = std::move(meta);
    return doc.dump();
}

void serialize_dataset(const Dataset& d, std::ostream& out) {
    for (const Trajectory& t : d.trajectories) out << serialize_trajectory(t) << '\n';
}

}  // namespace saup
