#include "saup/chmm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "saup/parallel.hpp"
#include "saup/rng.hpp"

namespace saup {

using nlohmann::json;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // ln(2*pi)
constexpr double kDegenerateMass = 1e-12;
// Sequences per E-step work unit.
constexpr std::size_t kBlockSize = 16;

double log_sum_exp(std::span<const double> v) {
    double hi = kNegInf;
    for (double x : v) hi = std::max(hi, x);
    if (hi == kNegInf) return kNegInf;
    double s = 0.0;
    for (double x : v) s += std::exp(x - hi);
    return hi + std::log(s);
}

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

double log_gaussian_diag(std::span<const double> x, std::span<const double> mean, std::span<const double> var) {
    double acc = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
        const double diff = x[d] - mean[d];
        acc += kLog2Pi + std::log(var[d]) + diff * diff / var[d];
    }
    return -0.5 * acc;
}

void check_sequence(const ChmmModel& m, const ObservationSequence& seq) {
    if (seq.empty()) throw Error(Errc::EmptyInput, "observation sequence is empty");
    if (seq.dim() != m.obs_dim)
        throw Error(Errc::DimensionMismatch, "observation dimension " + std::to_string(seq.dim()) +
                                                 " does not match model dimension " + std::to_string(m.obs_dim));
    for (double v : seq.data())
        if (!std::isfinite(v)) throw Error(Errc::NonFiniteObservation, "observation contains a non-finite value");
}

// log b_j(o_t), laid out [t * S + j].
std::vector<double> log_emissions(const ChmmModel& m, const ObservationSequence& seq) {
    const std::size_t S = m.n_states, T = seq.size();
    std::vector<double> le(T * S);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t j = 0; j < S; ++j) le[t * S + j] = m.emissions[j].log_density(seq[t]);
    return le;
}

std::vector<double> log_trans(const ChmmModel& m) {
    const std::size_t S = m.n_states;
    std::vector<double> la(S * S);
    for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = 0; j < S; ++j) la[i * S + j] = safe_log(m.trans[i][j]);
    return la;
}

struct Moments {
    std::vector<double> mean;
    std::vector<double> var;
};

// Weighted mean and (population) variance; `weights` empty means unit weights.
Moments weighted_moments(std::span<const ObservationSequence> seqs, std::size_t dim,
                         const std::vector<std::vector<double>>* weights, double cov_floor) {
    Moments mo{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
    double total = 0.0;
    for (std::size_t s = 0; s < seqs.size(); ++s)
        for (std::size_t t = 0; t < seqs[s].size(); ++t) {
            const double w = weights ? (*weights)[s][t] : 1.0;
            total += w;
            for (std::size_t d = 0; d < dim; ++d) mo.mean[d] += w * seqs[s][t][d];
        }
    if (total <= 0.0) {
        std::fill(mo.var.begin(), mo.var.end(), 1.0);
        return mo;
    }
    for (double& v : mo.mean) v /= total;
    for (std::size_t s = 0; s < seqs.size(); ++s)
        for (std::size_t t = 0; t < seqs[s].size(); ++t) {
            const double w = weights ? (*weights)[s][t] : 1.0;
            for (std::size_t d = 0; d < dim; ++d) {
                const double diff = seqs[s][t][d] - mo.mean[d];
                mo.var[d] += w * diff * diff;
            }
        }
    for (double& v : mo.var) v = std::max(v / total, cov_floor);
    return mo;
}

// One component at the moments, or K seeded components scattered around them.
GaussianMixture mixture_from_moments(const Moments& mo, std::size_t n_components, Rng& rng) {
    GaussianMixture g;
    g.weights.assign(n_components, 1.0 / static_cast<double>(n_components));
    for (std::size_t k = 0; k < n_components; ++k) {
        std::vector<double> mean = mo.mean;
        if (n_components > 1)
            for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += 0.5 * std::sqrt(mo.var[d]) * rng.normal();
        g.means.push_back(std::move(mean));
        g.diag_covs.push_back(mo.var);
    }
    return g;
}

struct SuffStats {
    std::size_t S = 0, K = 0, D = 0;
    double loglik = 0.0;
    std::vector<double> pi0;    // [S]
    std::vector<double> trans;  // [S*S]
    std::vector<double> occ;    // [S*K]
    std::vector<double> sx;     // [(S*K)*D], centred on the current component mean
    std::vector<double> sxx;    // [(S*K)*D], centred on the current component mean

    SuffStats(std::size_t s, std::size_t k, std::size_t d)
        : S(s), K(k), D(d), pi0(s), trans(s * s), occ(s * k), sx(s * k * d), sxx(s * k * d) {}

    void add(const SuffStats& o) {
        loglik += o.loglik;
        auto acc = [](std::vector<double>& a, const std::vector<double>& b) {
            for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
        };
        acc(pi0, o.pi0);
        acc(trans, o.trans);
        acc(occ, o.occ);
        acc(sx, o.sx);
        acc(sxx, o.sxx);
    }
};

void accumulate(const ChmmModel& m, const ObservationSequence& seq, SuffStats& st) {
    const ForwardBackwardResult fb = forward_backward(m, seq);
    const std::size_t S = st.S, K = st.K, D = st.D;
    st.loglik += fb.posterior.loglik;
    for (std::size_t j = 0; j < S; ++j) st.pi0[j] += fb.posterior.gamma[j];
    for (std::size_t i = 0; i < S * S; ++i) st.trans[i] += fb.xi_sum[i];

    std::vector<double> comp(K);
    for (std::size_t t = 0; t < seq.size(); ++t) {
        const auto x = seq[t];
        for (std::size_t j = 0; j < S; ++j) {
            const double g = fb.posterior.gamma[t * S + j];
            if (g == 0.0) continue;
            const GaussianMixture& mix = m.emissions[j];
            if (K == 1) {
                comp[0] = 1.0;
            } else {
                for (std::size_t k = 0; k < K; ++k)
                    comp[k] = mix.weights[k] > 0.0
                                  ? std::log(mix.weights[k]) + log_gaussian_diag(x, mix.means[k], mix.diag_covs[k])
                                  : kNegInf;
                const double lse = log_sum_exp(comp);
                for (double& c : comp) c = lse == kNegInf ? 0.0 : std::exp(c - lse);
            }
            for (std::size_t k = 0; k < K; ++k) {
                const double r = g * comp[k];
                if (r == 0.0) continue;
                const std::size_t jk = j * K + k;
                st.occ[jk] += r;
                for (std::size_t d = 0; d < D; ++d) {
                    const double diff = x[d] - mix.means[k][d];
                    st.sx[jk * D + d] += r * diff;
                    st.sxx[jk * D + d] += r * diff * diff;
                }
            }
        }
    }
}

SuffStats e_step(const ChmmModel& m, std::span<const ObservationSequence> seqs, unsigned jobs) {
    const std::size_t K = m.emissions.front().n_components();
    const std::size_t n_blocks = (seqs.size() + kBlockSize - 1) / kBlockSize;
    std::vector<SuffStats> blocks(n_blocks, SuffStats(m.n_states, K, m.obs_dim));
    parallel_for(n_blocks, jobs, [&](std::size_t b) {
        const std::size_t end = std::min(seqs.size(), (b + 1) * kBlockSize);
        for (std::size_t s = b * kBlockSize; s < end; ++s) accumulate(m, seqs[s], blocks[b]);
    });
    SuffStats total(m.n_states, K, m.obs_dim);
    for (const SuffStats& b : blocks) total.add(b);
    return total;
}

ChmmModel m_step(const ChmmModel& cur, const SuffStats& st, const Moments& global, const FitConfig& cfg,
                 int iteration, FitReport& report) {
    const std::size_t S = st.S, K = st.K, D = st.D;
    ChmmModel next = cur;

    double pi_total = 0.0;
    for (double v : st.pi0) pi_total += v;
    for (std::size_t j = 0; j < S; ++j) next.pi[j] = st.pi0[j] / pi_total;

    for (std::size_t i = 0; i < S; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < S; ++j) row += st.trans[i * S + j];
        // A state never left (only seen at sequence ends) keeps its old row.
        if (row <= 0.0) continue;
        for (std::size_t j = 0; j < S; ++j) next.trans[i][j] = st.trans[i * S + j] / row;
    }

    for (std::size_t j = 0; j < S; ++j) {
        double occ_state = 0.0;
        for (std::size_t k = 0; k < K; ++k) occ_state += st.occ[j * K + k];
        GaussianMixture& mix = next.emissions[j];
        if (occ_state < kDegenerateMass) {
            Rng rng(cfg.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(iteration * S + j + 1)));
            mix = mixture_from_moments(global, K, rng);
            report.degenerate.push_back({iteration, j, -1});
            continue;
        }
        for (std::size_t k = 0; k < K; ++k) {
            const std::size_t jk = j * K + k;
            const double occ = st.occ[jk];
            mix.weights[k] = occ / occ_state;
            // An empty component keeps its parameters; its weight is already ~0.
            if (occ < kDegenerateMass) continue;
            for (std::size_t d = 0; d < D; ++d) {
                const double shift = st.sx[jk * D + d] / occ;
                const double var = st.sxx[jk * D + d] / occ - shift * shift;
                mix.means[k][d] = cur.emissions[j].means[k][d] + shift;
                mix.diag_covs[k][d] = std::max(var, cfg.cov_floor);
            }
        }
    }
    return next;
}

}  // namespace

double GaussianMixture::log_density(std::span<const double> x) const {
    double hi = kNegInf;
    double terms[16];
    std::vector<double> heap;
    double* lp = terms;
    if (weights.size() > 16) {
        heap.resize(weights.size());
        lp = heap.data();
    }
    for (std::size_t k = 0; k < weights.size(); ++k) {
        lp[k] = weights[k] > 0.0 ? std::log(weights[k]) + log_gaussian_diag(x, means[k], diag_covs[k]) : kNegInf;
        hi = std::max(hi, lp[k]);
    }
    if (hi == kNegInf) return kNegInf;
    if (weights.size() == 1) return lp[0];
    double s = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) s += std::exp(lp[k] - hi);
    return hi + std::log(s);
}

std::vector<std::string> check_model(const ChmmModel& m, double tol, double cov_floor) {
    std::vector<std::string> out;
    auto simplex = [&](const std::vector<double>& v, const std::string& what) {
        double sum = 0.0;
        for (double p : v) {
            if (!std::isfinite(p) || p < 0.0) {
                out.push_back(what + " has an entry outside [0, 1]");
                return;
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > tol) {
            std::ostringstream os;
            os.precision(17);
            os << what << " sums to " << sum;
            out.push_back(os.str());
        }
    };
    if (m.n_states < 1) out.push_back("n_states must be >= 1");
    if (m.obs_dim < 1) out.push_back("obs_dim must be >= 1");
    if (!out.empty()) return out;
    if (m.pi.size() != m.n_states) {
        out.push_back("pi has the wrong length");
    } else {
        simplex(m.pi, "pi");
    }
    if (m.trans.size() != m.n_states) {
        out.push_back("trans has the wrong number of rows");
    } else {
        for (std::size_t i = 0; i < m.n_states; ++i) {
            if (m.trans[i].size() != m.n_states) {
                out.push_back("trans row " + std::to_string(i) + " has the wrong length");
                continue;
            }
            simplex(m.trans[i], "trans row " + std::to_string(i));
        }
    }
    if (m.emissions.size() != m.n_states) {
        out.push_back("emissions has the wrong length");
        return out;
    }
    for (std::size_t j = 0; j < m.n_states; ++j) {
        const GaussianMixture& g = m.emissions[j];
        const std::string tag = "state " + std::to_string(j) + " emission";
        if (g.weights.empty() || g.means.size() != g.weights.size() || g.diag_covs.size() != g.weights.size()) {
            out.push_back(tag + " has inconsistent component counts");
            continue;
        }
        simplex(g.weights, tag + " weights");
        for (std::size_t k = 0; k < g.weights.size(); ++k) {
            if (g.means[k].size() != m.obs_dim || g.diag_covs[k].size() != m.obs_dim) {
                out.push_back(tag + " component " + std::to_string(k) + " has the wrong dimension");
                continue;
            }
            for (double v : g.means[k])
                if (!std::isfinite(v)) out.push_back(tag + " has a non-finite mean");
            for (double v : g.diag_covs[k])
                if (!std::isfinite(v) || v < cov_floor)
                    out.push_back(tag + " component " + std::to_string(k) + " covariance below floor");
        }
    }
    return out;
}

void validate_model(const ChmmModel& m) {
    const auto problems = check_model(m);
    if (problems.empty()) return;
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw Error(Errc::InvalidModel, msg);
}

ObservationSequence::ObservationSequence(std::size_t dim, std::vector<double> data)
    : dim_(dim), data_(std::move(data)) {
    if (dim_ == 0 || data_.size() % dim_ != 0)
        throw Error(Errc::DimensionMismatch, "observation data is not a whole number of vectors");
}

void ObservationSequence::push_back(std::span<const double> x) {
    if (x.size() != dim_) throw Error(Errc::DimensionMismatch, "observation has the wrong dimension");
    data_.insert(data_.end(), x.begin(), x.end());
}

ForwardBackwardResult forward_backward(const ChmmModel& m, const ObservationSequence& seq) {
    check_sequence(m, seq);
    const std::size_t S = m.n_states, T = seq.size();
    const std::vector<double> le = log_emissions(m, seq);
    const std::vector<double> lt = log_trans(m);

    std::vector<double> la(T * S), lb(T * S, 0.0), tmp(S);
    for (std::size_t j = 0; j < S; ++j) la[j] = safe_log(m.pi[j]) + le[j];
    for (std::size_t t = 1; t < T; ++t)
        for (std::size_t j = 0; j < S; ++j) {
            for (std::size_t i = 0; i < S; ++i) tmp[i] = la[(t - 1) * S + i] + lt[i * S + j];
            la[t * S + j] = log_sum_exp(tmp) + le[t * S + j];
        }
    const double loglik = log_sum_exp(std::span<const double>(la.data() + (T - 1) * S, S));
    if (!std::isfinite(loglik))
        throw Error(Errc::InvalidModel, "observation sequence has zero likelihood under the model");

    for (std::size_t t = T - 1; t-- > 0;)
        for (std::size_t i = 0; i < S; ++i) {
            for (std::size_t j = 0; j < S; ++j) tmp[j] = lt[i * S + j] + le[(t + 1) * S + j] + lb[(t + 1) * S + j];
            lb[t * S + i] = log_sum_exp(tmp);
        }

    ForwardBackwardResult out;
    out.posterior.n_states = S;
    out.posterior.loglik = loglik;
    out.posterior.gamma.resize(T * S);
    for (std::size_t t = 0; t < T; ++t) {
        double row = 0.0;
        for (std::size_t j = 0; j < S; ++j) {
            const double g = std::exp(la[t * S + j] + lb[t * S + j] - loglik);
            out.posterior.gamma[t * S + j] = g;
            row += g;
        }
        for (std::size_t j = 0; j < S; ++j) out.posterior.gamma[t * S + j] /= row;
    }
    out.xi_sum.assign(S * S, 0.0);
    for (std::size_t t = 0; t + 1 < T; ++t)
        for (std::size_t i = 0; i < S; ++i)
            for (std::size_t j = 0; j < S; ++j)
                out.xi_sum[i * S + j] +=
                    std::exp(la[t * S + i] + lt[i * S + j] + le[(t + 1) * S + j] + lb[(t + 1) * S + j] - loglik);
    return out;
}

double log_likelihood(const ChmmModel& m, const ObservationSequence& seq) {
    return forward_backward(m, seq).posterior.loglik;
}

double log_likelihood(const ChmmModel& m, std::span<const ObservationSequence> seqs) {
    double total = 0.0;
    for (const auto& s : seqs) total += log_likelihood(m, s);
    return total;
}

std::vector<int> viterbi(const ChmmModel& m, const ObservationSequence& seq) {
    check_sequence(m, seq);
    const std::size_t S = m.n_states, T = seq.size();
    const std::vector<double> le = log_emissions(m, seq);
    const std::vector<double> lt = log_trans(m);
    std::vector<double> delta(T * S);
    std::vector<int> back(T * S, 0);
    for (std::size_t j = 0; j < S; ++j) delta[j] = safe_log(m.pi[j]) + le[j];
    for (std::size_t t = 1; t < T; ++t)
        for (std::size_t j = 0; j < S; ++j) {
            double best = kNegInf;
            int arg = 0;
            for (std::size_t i = 0; i < S; ++i) {
                const double v = delta[(t - 1) * S + i] + lt[i * S + j];
                if (v > best) {
                    best = v;
                    arg = static_cast<int>(i);
                }
            }
            delta[t * S + j] = best + le[t * S + j];
            back[t * S + j] = arg;
        }
    std::vector<int> path(T, 0);
    double best = kNegInf;
    for (std::size_t j = 0; j < S; ++j)
        if (delta[(T - 1) * S + j] > best) {
            best = delta[(T - 1) * S + j];
            path[T - 1] = static_cast<int>(j);
        }
    for (std::size_t t = T - 1; t > 0; --t) path[t - 1] = back[t * S + static_cast<std::size_t>(path[t])];
    return path;
}

FitResult baum_welch_fit(const ChmmModel& init, std::span<const ObservationSequence> seqs, const FitConfig& cfg) {
    if (cfg.max_iters < 1 || !(cfg.rel_tol > 0.0) || !(cfg.cov_floor > 0.0))
        throw Error(Errc::InvalidConfig, "max_iters must be >= 1 and tolerances positive");
    std::size_t n_obs = 0;
    for (const auto& s : seqs) n_obs += s.size();
    if (seqs.empty() || n_obs == 0) throw Error(Errc::EmptyTrainingSet, "no observations to fit");
    validate_model(init);
    const std::size_t K = init.emissions.front().n_components();
    for (const auto& g : init.emissions)
        if (g.n_components() != K) throw Error(Errc::InvalidModel, "states must share one component count");
    for (const auto& s : seqs) check_sequence(init, s);

    const Moments global = weighted_moments(seqs, init.obs_dim, nullptr, cfg.cov_floor);

    FitResult out{init, {}};
    for (int it = 0;; ++it) {
        const SuffStats st = e_step(out.model, seqs, cfg.jobs);
        out.report.loglik_trace.push_back(st.loglik);
        if (it > 0) {
            const double prev = out.report.loglik_trace[static_cast<std::size_t>(it) - 1];
            if (st.loglik - prev <= cfg.rel_tol * std::abs(prev)) {
                out.report.converged = true;
                break;
            }
        }
        if (it == cfg.max_iters) break;
        out.model = m_step(out.model, st, global, cfg, it + 1, out.report);
        out.report.iterations = it + 1;
    }
    return out;
}

ChmmModel supervised_init(std::span<const LabeledSequence> labeled, std::size_t n_states, std::size_t n_components,
                          std::uint64_t seed, MissingStatePolicy policy, double cov_floor) {
    if (labeled.empty()) throw Error(Errc::EmptyTrainingSet, "no labeled sequences");
    if (n_states < 1 || n_components < 1) throw Error(Errc::InvalidConfig, "n_states and n_components must be >= 1");
    const std::size_t dim = labeled.front().obs.dim();
    ChmmModel m;
    m.n_states = n_states;
    m.obs_dim = dim;
    m.pi.assign(n_states, 0.0);
    std::vector<std::vector<double>> counts(n_states, std::vector<double>(n_states, 1.0));

    // Per-state observation pools, expressed as 0/1 weights over the input sequences.
    std::vector<ObservationSequence> seqs;
    std::vector<std::vector<std::vector<double>>> membership(n_states);
    for (const auto& ls : labeled) {
        if (ls.obs.empty()) throw Error(Errc::EmptyInput, "labeled sequence is empty");
        if (ls.obs.dim() != dim) throw Error(Errc::DimensionMismatch, "labeled sequences differ in dimension");
        if (ls.states.size() != ls.obs.size())
            throw Error(Errc::LengthMismatch, "label path length differs from observation count");
        for (double v : ls.obs.data())
            if (!std::isfinite(v)) throw Error(Errc::NonFiniteObservation, "labeled observation is not finite");
        for (int s : ls.states)
            if (s < 0 || static_cast<std::size_t>(s) >= n_states)
                throw Error(Errc::OutOfRange, "state label " + std::to_string(s) + " outside [0, n_states)");
        m.pi[static_cast<std::size_t>(ls.states.front())] += 1.0;
        for (std::size_t t = 1; t < ls.states.size(); ++t)
            counts[static_cast<std::size_t>(ls.states[t - 1])][static_cast<std::size_t>(ls.states[t])] += 1.0;
        seqs.push_back(ls.obs);
        for (std::size_t j = 0; j < n_states; ++j) {
            std::vector<double> w(ls.states.size());
            for (std::size_t t = 0; t < w.size(); ++t) w[t] = ls.states[t] == static_cast<int>(j) ? 1.0 : 0.0;
            membership[j].push_back(std::move(w));
        }
    }
    for (double& p : m.pi) p /= static_cast<double>(labeled.size());
    for (auto& row : counts) {
        double total = 0.0;
        for (double c : row) total += c;
        for (double& c : row) c /= total;
    }
    m.trans = std::move(counts);

    Rng rng(seed);
    const Moments global = weighted_moments(seqs, dim, nullptr, cov_floor);
    for (std::size_t j = 0; j < n_states; ++j) {
        double mass = 0.0;
        for (const auto& w : membership[j])
            for (double v : w) mass += v;
        if (mass == 0.0) {
            if (policy == MissingStatePolicy::Error)
                throw Error(Errc::MissingState, "state " + std::to_string(j) + " has no labeled observations");
            m.emissions.push_back(mixture_from_moments(global, n_components, rng));
            continue;
        }
        m.emissions.push_back(mixture_from_moments(weighted_moments(seqs, dim, &membership[j], cov_floor),
                                                   n_components, rng));
    }
    return m;
}

ChmmModel random_init(std::span<const ObservationSequence> seqs, std::size_t n_states, std::size_t n_components,
                      std::uint64_t seed, double cov_floor) {
    std::size_t n_obs = 0;
    for (const auto& s : seqs) n_obs += s.size();
    if (n_obs == 0) throw Error(Errc::EmptyTrainingSet, "no observations");
    if (n_states < 1 || n_components < 1) throw Error(Errc::InvalidConfig, "n_states and n_components must be >= 1");
    const std::size_t dim = seqs.front().dim();
    Rng rng(seed);
    // resp[j][s][t]
    std::vector<std::vector<std::vector<double>>> resp(n_states);
    for (auto& r : resp)
        for (const auto& s : seqs) r.emplace_back(s.size());
    std::vector<double> u(n_states);
    for (std::size_t s = 0; s < seqs.size(); ++s) {
        if (seqs[s].dim() != dim) throw Error(Errc::DimensionMismatch, "sequences differ in dimension");
        for (std::size_t t = 0; t < seqs[s].size(); ++t) {
            double total = 0.0;
            for (double& x : u) total += (x = 1.0 - rng.uniform());
            for (std::size_t j = 0; j < n_states; ++j) resp[j][s][t] = u[j] / total;
        }
    }
    ChmmModel m;
    m.n_states = n_states;
    m.obs_dim = dim;
    m.pi.assign(n_states, 1.0 / static_cast<double>(n_states));
    m.trans.assign(n_states, std::vector<double>(n_states, 1.0 / static_cast<double>(n_states)));
    for (std::size_t j = 0; j < n_states; ++j)
        m.emissions.push_back(mixture_from_moments(weighted_moments(seqs, dim, &resp[j], cov_floor), n_components, rng));
    return m;
}

json model_to_json(const ChmmModel& m) {
    json emissions = json::array();
    for (const auto& g : m.emissions)
        emissions.push_back({{"weights", g.weights}, {"means", g.means}, {"diag_covs", g.diag_covs}});
    return json{{"version", 1},        {"n_states", m.n_states}, {"obs_dim", m.obs_dim},
                {"pi", m.pi},          {"trans", m.trans},       {"emissions", std::move(emissions)}};
}

ChmmModel model_from_json(const json& doc) {
    try {
        if (!doc.is_object()) throw Error(Errc::InvalidModel, "model document must be an object");
        if (doc.value("version", 0) != 1) throw Error(Errc::InvalidModel, "unsupported model version");
        ChmmModel m;
        m.n_states = doc.at("n_states").get<std::size_t>();
        m.obs_dim = doc.at("obs_dim").get<std::size_t>();
        m.pi = doc.at("pi").get<std::vector<double>>();
        m.trans = doc.at("trans").get<std::vector<std::vector<double>>>();
        for (const json& e : doc.at("emissions")) {
            GaussianMixture g;
            g.weights = e.at("weights").get<std::vector<double>>();
            g.means = e.at("means").get<std::vector<std::vector<double>>>();
            g.diag_covs = e.at("diag_covs").get<std::vector<std::vector<double>>>();
            m.emissions.push_back(std::move(g));
        }
        validate_model(m);
        return m;
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidModel, e.what());
    }
}

void save_model(const ChmmModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write model '" + path + "'");
    out << model_to_json(m).dump(2) << '\n';
}

ChmmModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open model '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(Errc::InvalidModel, e.what());
    }
    return model_from_json(doc);
}

}  // namespace saup
