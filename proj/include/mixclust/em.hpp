#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mixclust/common.hpp"
#include "mixclust/dataset.hpp"
#include "mixclust/model.hpp"
#include "mixclust/parallel.hpp"
#include "mixclust/rng.hpp"

namespace mixclust {

struct FitConfig {
    int K = 1;
    int restarts = 500;
    int max_iters = 1000;
    double rel_tol = 1e-8;
    std::uint64_t seed = 0;
    Hyperparams hyperparams;

    void validate() const {
        if (K < 1) throw ValueError("K must be >= 1");
        if (restarts < 1) throw ValueError("restarts must be >= 1");
        if (max_iters < 1) throw ValueError("max_iters must be >= 1");
        if (!(rel_tol > 0.0)) throw ValueError("rel_tol must be > 0");
        hyperparams.validate();
    }
};

struct FitResult {
    ModelParams params;
    Responsibilities resp;
    std::vector<int> labels;
    std::vector<double> objective_trace;  // winning restart, one entry per evaluation
    int winning_restart = 0;
    std::vector<double> per_restart_final;
    std::uint64_t seed = 0;

    double objective() const { return per_restart_final[winning_restart]; }
};

/// labels[n] = argmax_k resp[n, k], ties to the lowest cluster index.
inline std::vector<int> hard_assign(const Responsibilities& resp) {
    std::vector<int> labels(resp.N);
    for (int n = 0; n < resp.N; ++n) labels[n] = argmax_lowest(resp.row(n));
    return labels;
}

namespace detail {

/// Observed cells in CSR-by-object form; the hot loops never touch masked
/// storage.
struct DataView {
    int N = 0, R = 0, C = 0;
    std::vector<int> num_off, num_idx;
    std::vector<double> num_val;
    std::vector<int> cat_off, cat_idx, cat_val;
    std::vector<int> category_sizes;
    std::vector<double> global_mean;
    long observed = 0;

    static DataView build(const Dataset& d) {
        DataView v;
        v.N = d.n();
        v.R = d.num_numeric();
        v.C = d.num_categorical();
        v.category_sizes = d.category_sizes();
        v.global_mean = d.numeric_means();
        v.num_off.reserve(v.N + 1);
        v.cat_off.reserve(v.N + 1);
        v.num_off.push_back(0);
        v.cat_off.push_back(0);
        for (int n = 0; n < v.N; ++n) {
            for (int r = 0; r < v.R; ++r)
                if (d.x_observed(n, r)) {
                    v.num_idx.push_back(r);
                    v.num_val.push_back(d.x_at(n, r));
                }
            for (int c = 0; c < v.C; ++c)
                if (d.y_observed(n, c)) {
                    v.cat_idx.push_back(c);
                    v.cat_val.push_back(d.y_at(n, c));
                }
            v.num_off.push_back(static_cast<int>(v.num_idx.size()));
            v.cat_off.push_back(static_cast<int>(v.cat_idx.size()));
        }
        v.observed = static_cast<long>(v.num_idx.size() + v.cat_idx.size());
        return v;
    }
};

/// Density tables rebuilt once per M-step so the E-step is table lookups.
struct LogTables {
    std::vector<double> log_pi;              // K
    std::vector<double> half_log;            // K x R: 0.5 (log lambda - log 2pi)
    std::vector<double> half_lambda;         // K x R
    std::vector<std::vector<std::vector<double>>> log_rho;

    void rebuild(const ModelParams& p) {
        const int K = p.K, R = p.num_numeric();
        log_pi.resize(K);
        half_log.resize(static_cast<std::size_t>(K) * R);
        half_lambda.resize(static_cast<std::size_t>(K) * R);
        log_rho.assign(K, {});
        for (int k = 0; k < K; ++k) {
            log_pi[k] = std::log(p.pi[k]);
            for (int r = 0; r < R; ++r) {
                half_log[static_cast<std::size_t>(k) * R + r] =
                    0.5 * (std::log(p.lambda_at(k, r)) - kLogTwoPi);
                half_lambda[static_cast<std::size_t>(k) * R + r] = 0.5 * p.lambda_at(k, r);
            }
            log_rho[k].resize(p.rho[k].size());
            for (std::size_t c = 0; c < p.rho[k].size(); ++c) {
                log_rho[k][c].resize(p.rho[k][c].size());
                for (std::size_t v = 0; v < p.rho[k][c].size(); ++v)
                    log_rho[k][c][v] = std::log(p.rho[k][c][v]);
            }
        }
    }
};

inline double view_log_density(const DataView& d, int n, int k, const ModelParams& p,
                               const LogTables& t) {
    const int R = d.R;
    double total = 0.0;
    for (int e = d.num_off[n]; e < d.num_off[n + 1]; ++e) {
        const int r = d.num_idx[e];
        const double diff = d.num_val[e] - p.mu_at(k, r);
        total += t.half_log[static_cast<std::size_t>(k) * R + r] -
                 t.half_lambda[static_cast<std::size_t>(k) * R + r] * diff * diff;
    }
    for (int e = d.cat_off[n]; e < d.cat_off[n + 1]; ++e)
        total += t.log_rho[k][d.cat_idx[e]][d.cat_val[e]];
    return total;
}

inline double e_step_view(const DataView& d, const ModelParams& p, const LogTables& t,
                          Responsibilities& resp) {
    const int K = p.K;
    double loglik = 0.0;
    std::vector<double> terms(K);
    for (int n = 0; n < d.N; ++n) {
        for (int k = 0; k < K; ++k) terms[k] = t.log_pi[k] + view_log_density(d, n, k, p, t);
        const double lse = log_sum_exp(terms);
        loglik += lse;
        auto row = resp.row(n);
        if (lse == kNegInf) {
            // No component carries mass; fall back to the mixture weights.
            for (int k = 0; k < K; ++k) row[k] = p.pi[k];
        } else {
            for (int k = 0; k < K; ++k) row[k] = std::exp(terms[k] - lse);
        }
    }
    return loglik;
}

inline ModelParams m_step_view(const DataView& d, const Responsibilities& resp,
                               const Hyperparams& h, const ModelParams& prev) {
    const int K = resp.K, R = d.R, C = d.C;
    ModelParams p;
    p.K = K;
    p.pi.assign(K, 0.0);
    p.mu.assign(static_cast<std::size_t>(K) * R, 0.0);
    p.lambda.assign(static_cast<std::size_t>(K) * R, 0.0);
    p.rho.resize(K);
    for (int k = 0; k < K; ++k) {
        p.rho[k].resize(C);
        for (int c = 0; c < C; ++c) p.rho[k][c].assign(d.category_sizes[c], 0.0);
    }

    // Mixture weights.
    std::vector<double> cluster_mass(K, 0.0);
    for (int n = 0; n < d.N; ++n) {
        auto row = resp.row(n);
        for (int k = 0; k < K; ++k) cluster_mass[k] += row[k];
    }
    for (int k = 0; k < K; ++k) p.pi[k] = cluster_mass[k] / static_cast<double>(d.N);

    // Numeric: accumulate observed weight and weighted sums, then a second
    // pass for the scatter around the new mean.
    std::vector<double> weight(static_cast<std::size_t>(K) * R, 0.0);
    std::vector<double> wsum(static_cast<std::size_t>(K) * R, 0.0);
    for (int n = 0; n < d.N; ++n) {
        auto row = resp.row(n);
        for (int e = d.num_off[n]; e < d.num_off[n + 1]; ++e) {
            const int r = d.num_idx[e];
            const double x = d.num_val[e];
            for (int k = 0; k < K; ++k) {
                weight[static_cast<std::size_t>(k) * R + r] += row[k];
                wsum[static_cast<std::size_t>(k) * R + r] += row[k] * x;
            }
        }
    }
    for (int k = 0; k < K; ++k)
        for (int r = 0; r < R; ++r) {
            const std::size_t i = static_cast<std::size_t>(k) * R + r;
            if (weight[i] < 1e-8) {
                p.mu[i] = prev.mu_at(k, r);
            } else {
                p.mu[i] = wsum[i] / weight[i];
            }
        }
    std::vector<double> scatter(static_cast<std::size_t>(K) * R, 0.0);
    for (int n = 0; n < d.N; ++n) {
        auto row = resp.row(n);
        for (int e = d.num_off[n]; e < d.num_off[n + 1]; ++e) {
            const int r = d.num_idx[e];
            const double x = d.num_val[e];
            for (int k = 0; k < K; ++k) {
                const double diff = x - p.mu[static_cast<std::size_t>(k) * R + r];
                scatter[static_cast<std::size_t>(k) * R + r] += row[k] * diff * diff;
            }
        }
    }
    for (int k = 0; k < K; ++k)
        for (int r = 0; r < R; ++r) {
            const std::size_t i = static_cast<std::size_t>(k) * R + r;
            if (weight[i] < 1e-8) {
                p.lambda[i] = h.prior_mode(k, r);
            } else {
                p.lambda[i] = (h.shape(k, r) - 1.0 + 0.5 * weight[i]) /
                              (h.rate(k, r) + 0.5 * scatter[i]);
            }
        }

    // Categorical: alpha-smoothed weighted counts per category.
    for (int n = 0; n < d.N; ++n) {
        auto row = resp.row(n);
        for (int e = d.cat_off[n]; e < d.cat_off[n + 1]; ++e) {
            const int c = d.cat_idx[e];
            const int v = d.cat_val[e];
            for (int k = 0; k < K; ++k) p.rho[k][c][v] += row[k];
        }
    }
    for (int k = 0; k < K; ++k)
        for (int c = 0; c < C; ++c) {
            const int V = d.category_sizes[c];
            double mass = 0.0;
            for (double cnt : p.rho[k][c]) mass += cnt;
            const double denom = h.alpha * V + mass;
            if (denom <= 0.0) {
                for (double& pr : p.rho[k][c]) pr = 1.0 / V;
            } else {
                for (double& pr : p.rho[k][c]) pr = (h.alpha + pr) / denom;
            }
        }
    return p;
}

/// Baseline parameters used as the `prev` fallback of the first M-step:
/// global observed means, prior-mode precisions, uniform tables and weights.
inline ModelParams baseline_params(const DataView& d, int K, const Hyperparams& h) {
    ModelParams p;
    p.K = K;
    p.pi.assign(K, 1.0 / K);
    p.mu.resize(static_cast<std::size_t>(K) * d.R);
    p.lambda.resize(static_cast<std::size_t>(K) * d.R);
    for (int k = 0; k < K; ++k)
        for (int r = 0; r < d.R; ++r) {
            p.mu[static_cast<std::size_t>(k) * d.R + r] = d.global_mean[r];
            p.lambda[static_cast<std::size_t>(k) * d.R + r] = h.prior_mode(k, r);
        }
    p.rho.resize(K);
    for (int k = 0; k < K; ++k) {
        p.rho[k].resize(d.C);
        for (int c = 0; c < d.C; ++c)
            p.rho[k][c].assign(d.category_sizes[c], 1.0 / d.category_sizes[c]);
    }
    return p;
}

/// Revives clusters whose total responsibility underflowed: mean from a
/// uniformly chosen object (missing dims from the global mean), prior-mode
/// precision, uniform tables, and one object's worth of weight so the
/// component can actually reclaim mass.
inline void reseed_starved_clusters(const DataView& d, ModelParams& p, const Hyperparams& h,
                                    const Responsibilities& resp, Rng& rng) {
    const int K = p.K, R = d.R;
    std::vector<double> cluster_mass(K, 0.0);
    for (int n = 0; n < d.N; ++n) {
        auto row = resp.row(n);
        for (int k = 0; k < K; ++k) cluster_mass[k] += row[k];
    }
    bool reseeded = false;
    for (int k = 0; k < K; ++k) {
        if (cluster_mass[k] >= 1e-8) continue;
        const int pick = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(d.N)));
        for (int r = 0; r < R; ++r) p.mu[static_cast<std::size_t>(k) * R + r] = d.global_mean[r];
        for (int e = d.num_off[pick]; e < d.num_off[pick + 1]; ++e)
            p.mu[static_cast<std::size_t>(k) * R + d.num_idx[e]] = d.num_val[e];
        for (int r = 0; r < R; ++r)
            p.lambda[static_cast<std::size_t>(k) * R + r] = h.prior_mode(k, r);
        for (int c = 0; c < d.C; ++c)
            p.rho[k][c].assign(d.category_sizes[c], 1.0 / d.category_sizes[c]);
        p.pi[k] = 1.0 / static_cast<double>(d.N);
        reseeded = true;
    }
    if (reseeded) {
        double total = 0.0;
        for (double w : p.pi) total += w;
        for (double& w : p.pi) w /= total;
    }
}

struct RestartOutcome {
    ModelParams params;
    Responsibilities resp;
    std::vector<double> trace;
    double final_objective = kNegInf;
};

/// One EM run from given initial responsibilities. The trace records the
/// objective of the parameters produced so far, evaluated before each M-step,
/// so consecutive entries obey the EM monotonicity guarantee.
inline RestartOutcome run_restart(const DataView& d, const FitConfig& cfg,
                                  const Responsibilities& init_resp, Rng reseed_rng) {
    RestartOutcome out;
    ModelParams params =
        m_step_view(d, init_resp, cfg.hyperparams, baseline_params(d, cfg.K, cfg.hyperparams));
    reseed_starved_clusters(d, params, cfg.hyperparams, init_resp, reseed_rng);

    LogTables tables;
    Responsibilities resp(d.N, cfg.K);
    double prev_objective = kNegInf;
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        tables.rebuild(params);
        const double loglik = e_step_view(d, params, tables, resp);
        const double objective = loglik + log_prior(params, cfg.hyperparams);
        out.trace.push_back(objective);
        if (iter > 0 && relative_change(objective, prev_objective) < cfg.rel_tol) break;
        prev_objective = objective;
        if (iter + 1 == cfg.max_iters) break;
        params = m_step_view(d, resp, cfg.hyperparams, params);
        reseed_starved_clusters(d, params, cfg.hyperparams, resp, reseed_rng);
    }
    out.params = std::move(params);
    out.resp = std::move(resp);
    out.final_objective = out.trace.back();
    return out;
}

/// Dirichlet(1) responsibility row per object. The stream is keyed on
/// (seed, restart, object id), so initialization commutes with any
/// reordering of the objects.
inline Responsibilities random_init_resp(const DataView& d, const std::vector<std::string>& ids,
                                         std::uint64_t seed, int restart, int K) {
    Responsibilities resp(d.N, K);
    for (int n = 0; n < d.N; ++n) {
        Rng rng = Rng::from_seed(
            mix_seed({seed, 0x696e6974ULL, static_cast<std::uint64_t>(restart), fnv1a64(ids[n])}));
        rng.dirichlet1(resp.row(n));
    }
    return resp;
}

}  // namespace detail

/// Soft assignment under fixed parameters. Returns the responsibilities and
/// the data log-likelihood (the non-prior part of the objective).
inline std::pair<Responsibilities, double> e_step(const Dataset& d, const ModelParams& p) {
    if (p.num_numeric() != d.num_numeric() || p.num_categorical() != d.num_categorical())
        throw ValueError("model and dataset feature shapes differ");
    auto view = detail::DataView::build(d);
    detail::LogTables tables;
    tables.rebuild(p);
    Responsibilities resp(view.N, p.K);
    double loglik = detail::e_step_view(view, p, tables, resp);
    return {std::move(resp), loglik};
}

/// MAP parameter update for fixed responsibilities. Numeric features with
/// (nearly) zero observed weight in a cluster keep the previous mean and
/// fall back to the prior-mode precision.
inline ModelParams m_step(const Dataset& d, const Responsibilities& resp, const Hyperparams& h,
                          const ModelParams& prev) {
    if (resp.N != d.n()) throw ValueError("responsibilities and dataset sizes differ");
    h.check_shape(resp.K, d.num_numeric());
    auto view = detail::DataView::build(d);
    return detail::m_step_view(view, resp, h, prev);
}

/// Single EM run from caller-supplied initial responsibilities; exposed for
/// custom initialization schemes and for exercising degenerate starts.
inline FitResult fit_from(const Dataset& d, const FitConfig& cfg,
                          const Responsibilities& init_resp) {
    cfg.validate();
    cfg.hyperparams.check_shape(cfg.K, d.num_numeric());
    auto view = detail::DataView::build(d);
    if (view.observed == 0) throw FitError("no evidence: dataset has zero observed cells");
    if (d.n() < cfg.K)
        throw FitError("dataset has " + std::to_string(d.n()) + " objects, fewer than K=" +
                       std::to_string(cfg.K));
    Rng reseed_rng = Rng::from_seed(mix_seed({cfg.seed, 0x7265736565ULL, 0}));
    auto outcome = detail::run_restart(view, cfg, init_resp, reseed_rng);
    FitResult result;
    result.params = std::move(outcome.params);
    result.resp = std::move(outcome.resp);
    result.labels = hard_assign(result.resp);
    result.objective_trace = std::move(outcome.trace);
    result.winning_restart = 0;
    result.per_restart_final = {outcome.final_objective};
    result.seed = cfg.seed;
    return result;
}

/// Multi-restart MAP-EM. Each restart draws its own initialization stream
/// from (seed, restart index) and runs to convergence; the best final
/// objective wins, ties to the lowest restart index. Results are identical
/// for any `jobs` value.
inline FitResult fit(const Dataset& d, const FitConfig& cfg, int jobs = 1) {
    cfg.validate();
    cfg.hyperparams.check_shape(cfg.K, d.num_numeric());
    auto view = detail::DataView::build(d);
    if (view.observed == 0) throw FitError("no evidence: dataset has zero observed cells");
    if (d.n() < cfg.K)
        throw FitError("dataset has " + std::to_string(d.n()) + " objects, fewer than K=" +
                       std::to_string(cfg.K));

    auto run_one = [&](int restart) {
        auto init = detail::random_init_resp(view, d.ids, cfg.seed, restart, cfg.K);
        Rng reseed_rng = Rng::from_seed(
            mix_seed({cfg.seed, 0x7265736565ULL, static_cast<std::uint64_t>(restart)}));
        return detail::run_restart(view, cfg, init, reseed_rng);
    };

    // Restarts are pure functions of (seed, index); keep only the final
    // objectives and recompute the winner instead of holding every
    // responsibility matrix alive.
    std::vector<double> finals(cfg.restarts, kNegInf);
    parallel_for(jobs, static_cast<std::size_t>(cfg.restarts), [&](std::size_t i) {
        finals[i] = run_one(static_cast<int>(i)).final_objective;
    });

    int best = 0;
    for (int i = 1; i < cfg.restarts; ++i)
        if (finals[i] > finals[best]) best = i;
    auto winner = run_one(best);

    FitResult result;
    result.params = std::move(winner.params);
    result.resp = std::move(winner.resp);
    result.labels = hard_assign(result.resp);
    result.objective_trace = std::move(winner.trace);
    result.winning_restart = best;
    result.per_restart_final = std::move(finals);
    result.seed = cfg.seed;
    return result;
}

/// Held-out log-likelihood of selected objects under fixed parameters; prior
/// terms excluded. Objects with nothing observed contribute log sum_k pi_k.
inline double log_likelihood_of(const Dataset& d, const std::vector<int>& objects,
                                const ModelParams& p) {
    std::vector<double> terms(p.K);
    double total = 0.0;
    for (int n : objects) {
        for (int k = 0; k < p.K; ++k)
            terms[k] = std::log(p.pi[k]) + log_component_density(d, n, k, p);
        total += log_sum_exp(terms);
    }
    return total;
}

}  // namespace mixclust
