#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixclust/common.hpp"
#include "mixclust/dataset.hpp"

namespace mixclust {

/// Gamma(a, b) is shape-rate; its mode (a - 1)/b is the precision a cluster
/// falls back to when it has no evidence for a feature. alpha is the
/// categorical pseudo-count regularizer, reported in every output.
struct Hyperparams {
    double a = 2.0;
    double b = 0.1;
    double alpha = 0.01;

    // Optional K x R overrides; empty means broadcast the scalars.
    std::vector<std::vector<double>> a_matrix;
    std::vector<std::vector<double>> b_matrix;

    double shape(int k, int r) const {
        return a_matrix.empty() ? a : a_matrix[k][r];
    }
    double rate(int k, int r) const {
        return b_matrix.empty() ? b : b_matrix[k][r];
    }
    double prior_mode(int k, int r) const {
        return (shape(k, r) - 1.0) / rate(k, r);
    }

    void validate() const {
        auto check = [](double shape_v, double rate_v) {
            if (!(shape_v > 1.0))
                throw ValueError("hyperparameter a must be > 1, got " + std::to_string(shape_v));
            if (!(rate_v > 0.0))
                throw ValueError("hyperparameter b must be > 0, got " + std::to_string(rate_v));
        };
        check(a, b);
        if (!(alpha >= 0.0)) throw ValueError("hyperparameter alpha must be >= 0");
        if (a_matrix.size() != b_matrix.size())
            throw ValueError("hyperparameter matrices a and b must have equal shapes");
        for (std::size_t k = 0; k < a_matrix.size(); ++k) {
            if (a_matrix[k].size() != b_matrix[k].size())
                throw ValueError("hyperparameter matrices a and b must have equal shapes");
            for (std::size_t r = 0; r < a_matrix[k].size(); ++r) check(a_matrix[k][r], b_matrix[k][r]);
        }
    }

    /// Matrix overrides, when present, must match the model shape.
    void check_shape(int K, int R) const {
        if (a_matrix.empty()) return;
        bool ok = static_cast<int>(a_matrix.size()) == K;
        for (const auto& row : a_matrix) ok = ok && static_cast<int>(row.size()) == R;
        if (!ok)
            throw ValueError("hyperparameter matrices must be K x R = " + std::to_string(K) +
                             " x " + std::to_string(R));
    }
};

/// Mixture parameters. mu/lambda are K x R row-major; rho[k][c] is a
/// probability vector over the categories of feature c.
struct ModelParams {
    int K = 0;
    std::vector<double> pi;
    std::vector<double> mu;
    std::vector<double> lambda;
    std::vector<std::vector<std::vector<double>>> rho;

    int num_numeric() const {
        return K > 0 ? static_cast<int>(mu.size()) / K : 0;
    }
    int num_categorical() const {
        return rho.empty() ? 0 : static_cast<int>(rho.front().size());
    }
    double mu_at(int k, int r) const { return mu[static_cast<std::size_t>(k) * num_numeric() + r]; }
    double lambda_at(int k, int r) const { return lambda[static_cast<std::size_t>(k) * num_numeric() + r]; }

    void validate() const {
        if (K < 1) throw ValueError("K must be >= 1");
        if (static_cast<int>(pi.size()) != K) throw ValueError("pi must have K entries");
        double total = 0.0;
        for (double w : pi) {
            if (!(w >= 0.0)) throw ValueError("pi entries must be >= 0");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12) throw ValueError("pi must sum to 1 within 1e-12");
        if (mu.size() != lambda.size()) throw ValueError("mu and lambda must have equal shapes");
        for (double l : lambda)
            if (!(l > 0.0) || !std::isfinite(l))
                throw ValueError("lambda entries must be positive and finite");
        if (static_cast<int>(rho.size()) != K) throw ValueError("rho must have K cluster slots");
        for (const auto& cluster : rho)
            for (const auto& probs : cluster) {
                double s = 0.0;
                for (double p : probs) {
                    if (!(p >= 0.0)) throw ValueError("rho entries must be >= 0");
                    s += p;
                }
                if (std::abs(s - 1.0) > 1e-12) throw ValueError("each rho vector must sum to 1 within 1e-12");
            }
    }

    /// Reorders clusters: entry i of the result is cluster perm[i] of *this.
    ModelParams permuted(const std::vector<int>& perm) const {
        ModelParams out;
        out.K = K;
        const int R = num_numeric();
        out.mu.resize(mu.size());
        out.lambda.resize(lambda.size());
        out.rho.resize(K);
        out.pi.resize(K);
        for (int k = 0; k < K; ++k) {
            out.pi[k] = pi[perm[k]];
            out.rho[k] = rho[perm[k]];
            for (int r = 0; r < R; ++r) {
                out.mu[static_cast<std::size_t>(k) * R + r] = mu_at(perm[k], r);
                out.lambda[static_cast<std::size_t>(k) * R + r] = lambda_at(perm[k], r);
            }
        }
        return out;
    }
};

/// N x K posterior membership matrix; rows sum to 1.
struct Responsibilities {
    int N = 0;
    int K = 0;
    std::vector<double> values;

    Responsibilities() = default;
    Responsibilities(int n, int k) : N(n), K(k), values(static_cast<std::size_t>(n) * k, 0.0) {}

    double at(int n, int k) const { return values[static_cast<std::size_t>(n) * K + k]; }
    double& at(int n, int k) { return values[static_cast<std::size_t>(n) * K + k]; }
    std::span<const double> row(int n) const { return {values.data() + static_cast<std::size_t>(n) * K, static_cast<std::size_t>(K)}; }
    std::span<double> row(int n) { return {values.data() + static_cast<std::size_t>(n) * K, static_cast<std::size_t>(K)}; }
};

/// log N(x | mu, lambda) with lambda a precision.
inline double log_normal_density(double x, double mu, double lambda) {
    double d = x - mu;
    return 0.5 * (std::log(lambda) - kLogTwoPi) - 0.5 * lambda * d * d;
}

/// log Gamma(lambda | a, b), shape-rate.
inline double log_gamma_density(double lambda, double a, double b) {
    return a * std::log(b) - std::lgamma(a) + (a - 1.0) * std::log(lambda) - b * lambda;
}

/// Per-object, per-cluster log density with missing features integrated out:
/// only the observed cells of object n contribute.
inline double log_component_density(const Dataset& d, int n, int k, const ModelParams& p) {
    double total = 0.0;
    const int R = d.num_numeric(), C = d.num_categorical();
    for (int r = 0; r < R; ++r)
        if (d.x_observed(n, r))
            total += log_normal_density(d.x_at(n, r), p.mu_at(k, r), p.lambda_at(k, r));
    for (int c = 0; c < C; ++c)
        if (d.y_observed(n, c))
            total += std::log(p.rho[k][c][d.y_at(n, c)]);
    return total;
}

/// Log prior: Gamma terms on every precision plus the alpha pseudo-count
/// term on every categorical probability. The alpha term is skipped when
/// alpha == 0 so a zero probability cannot poison the objective through
/// 0 * log 0.
inline double log_prior(const ModelParams& p, const Hyperparams& h) {
    double total = 0.0;
    const int R = p.num_numeric();
    for (int k = 0; k < p.K; ++k)
        for (int r = 0; r < R; ++r)
            total += log_gamma_density(p.lambda_at(k, r), h.shape(k, r), h.rate(k, r));
    if (h.alpha > 0.0) {
        double logs = 0.0;
        for (const auto& cluster : p.rho)
            for (const auto& probs : cluster)
                for (double v : probs) logs += std::log(v);
        total += h.alpha * logs;
    }
    return total;
}

/// Data log-likelihood sum_n log sum_k pi_k exp(log_component_density), via
/// log-sum-exp.
inline double log_likelihood(const Dataset& d, const ModelParams& p) {
    std::vector<double> terms(p.K);
    double total = 0.0;
    for (int n = 0; n < d.n(); ++n) {
        for (int k = 0; k < p.K; ++k)
            terms[k] = std::log(p.pi[k]) + log_component_density(d, n, k, p);
        total += log_sum_exp(terms);
    }
    return total;
}

/// The regularized objective the EM loop maximizes.
inline double log_map_objective(const Dataset& d, const ModelParams& p, const Hyperparams& h) {
    if (p.num_numeric() != d.num_numeric() || p.num_categorical() != d.num_categorical())
        throw ValueError("model and dataset feature shapes differ");
    h.check_shape(p.K, p.num_numeric());
    return log_likelihood(d, p) + log_prior(p, h);
}

// ---------------------------------------------------------------------------
// JSON serialization (versioned).

inline constexpr const char* kModelFormat = "mixclust.model/1";

inline nlohmann::json hyperparams_to_json(const Hyperparams& h) {
    nlohmann::json j{{"a", h.a}, {"b", h.b}, {"alpha", h.alpha}};
    if (!h.a_matrix.empty()) {
        j["a_matrix"] = h.a_matrix;
        j["b_matrix"] = h.b_matrix;
    }
    return j;
}

inline Hyperparams hyperparams_from_json(const nlohmann::json& j) {
    Hyperparams h;
    h.a = j.at("a").get<double>();
    h.b = j.at("b").get<double>();
    h.alpha = j.at("alpha").get<double>();
    if (j.contains("a_matrix")) {
        h.a_matrix = j.at("a_matrix").get<std::vector<std::vector<double>>>();
        h.b_matrix = j.at("b_matrix").get<std::vector<std::vector<double>>>();
    }
    h.validate();
    return h;
}

inline nlohmann::json model_to_json(const ModelParams& p, const Hyperparams& h,
                                    std::uint64_t seed, double objective,
                                    const Dataset* d = nullptr) {
    const int R = p.num_numeric();
    nlohmann::json mu = nlohmann::json::array();
    nlohmann::json lambda = nlohmann::json::array();
    for (int k = 0; k < p.K; ++k) {
        nlohmann::json mu_row = nlohmann::json::array();
        nlohmann::json la_row = nlohmann::json::array();
        for (int r = 0; r < R; ++r) {
            mu_row.push_back(p.mu_at(k, r));
            la_row.push_back(p.lambda_at(k, r));
        }
        mu.push_back(std::move(mu_row));
        lambda.push_back(std::move(la_row));
    }
    nlohmann::json j{
        {"format", kModelFormat},
        {"K", p.K},
        {"pi", p.pi},
        {"mu", std::move(mu)},
        {"lambda", std::move(lambda)},
        {"rho", p.rho},
        {"hyperparams", hyperparams_to_json(h)},
        {"seed", seed},
        {"objective", objective},
    };
    if (d) {
        nlohmann::json numeric = nlohmann::json::array();
        for (const auto& s : d->numeric_specs) numeric.push_back(s.name);
        nlohmann::json categorical = nlohmann::json::array();
        for (const auto& s : d->categorical_specs)
            categorical.push_back({{"name", s.name}, {"categories", s.categories}});
        j["numeric_features"] = std::move(numeric);
        j["categorical_features"] = std::move(categorical);
    }
    return j;
}

inline ModelParams model_from_json(const nlohmann::json& j) {
    if (j.at("format").get<std::string>() != kModelFormat)
        throw SchemaError("unsupported model document format: " + j.at("format").get<std::string>());
    ModelParams p;
    p.K = j.at("K").get<int>();
    p.pi = j.at("pi").get<std::vector<double>>();
    auto mu = j.at("mu").get<std::vector<std::vector<double>>>();
    auto lambda = j.at("lambda").get<std::vector<std::vector<double>>>();
    for (const auto& row : mu) p.mu.insert(p.mu.end(), row.begin(), row.end());
    for (const auto& row : lambda) p.lambda.insert(p.lambda.end(), row.begin(), row.end());
    p.rho = j.at("rho").get<std::vector<std::vector<std::vector<double>>>>();
    p.validate();
    return p;
}

}  // namespace mixclust
