#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "mixclust/common.hpp"
#include "mixclust/dataset.hpp"
#include "mixclust/model.hpp"
#include "mixclust/rng.hpp"

namespace mixclust {

/// Cell masking style: independent per-cell coin flips, or one contiguous
/// block of features per object (fragment-style damage) covering the same
/// expected share of cells.
enum class MissingPattern { random, block };

inline MissingPattern parse_missing_pattern(const std::string& name) {
    if (name == "random") return MissingPattern::random;
    if (name == "block") return MissingPattern::block;
    throw UsageError("unknown missing pattern '" + name + "' (expected random or block)");
}

/// Sampling spec for the generative model the fitter assumes: cluster draw
/// from pi, independent Gaussian numerics, independent categoricals, and
/// cell masking per `missing_pattern`.
struct GeneratorSpec {
    int K = 2;
    int N = 100;
    int R = 2;
    int C = 2;
    std::vector<int> category_sizes;       // per categorical feature; default filled with 3
    std::optional<ModelParams> params;     // explicit truth; otherwise drawn
    double separation = 5.0;               // min pairwise mean distance in units of feature sigma
    std::vector<double> masses;            // unnormalized pi; empty means uniform
    double missing_rate = 0.0;
    MissingPattern missing_pattern = MissingPattern::random;
    std::uint64_t seed = 0;

    void validate() const {
        if (K < 1 || N < 1 || R < 0 || C < 0) throw ValueError("invalid generator dimensions");
        if (!(missing_rate >= 0.0 && missing_rate < 1.0))
            throw ValueError("missing_rate must be in [0, 1)");
        if (!category_sizes.empty() && static_cast<int>(category_sizes.size()) != C)
            throw ValueError("category_sizes must have C entries");
        for (int v : category_sizes)
            if (v < 2) throw ValueError("category sizes must be >= 2");
        if (!masses.empty() && static_cast<int>(masses.size()) != K)
            throw ValueError("masses must have K entries");
        if (params) params->validate();
    }
};

struct SynthResult {
    Dataset data;
    std::vector<int> labels;
    ModelParams truth;
};

namespace detail {

/// Truth parameters when none are supplied: per-feature precision shared
/// across clusters, sorted mean positions spaced at least separation * sigma
/// apart and shuffled onto clusters, Dirichlet(1) categorical tables.
inline ModelParams draw_params(const GeneratorSpec& spec, const std::vector<int>& sizes, Rng& rng) {
    ModelParams p;
    p.K = spec.K;
    p.pi.assign(spec.K, 1.0 / spec.K);
    if (!spec.masses.empty()) {
        double total = 0.0;
        for (double m : spec.masses) total += m;
        for (int k = 0; k < spec.K; ++k) p.pi[k] = spec.masses[k] / total;
    }
    p.mu.resize(static_cast<std::size_t>(spec.K) * spec.R);
    p.lambda.resize(static_cast<std::size_t>(spec.K) * spec.R);
    for (int r = 0; r < spec.R; ++r) {
        const double lambda = 0.5 + 1.5 * rng.uniform01();
        const double sigma = 1.0 / std::sqrt(lambda);
        std::vector<double> positions(spec.K);
        double cursor = rng.normal();
        positions[0] = cursor;
        for (int k = 1; k < spec.K; ++k) {
            cursor += spec.separation * sigma * (1.0 + 0.5 * rng.uniform01());
            positions[k] = cursor;
        }
        std::vector<int> perm(spec.K);
        for (int k = 0; k < spec.K; ++k) perm[k] = k;
        for (int k = spec.K - 1; k > 0; --k)
            std::swap(perm[k], perm[rng.uniform_below(static_cast<std::uint64_t>(k) + 1)]);
        for (int k = 0; k < spec.K; ++k) {
            p.mu[static_cast<std::size_t>(k) * spec.R + r] = positions[perm[k]];
            p.lambda[static_cast<std::size_t>(k) * spec.R + r] = lambda;
        }
    }
    p.rho.resize(spec.K);
    for (int k = 0; k < spec.K; ++k) {
        p.rho[k].resize(spec.C);
        for (int c = 0; c < spec.C; ++c) {
            p.rho[k][c].resize(sizes[c]);
            rng.dirichlet1(p.rho[k][c]);
        }
    }
    return p;
}

}  // namespace detail

/// Samples a corpus from the spec. Draw order is pinned (params, labels,
/// numerics, categoricals, mask), so results are a pure function of the
/// spec. The true label rides along as a meta:truth annotation in addition
/// to the returned vector.
inline SynthResult generate(const GeneratorSpec& spec) {
    spec.validate();
    std::vector<int> sizes = spec.category_sizes;
    if (sizes.empty()) sizes.assign(spec.C, 3);
    Rng rng = Rng::from_seed(mix_seed({spec.seed, 0x73796e7468ULL}));

    SynthResult out;
    out.truth = spec.params ? *spec.params : detail::draw_params(spec, sizes, rng);
    if (out.truth.num_numeric() != spec.R || out.truth.num_categorical() != spec.C ||
        out.truth.K != spec.K)
        throw ValueError("explicit params do not match generator dimensions");

    Dataset& d = out.data;
    for (int r = 0; r < spec.R; ++r) {
        d.numeric_specs.push_back({"num_" + std::to_string(r + 1), FeatureKind::numeric, {}, ""});
        d.column_order.push_back({ColumnRef::Kind::numeric, r});
    }
    for (int c = 0; c < spec.C; ++c) {
        FeatureSpec s{"cat_" + std::to_string(c + 1), FeatureKind::categorical, {}, ""};
        for (int v = 0; v < sizes[c]; ++v) s.categories.push_back("v" + std::to_string(v + 1));
        d.categorical_specs.push_back(std::move(s));
        d.column_order.push_back({ColumnRef::Kind::categorical, c});
    }
    d.annotation_keys.push_back("truth");
    d.column_order.push_back({ColumnRef::Kind::meta, 0});

    const int width = spec.N >= 10000 ? 5 : 4;
    d.x.assign(static_cast<std::size_t>(spec.N) * spec.R, 0.0);
    d.x_obs.assign(static_cast<std::size_t>(spec.N) * spec.R, 0);
    d.y.assign(static_cast<std::size_t>(spec.N) * spec.C, 0);
    d.y_obs.assign(static_cast<std::size_t>(spec.N) * spec.C, 0);

    out.labels.resize(spec.N);
    for (int n = 0; n < spec.N; ++n) out.labels[n] = rng.categorical(out.truth.pi);

    for (int n = 0; n < spec.N; ++n) {
        const int z = out.labels[n];
        char buf[32];
        std::snprintf(buf, sizeof(buf), "obj_%0*d", width, n + 1);
        d.ids.push_back(buf);
        for (int r = 0; r < spec.R; ++r) {
            const double sigma = 1.0 / std::sqrt(out.truth.lambda_at(z, r));
            d.set_x(n, r, out.truth.mu_at(z, r) + sigma * rng.normal());
        }
        for (int c = 0; c < spec.C; ++c) d.set_y(n, c, rng.categorical(out.truth.rho[z][c]));
        d.annotations.push_back({std::to_string(z)});
    }

    if (spec.missing_rate > 0.0) {
        const int F = spec.R + spec.C;
        auto mask_cell = [&](int n, int f) {
            if (f < spec.R)
                d.x_obs[static_cast<std::size_t>(n) * spec.R + f] = 0;
            else
                d.y_obs[static_cast<std::size_t>(n) * spec.C + (f - spec.R)] = 0;
        };
        if (spec.missing_pattern == MissingPattern::random) {
            for (int n = 0; n < spec.N; ++n)
                for (int f = 0; f < F; ++f)
                    if (rng.uniform01() < spec.missing_rate) mask_cell(n, f);
        } else {
            // One contiguous block per object (wrapping), length chosen so the
            // overall missing share matches the requested rate.
            const int block = std::max(1, static_cast<int>(std::lround(spec.missing_rate * F)));
            for (int n = 0; n < spec.N; ++n) {
                const int start = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(F)));
                for (int offset = 0; offset < block; ++offset) mask_cell(n, (start + offset) % F);
            }
        }
    }
    return out;
}

inline constexpr const char* kGeneratorSpecFormat = "mixclust.generator/1";

inline nlohmann::json generator_spec_to_json(const GeneratorSpec& spec) {
    nlohmann::json j{{"format", kGeneratorSpecFormat},
                     {"K", spec.K},
                     {"N", spec.N},
                     {"num_numeric", spec.R},
                     {"num_categorical", spec.C},
                     {"category_sizes", spec.category_sizes},
                     {"separation", spec.separation},
                     {"masses", spec.masses},
                     {"missing_rate", spec.missing_rate},
                     {"missing_pattern",
                      spec.missing_pattern == MissingPattern::random ? "random" : "block"},
                     {"seed", spec.seed}};
    if (spec.params) j["params"] = model_to_json(*spec.params, Hyperparams{}, spec.seed, 0.0);
    return j;
}

inline GeneratorSpec generator_spec_from_json(const nlohmann::json& j) {
    if (j.at("format").get<std::string>() != kGeneratorSpecFormat)
        throw SchemaError("unsupported generator spec format: " +
                          j.at("format").get<std::string>());
    GeneratorSpec spec;
    spec.K = j.at("K").get<int>();
    spec.N = j.at("N").get<int>();
    spec.R = j.at("num_numeric").get<int>();
    spec.C = j.at("num_categorical").get<int>();
    if (j.contains("category_sizes"))
        spec.category_sizes = j.at("category_sizes").get<std::vector<int>>();
    if (j.contains("separation")) spec.separation = j.at("separation").get<double>();
    if (j.contains("masses")) spec.masses = j.at("masses").get<std::vector<double>>();
    if (j.contains("missing_rate")) spec.missing_rate = j.at("missing_rate").get<double>();
    if (j.contains("missing_pattern"))
        spec.missing_pattern = parse_missing_pattern(j.at("missing_pattern").get<std::string>());
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("params")) spec.params = model_from_json(j.at("params"));
    spec.validate();
    return spec;
}

/// Built-in preset: 162 objects, 12 numeric + 21 categorical features, 37%
/// missing cells, four clusters with masses proportional to 67/57/19/19 and
/// well-separated means. The shape the acceptance experiments run on.
inline GeneratorSpec sparse162_preset(std::uint64_t seed) {
    GeneratorSpec spec;
    spec.K = 4;
    spec.N = 162;
    spec.R = 12;
    spec.C = 21;
    spec.category_sizes.assign(spec.C, 3);
    spec.masses = {67.0, 57.0, 19.0, 19.0};
    spec.missing_rate = 0.37;
    spec.separation = 5.0;
    spec.seed = seed;
    return spec;
}

}  // namespace mixclust
