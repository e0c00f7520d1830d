#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixclust/common.hpp"
#include "mixclust/dataset.hpp"
#include "mixclust/em.hpp"
#include "mixclust/selection.hpp"

namespace mixclust {

struct BinnedColumn {
    std::vector<int> bin;
    std::vector<std::uint8_t> observed;
    int num_bins = 0;
};

/// Equal-frequency binning over the observed values; missing cells stay
/// missing. Cut points sit at the quantile order statistics, duplicates are
/// merged, and bin ids are compacted, so an all-equal column collapses to a
/// single bin.
inline BinnedColumn bin_numeric(const std::vector<double>& values,
                                const std::vector<std::uint8_t>& observed, int bins) {
    if (bins < 2) throw ValueError("bins must be >= 2");
    BinnedColumn out;
    out.bin.assign(values.size(), 0);
    out.observed = observed;
    std::vector<double> sorted;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (observed[i]) sorted.push_back(values[i]);
    if (sorted.empty()) return out;
    std::sort(sorted.begin(), sorted.end());
    const int m = static_cast<int>(sorted.size());

    std::vector<double> cuts;  // upper-inclusive boundaries
    for (int i = 1; i < bins; ++i) {
        const int idx = static_cast<int>(static_cast<long>(i) * m / bins);
        if (idx >= 1) cuts.push_back(sorted[idx - 1]);
    }
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::vector<int> used;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!observed[i]) continue;
        const int raw = static_cast<int>(
            std::lower_bound(cuts.begin(), cuts.end(), values[i]) - cuts.begin());
        out.bin[i] = raw;
        used.push_back(raw);
    }
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    std::vector<int> remap(cuts.size() + 1, 0);
    for (int j = 0; j < static_cast<int>(used.size()); ++j) remap[used[j]] = j;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (observed[i]) out.bin[i] = remap[out.bin[i]];
    out.num_bins = static_cast<int>(used.size());
    return out;
}

/// Empirical mutual information (nats) between labels and a discrete feature,
/// restricted to rows where the feature is observed; clipped at zero against
/// rounding. At least one observed row is required.
inline double mutual_information(const std::vector<int>& labels, const std::vector<int>& feature,
                                 const std::vector<std::uint8_t>& observed) {
    int max_z = 0, max_v = 0;
    long n = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!observed[i]) continue;
        max_z = std::max(max_z, labels[i]);
        max_v = std::max(max_v, feature[i]);
        ++n;
    }
    if (n == 0) throw ValueError("mutual information undefined: no observed values");
    const int Z = max_z + 1, V = max_v + 1;
    std::vector<long> joint(static_cast<std::size_t>(Z) * V, 0);
    std::vector<long> z_count(Z, 0), v_count(V, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!observed[i]) continue;
        ++joint[static_cast<std::size_t>(labels[i]) * V + feature[i]];
        ++z_count[labels[i]];
        ++v_count[feature[i]];
    }
    double mi = 0.0;
    const double dn = static_cast<double>(n);
    for (int z = 0; z < Z; ++z)
        for (int v = 0; v < V; ++v) {
            const long c = joint[static_cast<std::size_t>(z) * V + v];
            if (c == 0) continue;
            mi += (static_cast<double>(c) / dn) *
                  std::log(static_cast<double>(c) * dn /
                           (static_cast<double>(z_count[z]) * static_cast<double>(v_count[v])));
        }
    return std::max(mi, 0.0);
}

struct RankConfig {
    int folds = 5;
    int bins = 5;
    FitConfig fit;                    // carries K, restarts, seed, hyperparams
    bool missing_as_category = false; // treat missing as an extra category for MI
    bool assign_all_objects = false;  // score all objects under the fold model, not just training
};

struct RankReport {
    struct Feature {
        std::string name;
        FeatureKind kind = FeatureKind::numeric;
        double sparsity = 0.0;
        std::vector<std::optional<double>> fold_mi;
        std::vector<std::optional<int>> fold_rank;
        std::optional<double> avg_rank;  // harmonic mean of defined fold ranks
    };
    std::vector<Feature> features;
    int folds = 0;
    int bins = 0;
    int K = 0;
    bool missing_as_category = false;
    bool assign_all_objects = false;
    std::uint64_t seed = 0;
    double alpha = 0.0;
};

namespace detail {

/// Competition ranking over descending MI: rank = 1 + count of strictly
/// greater values, so ties share the better rank; order among ties follows
/// feature index.
inline std::vector<std::optional<int>> competition_ranks(
    const std::vector<std::optional<double>>& mi) {
    std::vector<std::optional<int>> ranks(mi.size());
    for (std::size_t i = 0; i < mi.size(); ++i) {
        if (!mi[i]) continue;
        int rank = 1;
        for (std::size_t j = 0; j < mi.size(); ++j)
            if (mi[j] && *mi[j] > *mi[i]) ++rank;
        ranks[i] = rank;
    }
    return ranks;
}

/// Harmonic mean over the defined per-fold ranks; empty when none defined.
inline std::optional<double> harmonic_mean_rank(const std::vector<std::optional<int>>& ranks) {
    double inv_sum = 0.0;
    int defined = 0;
    for (const auto& rank : ranks)
        if (rank) {
            inv_sum += 1.0 / static_cast<double>(*rank);
            ++defined;
        }
    if (defined == 0) return std::nullopt;
    return static_cast<double>(defined) / inv_sum;
}

}  // namespace detail

/// Per-fold feature predictiveness: fit on the training split, hard-assign,
/// compute MI per feature (numeric features binned first), rank by
/// descending MI, then aggregate with the harmonic mean across folds.
inline RankReport rank_features(const Dataset& d, const RankConfig& cfg, int jobs = 1) {
    const int R = d.num_numeric(), C = d.num_categorical(), F = R + C;
    RankReport report;
    report.folds = cfg.folds;
    report.bins = cfg.bins;
    report.K = cfg.fit.K;
    report.missing_as_category = cfg.missing_as_category;
    report.assign_all_objects = cfg.assign_all_objects;
    report.seed = cfg.fit.seed;
    report.alpha = cfg.fit.hyperparams.alpha;

    auto sparsity = sparsity_report(d);
    report.features.resize(F);
    for (int f = 0; f < F; ++f) {
        report.features[f].name = sparsity.feature_names[f];
        report.features[f].kind = f < R ? FeatureKind::numeric : FeatureKind::categorical;
        report.features[f].sparsity = sparsity.per_feature[f];
        report.features[f].fold_mi.resize(cfg.folds);
        report.features[f].fold_rank.resize(cfg.folds);
    }

    auto folds = kfold_split(d.n(), cfg.folds, cfg.fit.seed);
    for (int fold = 0; fold < cfg.folds; ++fold) {
        std::vector<int> train;
        std::vector<char> held(d.n(), 0);
        for (int idx : folds[fold]) held[idx] = 1;
        for (int i = 0; i < d.n(); ++i)
            if (!held[i]) train.push_back(i);
        Dataset train_data = d.subset(train);
        FitConfig fold_cfg = cfg.fit;
        fold_cfg.seed = mix_seed({cfg.fit.seed, 0x72616e6bULL, static_cast<std::uint64_t>(fold)});
        FitResult fitres;
        try {
            fitres = fit(train_data, fold_cfg, jobs);
        } catch (const FitError& e) {
            throw FitError("rank fold=" + std::to_string(fold) + ": " + e.what());
        }

        // Objects scored in this fold and their hard labels.
        std::vector<int> scored;
        std::vector<int> labels;
        if (cfg.assign_all_objects) {
            scored.resize(d.n());
            for (int i = 0; i < d.n(); ++i) scored[i] = i;
            auto [resp, ll] = e_step(d, fitres.params);
            labels = hard_assign(resp);
        } else {
            scored = train;
            labels = fitres.labels;
        }
        const int S = static_cast<int>(scored.size());

        std::vector<std::optional<double>> fold_mi(F);
        for (int f = 0; f < F; ++f) {
            std::vector<int> values(S, 0);
            std::vector<std::uint8_t> observed(S, 0);
            if (f < R) {
                std::vector<double> raw(S, 0.0);
                for (int i = 0; i < S; ++i) {
                    raw[i] = d.x_at(scored[i], f);
                    observed[i] = d.x_observed(scored[i], f) ? 1 : 0;
                }
                auto binned = bin_numeric(raw, observed, cfg.bins);
                values = binned.bin;
                if (cfg.missing_as_category) {
                    for (int i = 0; i < S; ++i)
                        if (!observed[i]) {
                            values[i] = binned.num_bins;
                            observed[i] = 1;
                        }
                }
            } else {
                const int c = f - R;
                for (int i = 0; i < S; ++i) {
                    values[i] = d.y_at(scored[i], c);
                    observed[i] = d.y_observed(scored[i], c) ? 1 : 0;
                }
                if (cfg.missing_as_category) {
                    const int V = static_cast<int>(d.categorical_specs[c].categories.size());
                    for (int i = 0; i < S; ++i)
                        if (!observed[i]) {
                            values[i] = V;
                            observed[i] = 1;
                        }
                }
            }
            bool any = false;
            for (auto o : observed) any |= (o != 0);
            if (any) fold_mi[f] = mutual_information(labels, values, observed);
        }
        auto fold_ranks = detail::competition_ranks(fold_mi);
        for (int f = 0; f < F; ++f) {
            report.features[f].fold_mi[fold] = fold_mi[f];
            report.features[f].fold_rank[fold] = fold_ranks[f];
        }
    }

    for (auto& feat : report.features) feat.avg_rank = detail::harmonic_mean_rank(feat.fold_rank);
    return report;
}

inline constexpr const char* kRankFormat = "mixclust.ranking/1";

inline nlohmann::json rank_to_json(const RankReport& rep) {
    nlohmann::json features = nlohmann::json::array();
    for (const auto& f : rep.features) {
        nlohmann::json mi = nlohmann::json::array();
        for (const auto& v : f.fold_mi) mi.push_back(v ? nlohmann::json(*v) : nlohmann::json());
        nlohmann::json rank = nlohmann::json::array();
        for (const auto& v : f.fold_rank) rank.push_back(v ? nlohmann::json(*v) : nlohmann::json());
        features.push_back(
            {{"name", f.name},
             {"data_type", f.kind == FeatureKind::numeric ? "numeric" : "categorical"},
             {"sparsity", f.sparsity},
             {"fold_mi", std::move(mi)},
             {"fold_rank", std::move(rank)},
             {"avg_rank", f.avg_rank ? nlohmann::json(*f.avg_rank) : nlohmann::json()}});
    }
    return nlohmann::json{{"format", kRankFormat},
                          {"mi_units", "nats"},
                          {"folds", rep.folds},
                          {"bins", rep.bins},
                          {"K", rep.K},
                          {"missing_as_category", rep.missing_as_category},
                          {"assign_all_objects", rep.assign_all_objects},
                          {"seed", rep.seed},
                          {"alpha", rep.alpha},
                          {"features", std::move(features)}};
}

/// Plain-text table: feature, average rank, data type, sparsity; sorted by
/// average rank, features with no defined MI last. Per-fold ranks live in
/// the JSON document; instability across folds is expected and kept visible.
inline std::string rank_to_text(const RankReport& rep) {
    std::vector<int> order(rep.features.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto& fa = rep.features[a];
        const auto& fb = rep.features[b];
        if (fa.avg_rank && fb.avg_rank && *fa.avg_rank != *fb.avg_rank)
            return *fa.avg_rank < *fb.avg_rank;
        if (fa.avg_rank.has_value() != fb.avg_rank.has_value()) return fa.avg_rank.has_value();
        return a < b;
    });
    std::ostringstream out;
    out << "feature ranking by mutual information (nats), " << rep.folds << " folds, "
        << rep.bins << " bins, K=" << rep.K << ", alpha " << rep.alpha << ", seed " << rep.seed
        << "\n";
    std::size_t width = 7;
    for (const auto& f : rep.features) width = std::max(width, f.name.size());
    out << std::left << std::setw(static_cast<int>(width) + 2) << "feature" << std::setw(14)
        << "average_rank" << std::setw(13) << "data_type" << "sparsity\n";
    for (int i : order) {
        const auto& f = rep.features[i];
        out << std::left << std::setw(static_cast<int>(width) + 2) << f.name;
        if (f.avg_rank) {
            std::ostringstream rank_text;
            rank_text << std::fixed << std::setprecision(2) << *f.avg_rank;
            out << std::setw(14) << rank_text.str();
        } else {
            out << std::setw(14) << "n/a";
        }
        out << std::setw(13) << (f.kind == FeatureKind::numeric ? "numeric" : "categorical");
        out << std::fixed << std::setprecision(2) << f.sparsity << "\n";
    }
    return out.str();
}

}  // namespace mixclust
