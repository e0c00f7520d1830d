#pragma once

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mixclust/common.hpp"
#include "mixclust/dataset.hpp"
#include "mixclust/em.hpp"

namespace mixclust {

/// Must-link constraints. Pairs are deduplicated order-insensitively;
/// self-pairs and unknown ids are rejected at load.
struct OraclePairs {
    std::vector<std::pair<int, int>> pairs;  // object indices, first < second

    static OraclePairs from_ids(const std::vector<std::pair<std::string, std::string>>& id_pairs,
                                const Dataset& d) {
        std::map<std::string, int> index;
        for (int i = 0; i < d.n(); ++i) index[d.ids[i]] = i;
        std::set<std::pair<int, int>> seen;
        OraclePairs out;
        for (const auto& [a, b] : id_pairs) {
            auto ia = index.find(a);
            if (ia == index.end()) throw SchemaError("oracle pair id '" + a + "' not in dataset");
            auto ib = index.find(b);
            if (ib == index.end()) throw SchemaError("oracle pair id '" + b + "' not in dataset");
            if (ia->second == ib->second)
                throw ValueError("oracle self-pair for id '" + a + "'");
            auto p = std::minmax(ia->second, ib->second);
            if (seen.insert({p.first, p.second}).second)
                out.pairs.push_back({p.first, p.second});
        }
        return out;
    }

    /// CSV with columns id_a,id_b (header optional).
    static OraclePairs load_csv(const std::string& path, const Dataset& d) {
        auto rows = csv::read_file(path);
        std::vector<std::pair<std::string, std::string>> id_pairs;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& row = rows[i];
            if (i == 0 && row.size() == 2 && row[0] == "id_a" && row[1] == "id_b") continue;
            if (row.size() != 2)
                throw ParseError(path + ": row " + std::to_string(i + 1) +
                                 ": expected 2 cells, got " + std::to_string(row.size()));
            id_pairs.push_back({row[0], row[1]});
        }
        return from_ids(id_pairs, d);
    }
};

/// Fraction of must-link pairs whose two objects share a hard label.
inline double oracle_agreement(const std::vector<int>& labels, const OraclePairs& pairs) {
    if (pairs.pairs.empty()) throw ValueError("oracle undefined: no pairs supplied");
    long satisfied = 0;
    for (const auto& [a, b] : pairs.pairs)
        if (labels[a] == labels[b]) ++satisfied;
    return static_cast<double>(satisfied) / static_cast<double>(pairs.pairs.size());
}

/// Disjoint, exhaustive folds with sizes differing by at most one;
/// deterministic shuffle given the seed.
inline std::vector<std::vector<int>> kfold_split(int n, int folds, std::uint64_t seed) {
    if (folds < 2) throw ValueError("folds must be >= 2");
    if (folds > n) throw ValueError("folds (" + std::to_string(folds) + ") exceed object count (" +
                                    std::to_string(n) + ")");
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    Rng rng = Rng::from_seed(mix_seed({seed, 0x6b666f6c64ULL}));
    for (int i = n - 1; i > 0; --i) {
        int j = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(i) + 1));
        std::swap(order[i], order[j]);
    }
    std::vector<std::vector<int>> out(folds);
    const int base = n / folds, extra = n % folds;
    int cursor = 0;
    for (int f = 0; f < folds; ++f) {
        const int size = base + (f < extra ? 1 : 0);
        out[f].assign(order.begin() + cursor, order.begin() + cursor + size);
        std::sort(out[f].begin(), out[f].end());
        cursor += size;
    }
    return out;
}

struct CrossValidationResult {
    std::vector<int> Ks;
    std::vector<std::vector<int>> folds;
    // [K index][fold]: total and per-object-mean held-out log-likelihood.
    std::vector<std::vector<double>> heldout_total;
    std::vector<std::vector<double>> heldout_mean;
};

/// Five-fold (by default) cross-validated held-out likelihood per K. Each
/// (K, fold) cell trains on the fold complement and scores the held-out
/// objects under the trained parameters; prior terms are excluded.
inline CrossValidationResult cross_validate(const Dataset& d, const std::vector<int>& Ks,
                                            int folds, const FitConfig& cfg, int jobs = 1) {
    CrossValidationResult out;
    out.Ks = Ks;
    out.folds = kfold_split(d.n(), folds, cfg.seed);
    out.heldout_total.assign(Ks.size(), std::vector<double>(folds, 0.0));
    out.heldout_mean.assign(Ks.size(), std::vector<double>(folds, 0.0));
    for (std::size_t ki = 0; ki < Ks.size(); ++ki) {
        for (int f = 0; f < folds; ++f) {
            std::vector<int> train;
            std::vector<char> held(d.n(), 0);
            for (int idx : out.folds[f]) held[idx] = 1;
            for (int i = 0; i < d.n(); ++i)
                if (!held[i]) train.push_back(i);
            Dataset train_data = d.subset(train);
            FitConfig cell_cfg = cfg;
            cell_cfg.K = Ks[ki];
            cell_cfg.seed = mix_seed({cfg.seed, 0x6376ULL, static_cast<std::uint64_t>(Ks[ki]),
                                      static_cast<std::uint64_t>(f)});
            FitResult fitres;
            try {
                fitres = fit(train_data, cell_cfg, jobs);
            } catch (const FitError& e) {
                throw FitError("K=" + std::to_string(Ks[ki]) + " fold=" + std::to_string(f) +
                               ": " + e.what());
            }
            const double total = log_likelihood_of(d, out.folds[f], fitres.params);
            out.heldout_total[ki][f] = total;
            out.heldout_mean[ki][f] = total / static_cast<double>(out.folds[f].size());
        }
    }
    return out;
}

struct SelectionConfig {
    std::vector<int> Ks;
    int folds = 5;
    int cv_restarts = 50;  // per (K, fold) budget; the reported model refits at full restarts
    FitConfig fit;         // K ignored; restarts is the full-data budget
};

struct SelectionReport {
    struct Row {
        int K = 0;
        double log_posterior = 0.0;  // full-data objective of the refit model
        std::vector<double> heldout_fold_mean;
        double heldout_mean = 0.0;
        double oracle_agreement = 0.0;
    };
    std::vector<Row> rows;
    int chosen_K = 0;
    std::vector<std::vector<int>> folds;
    std::uint64_t seed = 0;
    bool no_interior_peak = false;  // held-out curve peaks at a grid boundary
    double alpha = 0.0;
};

/// Chosen-K rule: best oracle agreement, ties broken by higher log
/// posterior, then smaller K.
inline int choose_row(const std::vector<SelectionReport::Row>& rows) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(rows.size()); ++i) {
        const auto& cand = rows[i];
        const auto& cur = rows[best];
        if (cand.oracle_agreement > cur.oracle_agreement ||
            (cand.oracle_agreement == cur.oracle_agreement &&
             (cand.log_posterior > cur.log_posterior ||
              (cand.log_posterior == cur.log_posterior && cand.K < cur.K))))
            best = i;
    }
    return best;
}

/// Full model-selection sweep: per K a full-data refit (log posterior +
/// oracle agreement) and the cross-validated held-out curve. The table
/// always carries every column so the choice can be overridden by hand.
inline SelectionReport select_k(const Dataset& d, const SelectionConfig& cfg,
                                const OraclePairs& pairs, int jobs = 1) {
    if (cfg.Ks.empty()) throw ValueError("no K values supplied");
    SelectionReport report;
    report.seed = cfg.fit.seed;
    report.alpha = cfg.fit.hyperparams.alpha;

    FitConfig cv_cfg = cfg.fit;
    cv_cfg.restarts = cfg.cv_restarts;
    auto cv = cross_validate(d, cfg.Ks, cfg.folds, cv_cfg, jobs);
    report.folds = cv.folds;

    for (std::size_t ki = 0; ki < cfg.Ks.size(); ++ki) {
        SelectionReport::Row row;
        row.K = cfg.Ks[ki];
        FitConfig full_cfg = cfg.fit;
        full_cfg.K = cfg.Ks[ki];
        full_cfg.seed = mix_seed({cfg.fit.seed, 0x66756c6cULL, static_cast<std::uint64_t>(cfg.Ks[ki])});
        FitResult fitres = fit(d, full_cfg, jobs);
        row.log_posterior = fitres.per_restart_final[fitres.winning_restart];
        row.oracle_agreement = oracle_agreement(fitres.labels, pairs);
        row.heldout_fold_mean = cv.heldout_mean[ki];
        double mean = 0.0;
        for (double m : row.heldout_fold_mean) mean += m;
        row.heldout_mean = mean / static_cast<double>(cfg.folds);
        report.rows.push_back(std::move(row));
    }

    report.chosen_K = report.rows[choose_row(report.rows)].K;

    int peak = 0;
    for (int i = 1; i < static_cast<int>(report.rows.size()); ++i)
        if (report.rows[i].heldout_mean > report.rows[peak].heldout_mean) peak = i;
    report.no_interior_peak = report.rows.size() < 3 || peak == 0 ||
                              peak == static_cast<int>(report.rows.size()) - 1;
    return report;
}

inline constexpr const char* kSelectionFormat = "mixclust.selection/1";

inline nlohmann::json selection_to_json(const SelectionReport& rep) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : rep.rows)
        rows.push_back({{"K", row.K},
                        {"log_posterior", row.log_posterior},
                        {"heldout_fold_mean", row.heldout_fold_mean},
                        {"heldout_mean", row.heldout_mean},
                        {"oracle_agreement", row.oracle_agreement}});
    return nlohmann::json{{"format", kSelectionFormat},
                          {"seed", rep.seed},
                          {"alpha", rep.alpha},
                          {"folds", rep.folds},
                          {"rows", std::move(rows)},
                          {"chosen_K", rep.chosen_K},
                          {"no_interior_peak", rep.no_interior_peak}};
}

/// Plain-text table with the log-posterior and oracle-agreement curves as
/// columns, plus the held-out mean between them.
inline std::string selection_to_text(const SelectionReport& rep) {
    std::ostringstream out;
    out << "model selection report (seed " << rep.seed << ", " << rep.folds.size()
        << " folds, alpha " << rep.alpha << ")\n";
    out << std::left << std::setw(6) << "K" << std::right << std::setw(18) << "log_posterior"
        << std::setw(16) << "heldout_mean" << std::setw(20) << "oracle_agreement" << "\n";
    out << std::fixed;
    for (const auto& row : rep.rows) {
        out << std::left << std::setw(6) << row.K << std::right << std::setprecision(4)
            << std::setw(18) << row.log_posterior << std::setw(16) << row.heldout_mean
            << std::setprecision(4) << std::setw(20) << row.oracle_agreement << "\n";
    }
    out << "chosen K: " << rep.chosen_K << "\n";
    if (rep.no_interior_peak)
        out << "note: held-out likelihood shows no interior peak over this K grid\n";
    return out.str();
}

}  // namespace mixclust
