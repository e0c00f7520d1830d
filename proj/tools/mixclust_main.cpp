// Command-line front end: simulate -> fit -> select -> rank -> network, all
// reproducible from (input files, flags, seed). Every run writes a manifest
// first so it can be replayed.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <algorithm>
#include <charconv>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mixclust/mixclust.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string data;
    std::string out = "mixclust_out";
    std::optional<std::uint64_t> seed;
    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
};

/// Expands `--config FILE` into ordinary flags. The file holds one
/// `key=value` per line (# comments allowed); a key is skipped when the same
/// flag already appears on the command line, so flags override file values.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string config_path;
    for (std::size_t i = 0; i < args.size();) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw mixclust::UsageError("--config requires a file path");
            config_path = args[i + 1];
            args.erase(args.begin() + i, args.begin() + i + 2);
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            args.erase(args.begin() + i);
        } else {
            ++i;
        }
    }
    if (config_path.empty()) return args;
    std::ifstream in(config_path);
    if (!in) throw mixclust::UsageError("config file not found: " + config_path);

    auto flag_present = [&](const std::string& flag) {
        for (const auto& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        return false;
    };
    // Insert right after the subcommand token.
    std::size_t insert_at = args.size();
    for (std::size_t i = 0; i < args.size(); ++i)
        if (!args[i].empty() && args[i][0] != '-') {
            insert_at = i + 1;
            break;
        }
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> injected;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw mixclust::UsageError(config_path + ": line " + std::to_string(line_no) +
                                       ": expected key=value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw mixclust::UsageError(config_path + ": line " + std::to_string(line_no) +
                                       ": empty key");
        if (flag_present("--" + key)) continue;
        injected.push_back("--" + key + "=" + value);
    }
    args.insert(args.begin() + insert_at, injected.begin(), injected.end());
    return args;
}

std::uint64_t resolve_seed(const CommonOpts& opts) {
    if (opts.seed) return *opts.seed;
    std::random_device rd;
    std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    std::cout << "seed: " << seed << " (auto-chosen; pass --seed " << seed
              << " to reproduce this run)\n";
    return seed;
}

/// Atomic file write: temp file in the target directory, then rename.
void write_file(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw mixclust::ValueError("cannot write file: " + path.string());
        out << content;
    }
    fs::rename(tmp, path);
}

std::string config_hash(const std::map<std::string, std::string>& config) {
    std::string canonical;
    for (const auto& [key, value] : config) canonical += key + "=" + value + "\n";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(mixclust::fnv1a64(canonical)));
    return buf;
}

/// The manifest captures every value that can affect results. --jobs only
/// changes scheduling and --out only placement, so both stay out of the
/// manifest and replays land byte-identical wherever they run.
void write_manifest(const fs::path& out_dir, const std::string& command,
                    const std::map<std::string, std::string>& config) {
    json j{{"format", "mixclust.manifest/1"},
           {"version", MIXCLUST_VERSION},
           {"command", command},
           {"config", config},
           {"config_hash", config_hash(config)}};
    write_file(out_dir / "manifest.json", j.dump(2) + "\n");
}

std::string fmt_double(double v) { return mixclust::csv::format_double(v); }

mixclust::Dataset load_corpus(const std::string& path, bool zscore) {
    if (!fs::exists(path)) throw mixclust::ParseError("data file not found: " + path);
    mixclust::Dataset d = mixclust::load_dataset(path);
    if (zscore) d.standardize_numeric();
    return d;
}

mixclust::Hyperparams load_hyperparams(double a, double b, double alpha,
                                       const std::string& hyper_file) {
    mixclust::Hyperparams h;
    h.a = a;
    h.b = b;
    h.alpha = alpha;
    if (!hyper_file.empty()) {
        if (!fs::exists(hyper_file))
            throw mixclust::ParseError("hyperparameter file not found: " + hyper_file);
        std::ifstream in(hyper_file);
        json j = json::parse(in);
        h = mixclust::hyperparams_from_json(j);
    }
    h.validate();
    return h;
}

std::string assignments_csv(const mixclust::Dataset& d, const mixclust::FitResult& res) {
    std::ostringstream out;
    out << "id,label";
    for (int k = 0; k < res.resp.K; ++k) out << ",resp_" << k;
    out << "\n";
    for (int n = 0; n < d.n(); ++n) {
        out << mixclust::csv::quote_if_needed(d.ids[n]) << "," << res.labels[n];
        for (int k = 0; k < res.resp.K; ++k) out << "," << fmt_double(res.resp.at(n, k));
        out << "\n";
    }
    return out.str();
}

json fit_result_json(const mixclust::Dataset& d, const mixclust::FitResult& res,
                     const mixclust::Hyperparams& h, std::uint64_t seed) {
    json assignments = json::array();
    for (int n = 0; n < d.n(); ++n) {
        json resp_row = json::array();
        for (int k = 0; k < res.resp.K; ++k) resp_row.push_back(res.resp.at(n, k));
        assignments.push_back(
            {{"id", d.ids[n]}, {"label", res.labels[n]}, {"resp", std::move(resp_row)}});
    }
    return json{
        {"format", "mixclust.fit/1"},
        {"params", mixclust::model_to_json(res.params, h, seed,
                                           res.per_restart_final[res.winning_restart], &d)},
        {"assignments", std::move(assignments)},
        {"objective_trace", res.objective_trace},
        {"winning_restart", res.winning_restart},
        {"per_restart_final", res.per_restart_final},
    };
}

std::vector<int> parse_k_range(const std::vector<int>& ks, int kmin, int kmax) {
    std::vector<int> out = ks;
    if (out.empty()) {
        if (kmin <= 0 || kmax <= 0)
            throw mixclust::UsageError("supply --ks or both --kmin and --kmax");
        if (kmin > kmax) throw mixclust::UsageError("--kmin must be <= --kmax");
        for (int k = kmin; k <= kmax; ++k) out.push_back(k);
    }
    for (int k : out)
        if (k < 1) throw mixclust::UsageError("K values must be >= 1");
    return out;
}

// ---------------------------------------------------------------------------

int cmd_fit(const CommonOpts& common, int K, int restarts, int max_iters, double tol,
            double hyper_a, double hyper_b, double alpha, const std::string& hyper_file,
            bool zscore) {
    if (K < 1) throw mixclust::UsageError("--k must be >= 1");
    std::uint64_t seed = resolve_seed(common);
    mixclust::FitConfig cfg;
    cfg.K = K;
    cfg.restarts = restarts;
    cfg.max_iters = max_iters;
    cfg.rel_tol = tol;
    cfg.seed = seed;
    cfg.hyperparams = load_hyperparams(hyper_a, hyper_b, alpha, hyper_file);
    cfg.validate();

    mixclust::Dataset d = load_corpus(common.data, zscore);
    fs::create_directories(common.out);
    std::map<std::string, std::string> config{
        {"data", common.data},         {"k", std::to_string(K)},
        {"restarts", std::to_string(restarts)}, {"max-iters", std::to_string(max_iters)},
        {"tol", fmt_double(tol)},      {"seed", std::to_string(seed)},
        {"hyper-a", fmt_double(cfg.hyperparams.a)}, {"hyper-b", fmt_double(cfg.hyperparams.b)},
        {"alpha", fmt_double(cfg.hyperparams.alpha)}, {"hyper-file", hyper_file},
        {"zscore", zscore ? "true" : "false"}};
    write_manifest(common.out, "fit", config);

    auto sparsity = mixclust::sparsity_report(d);
    char data_line[160];
    std::snprintf(data_line, sizeof(data_line),
                  "data: %d objects, %d numeric + %d categorical features, sparsity %.3f, "
                  "%.2f observed cells per free parameter at K=%d\n",
                  d.n(), d.num_numeric(), d.num_categorical(), sparsity.overall,
                  sparsity.observables_per_parameter(K), K);
    std::cout << data_line;

    mixclust::FitResult res = mixclust::fit(d, cfg, common.jobs);
    const double objective = res.per_restart_final[res.winning_restart];
    write_file(fs::path(common.out) / "model.json",
               mixclust::model_to_json(res.params, cfg.hyperparams, seed, objective, &d).dump(2) +
                   "\n");
    write_file(fs::path(common.out) / "fit.json",
               fit_result_json(d, res, cfg.hyperparams, seed).dump(2) + "\n");
    write_file(fs::path(common.out) / "assignments.csv", assignments_csv(d, res));
    std::cout << "fit: K=" << K << " objective=" << fmt_double(objective) << " winning_restart="
              << res.winning_restart << " iters=" << res.objective_trace.size() << "\n";
    std::cout << "wrote " << common.out << "/model.json, fit.json, assignments.csv\n";
    return 0;
}

int cmd_select(const CommonOpts& common, const std::vector<int>& ks, int kmin, int kmax,
               int folds, int cv_restarts, int restarts, int max_iters, double tol,
               const std::string& oracle_path, double hyper_a, double hyper_b, double alpha,
               const std::string& hyper_file, bool zscore) {
    std::vector<int> Ks = parse_k_range(ks, kmin, kmax);
    std::uint64_t seed = resolve_seed(common);
    mixclust::Dataset d = load_corpus(common.data, zscore);
    if (!fs::exists(oracle_path))
        throw mixclust::ParseError("oracle pairs file not found: " + oracle_path);
    mixclust::OraclePairs pairs = mixclust::OraclePairs::load_csv(oracle_path, d);

    mixclust::SelectionConfig cfg;
    cfg.Ks = Ks;
    cfg.folds = folds;
    cfg.cv_restarts = cv_restarts;
    cfg.fit.restarts = restarts;
    cfg.fit.max_iters = max_iters;
    cfg.fit.rel_tol = tol;
    cfg.fit.seed = seed;
    cfg.fit.hyperparams = load_hyperparams(hyper_a, hyper_b, alpha, hyper_file);

    fs::create_directories(common.out);
    std::ostringstream ks_text;
    for (std::size_t i = 0; i < Ks.size(); ++i) ks_text << (i ? "," : "") << Ks[i];
    std::map<std::string, std::string> config{
        {"data", common.data},       {"ks", ks_text.str()},
        {"folds", std::to_string(folds)}, {"cv-restarts", std::to_string(cv_restarts)},
        {"restarts", std::to_string(restarts)}, {"max-iters", std::to_string(max_iters)},
        {"tol", fmt_double(tol)},    {"oracle", oracle_path},
        {"seed", std::to_string(seed)}, {"hyper-a", fmt_double(cfg.fit.hyperparams.a)},
        {"hyper-b", fmt_double(cfg.fit.hyperparams.b)},
        {"alpha", fmt_double(cfg.fit.hyperparams.alpha)}, {"hyper-file", hyper_file},
        {"zscore", zscore ? "true" : "false"}};
    write_manifest(common.out, "select", config);

    mixclust::SelectionReport report = mixclust::select_k(d, cfg, pairs, common.jobs);
    write_file(fs::path(common.out) / "selection.json",
               mixclust::selection_to_json(report).dump(2) + "\n");
    write_file(fs::path(common.out) / "selection.txt", mixclust::selection_to_text(report));
    std::cout << mixclust::selection_to_text(report);
    std::cout << "wrote " << common.out << "/selection.json, selection.txt\n";
    return 0;
}

int cmd_rank(const CommonOpts& common, int K, int folds, int bins, int restarts, int max_iters,
             double tol, bool missing_as_category, bool all_objects, double hyper_a,
             double hyper_b, double alpha, const std::string& hyper_file, bool zscore) {
    if (K < 1) throw mixclust::UsageError("--k must be >= 1");
    std::uint64_t seed = resolve_seed(common);
    mixclust::Dataset d = load_corpus(common.data, zscore);

    mixclust::RankConfig cfg;
    cfg.folds = folds;
    cfg.bins = bins;
    cfg.fit.K = K;
    cfg.fit.restarts = restarts;
    cfg.fit.max_iters = max_iters;
    cfg.fit.rel_tol = tol;
    cfg.fit.seed = seed;
    cfg.fit.hyperparams = load_hyperparams(hyper_a, hyper_b, alpha, hyper_file);
    cfg.missing_as_category = missing_as_category;
    cfg.assign_all_objects = all_objects;

    fs::create_directories(common.out);
    std::map<std::string, std::string> config{
        {"data", common.data},          {"k", std::to_string(K)},
        {"folds", std::to_string(folds)}, {"bins", std::to_string(bins)},
        {"restarts", std::to_string(restarts)}, {"max-iters", std::to_string(max_iters)},
        {"tol", fmt_double(tol)},       {"seed", std::to_string(seed)},
        {"missing-as-category", missing_as_category ? "true" : "false"},
        {"all-objects", all_objects ? "true" : "false"},
        {"hyper-a", fmt_double(cfg.fit.hyperparams.a)},
        {"hyper-b", fmt_double(cfg.fit.hyperparams.b)},
        {"alpha", fmt_double(cfg.fit.hyperparams.alpha)}, {"hyper-file", hyper_file},
        {"zscore", zscore ? "true" : "false"}};
    write_manifest(common.out, "rank", config);

    mixclust::RankReport report = mixclust::rank_features(d, cfg, common.jobs);
    write_file(fs::path(common.out) / "ranking.json",
               mixclust::rank_to_json(report).dump(2) + "\n");
    write_file(fs::path(common.out) / "ranking.txt", mixclust::rank_to_text(report));
    std::cout << mixclust::rank_to_text(report);
    std::cout << "wrote " << common.out << "/ranking.json, ranking.txt\n";
    return 0;
}

int cmd_network(const CommonOpts& common, double threshold, int min_shared,
                const std::string& assignments_path, const std::string& formats_arg,
                int iterations, bool zscore) {
    std::uint64_t seed = resolve_seed(common);
    mixclust::Dataset d = load_corpus(common.data, zscore);

    std::vector<int> labels(d.n(), 0);
    if (!assignments_path.empty()) {
        if (!fs::exists(assignments_path))
            throw mixclust::ParseError("assignments file not found: " + assignments_path);
        auto rows = mixclust::csv::read_file(assignments_path);
        std::map<std::string, int> by_id;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i].size() < 2)
                throw mixclust::ParseError(assignments_path + ": row " + std::to_string(i + 1) +
                                           ": expected at least id,label");
            int label = 0;
            const std::string& cell = rows[i][1];
            auto parsed = std::from_chars(cell.data(), cell.data() + cell.size(), label);
            if (parsed.ec != std::errc() || parsed.ptr != cell.data() + cell.size())
                throw mixclust::ParseError(assignments_path + ": row " + std::to_string(i + 1) +
                                           ": label '" + cell + "' is not an integer");
            by_id[rows[i][0]] = label;
        }
        for (int n = 0; n < d.n(); ++n) {
            auto it = by_id.find(d.ids[n]);
            if (it == by_id.end())
                throw mixclust::SchemaError("assignments file has no label for object '" +
                                            d.ids[n] + "'");
            labels[n] = it->second;
        }
    }

    std::vector<std::string> formats;
    {
        std::stringstream ss(formats_arg);
        std::string item;
        while (std::getline(ss, item, ',')) formats.push_back(item);
    }
    for (const auto& f : formats) mixclust::parse_graph_format(f);  // validate up front

    fs::create_directories(common.out);
    std::map<std::string, std::string> config{
        {"data", common.data},           {"threshold", fmt_double(threshold)},
        {"min-shared-features", std::to_string(min_shared)},
        {"assignments", assignments_path}, {"formats", formats_arg},
        {"iterations", std::to_string(iterations)}, {"seed", std::to_string(seed)},
        {"zscore", zscore ? "true" : "false"}};
    write_manifest(common.out, "network", config);

    mixclust::DistanceMatrix dist = mixclust::distance_matrix(d);
    mixclust::NetworkGraph g = mixclust::build_graph(dist, d.ids, labels, threshold, min_shared);
    if (!g.nodes.empty()) mixclust::layout_force_directed(g, iterations, seed);

    for (const auto& f : formats) {
        auto format = mixclust::parse_graph_format(f);
        write_file(fs::path(common.out) / ("graph." + f), mixclust::export_graph(g, format));
    }
    std::ostringstream summary;
    summary << "network: " << g.nodes.size() << " nodes, " << g.edges.size() << " edges, "
            << g.isolated_ids.size() << " isolated objects excluded, " << g.zero_shared_pairs
            << " object pairs share no observed feature\n";
    if (g.nodes.empty()) summary << "all objects are isolated at threshold " << threshold << "\n";
    write_file(fs::path(common.out) / "network.txt", summary.str());
    std::cout << summary.str();
    std::cout << "wrote " << common.out << "/graph.{" << formats_arg << "}, network.txt\n";
    return 0;
}

int cmd_simulate(const CommonOpts& common, const std::string& preset,
                 const std::string& spec_path, int K, int N, int R, int C, int categories,
                 double separation, double missing_rate, const std::string& missing_pattern,
                 const std::vector<double>& masses) {
    std::uint64_t seed = resolve_seed(common);
    mixclust::GeneratorSpec spec;
    if (!preset.empty() && !spec_path.empty())
        throw mixclust::UsageError("--preset and --spec are mutually exclusive");
    if (!preset.empty()) {
        if (preset != "sparse162")
            throw mixclust::UsageError("unknown preset '" + preset + "' (available: sparse162)");
        spec = mixclust::sparse162_preset(seed);
    } else if (!spec_path.empty()) {
        if (!fs::exists(spec_path))
            throw mixclust::ParseError("generator spec file not found: " + spec_path);
        std::ifstream in(spec_path);
        spec = mixclust::generator_spec_from_json(json::parse(in));
        spec.seed = seed;
    } else {
        spec.K = K;
        spec.N = N;
        spec.R = R;
        spec.C = C;
        spec.category_sizes.assign(C, categories);
        spec.separation = separation;
        spec.missing_rate = missing_rate;
        spec.masses = masses;
        spec.seed = seed;
    }
    spec.missing_pattern = mixclust::parse_missing_pattern(missing_pattern);
    spec.validate();

    fs::create_directories(common.out);
    std::ostringstream masses_text;
    for (std::size_t i = 0; i < spec.masses.size(); ++i)
        masses_text << (i ? "," : "") << fmt_double(spec.masses[i]);
    std::map<std::string, std::string> config{
        {"preset", preset},           {"spec", spec_path},
        {"k", std::to_string(spec.K)},
        {"n", std::to_string(spec.N)}, {"num", std::to_string(spec.R)},
        {"cat", std::to_string(spec.C)},
        {"categories", spec.category_sizes.empty() ? "3" : std::to_string(spec.category_sizes[0])},
        {"separation", fmt_double(spec.separation)},
        {"missing-rate", fmt_double(spec.missing_rate)},
        {"missing-pattern", missing_pattern},
        {"masses", masses_text.str()},
        {"seed", std::to_string(seed)}};
    write_manifest(common.out, "simulate", config);
    write_file(fs::path(common.out) / "generator_spec.json",
               mixclust::generator_spec_to_json(spec).dump(2) + "\n");

    mixclust::SynthResult result = mixclust::generate(spec);
    {
        std::ostringstream corpus;
        mixclust::write_dataset(result.data, corpus);
        write_file(fs::path(common.out) / "corpus.csv", corpus.str());
    }
    {
        std::ostringstream truth;
        truth << "id,label\n";
        for (int n = 0; n < result.data.n(); ++n)
            truth << mixclust::csv::quote_if_needed(result.data.ids[n]) << ","
                  << result.labels[n] << "\n";
        write_file(fs::path(common.out) / "truth_labels.csv", truth.str());
    }
    write_file(fs::path(common.out) / "truth_params.json",
               mixclust::model_to_json(result.truth, mixclust::Hyperparams{}, seed, 0.0,
                                       &result.data)
                       .dump(2) +
                   "\n");
    std::cout << "simulate: N=" << spec.N << " K=" << spec.K << " missing_rate="
              << fmt_double(spec.missing_rate) << "\n";
    std::cout << "wrote " << common.out << "/corpus.csv, truth_labels.csv, truth_params.json\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mixture-model clustering for mixed-type data with missing values"};
    app.set_version_flag("--version", MIXCLUST_VERSION);
    app.require_subcommand(1);

    CommonOpts common;
    int k = 1, restarts = 500, max_iters = 1000;
    double tol = 1e-8;
    double hyper_a = 2.0, hyper_b = 0.1, alpha = 0.01;
    std::string hyper_file;
    bool zscore = false;

    std::string config_path_doc;  // handled by expand_config; registered for --help
    auto add_common = [&](CLI::App* sub, bool needs_data) {
        sub->add_option("--config", config_path_doc,
                        "plain-text key=value config file; flags override its values");
        if (needs_data)
            sub->add_option("--data", common.data, "corpus CSV file")->required();
        sub->add_option("--out", common.out, "output directory");
        sub->add_option("--seed", common.seed, "RNG seed (auto-chosen and echoed if omitted)");
        sub->add_option("--jobs", common.jobs, "worker threads (never affects results)");
    };
    auto add_model_opts = [&](CLI::App* sub) {
        sub->add_option("--hyper-a", hyper_a, "Gamma shape for the precision prior (> 1)");
        sub->add_option("--hyper-b", hyper_b, "Gamma rate for the precision prior (> 0)");
        sub->add_option("--alpha", alpha, "categorical pseudo-count (>= 0)");
        sub->add_option("--hyper-file", hyper_file,
                        "JSON hyperparameter file; may carry per-(cluster,feature) a/b matrices");
        sub->add_flag("--zscore", zscore, "z-score numeric features before analysis");
        sub->add_option("--max-iters", max_iters, "EM iteration cap per restart");
        sub->add_option("--tol", tol, "relative objective-change convergence tolerance");
    };

    auto* fit_cmd = app.add_subcommand("fit", "fit the mixture model at a fixed K");
    add_common(fit_cmd, true);
    add_model_opts(fit_cmd);
    fit_cmd->add_option("--k", k, "number of clusters")->required();
    fit_cmd->add_option("--restarts", restarts, "random restarts (best final objective wins)");

    auto* select_cmd = app.add_subcommand("select", "choose K by cross-validation and oracle pairs");
    add_common(select_cmd, true);
    add_model_opts(select_cmd);
    std::vector<int> ks;
    int kmin = 0, kmax = 0, folds = 5, cv_restarts = 50;
    std::string oracle_path;
    select_cmd->add_option("--ks", ks, "explicit K values")->delimiter(',');
    select_cmd->add_option("--kmin", kmin, "lowest K of a range");
    select_cmd->add_option("--kmax", kmax, "highest K of a range");
    select_cmd->add_option("--folds", folds, "cross-validation folds");
    select_cmd->add_option("--cv-restarts", cv_restarts, "restart budget per (K, fold)");
    select_cmd->add_option("--restarts", restarts, "restart budget for the full-data refits");
    select_cmd->add_option("--oracle", oracle_path, "must-link pairs CSV (id_a,id_b)")->required();

    auto* rank_cmd = app.add_subcommand("rank", "rank features by mutual information with clusters");
    add_common(rank_cmd, true);
    add_model_opts(rank_cmd);
    int bins = 5;
    bool missing_as_category = false, all_objects = false;
    int rank_restarts = 50;
    rank_cmd->add_option("--k", k, "number of clusters")->required();
    rank_cmd->add_option("--folds", folds, "data folds (one fit and ranking per fold)");
    rank_cmd->add_option("--bins", bins, "equal-frequency bins for numeric features");
    rank_cmd->add_option("--restarts", rank_restarts, "restart budget per fold fit");
    rank_cmd->add_flag("--missing-as-category", missing_as_category,
                       "treat missing cells as an extra category");
    rank_cmd->add_flag("--all-objects", all_objects,
                       "score all objects under each fold model instead of the training split");

    auto* network_cmd = app.add_subcommand("network", "distance network with force-directed layout");
    add_common(network_cmd, true);
    double threshold = 0.5;
    int min_shared = 0, iterations = 500;
    std::string assignments_path, formats_arg = "json,dot,svg";
    network_cmd->add_option("--threshold", threshold, "adjacency: edge iff distance < threshold");
    network_cmd->add_option("--min-shared-features", min_shared,
                            "suppress edges between objects sharing fewer observed features");
    network_cmd->add_option("--assignments", assignments_path,
                            "assignments.csv from a fit run, for node colors");
    network_cmd->add_option("--formats", formats_arg, "comma list of json,dot,svg");
    network_cmd->add_option("--iterations", iterations, "layout iterations");
    network_cmd->add_flag("--zscore", zscore, "z-score numeric features before distances");

    auto* sim_cmd = app.add_subcommand("simulate", "sample a synthetic corpus with known truth");
    add_common(sim_cmd, false);
    std::string preset, spec_path, missing_pattern = "random";
    int sim_k = 2, sim_n = 100, sim_r = 2, sim_c = 2, categories = 3;
    double separation = 5.0, missing_rate = 0.0;
    std::vector<double> masses;
    sim_cmd->add_option("--preset", preset, "named preset (sparse162)");
    sim_cmd->add_option("--spec", spec_path, "generator spec JSON (overrides shape flags)");
    sim_cmd->add_option("--k", sim_k, "clusters");
    sim_cmd->add_option("--n", sim_n, "objects");
    sim_cmd->add_option("--num", sim_r, "numeric features");
    sim_cmd->add_option("--cat", sim_c, "categorical features");
    sim_cmd->add_option("--categories", categories, "categories per categorical feature");
    sim_cmd->add_option("--separation", separation, "cluster mean separation in feature sigmas");
    sim_cmd->add_option("--missing-rate", missing_rate, "per-cell missing probability");
    sim_cmd->add_option("--missing-pattern", missing_pattern,
                        "random (per-cell) or block (contiguous per object)");
    sim_cmd->add_option("--masses", masses, "unnormalized cluster weights")->delimiter(',');

    try {
        std::vector<std::string> args = expand_config(argc, argv);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const mixclust::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (app.got_subcommand(fit_cmd))
            return cmd_fit(common, k, restarts, max_iters, tol, hyper_a, hyper_b, alpha,
                           hyper_file, zscore);
        if (app.got_subcommand(select_cmd))
            return cmd_select(common, ks, kmin, kmax, folds, cv_restarts, restarts, max_iters,
                              tol, oracle_path, hyper_a, hyper_b, alpha, hyper_file, zscore);
        if (app.got_subcommand(rank_cmd))
            return cmd_rank(common, k, folds, bins, rank_restarts, max_iters, tol,
                            missing_as_category, all_objects, hyper_a, hyper_b, alpha, hyper_file,
                            zscore);
        if (app.got_subcommand(network_cmd))
            return cmd_network(common, threshold, min_shared, assignments_path, formats_arg,
                               iterations, zscore);
        if (app.got_subcommand(sim_cmd))
            return cmd_simulate(common, preset, spec_path, sim_k, sim_n, sim_r, sim_c, categories,
                                separation, missing_rate, missing_pattern, masses);
    } catch (const mixclust::FitError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const mixclust::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const mixclust::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const mixclust::ValueError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const mixclust::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
