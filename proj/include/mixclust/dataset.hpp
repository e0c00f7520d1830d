#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mixclust/common.hpp"
#include "mixclust/csv.hpp"

namespace mixclust {

enum class FeatureKind { numeric, categorical };

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    std::vector<std::string> categories;  // categorical only, size >= 2 in valid data
    std::string description;
};

/// Column identity in file order: feature columns point into the numeric or
/// categorical spec lists, meta columns into the annotation key list.
struct ColumnRef {
    enum class Kind { numeric, categorical, meta } kind;
    int index;
};

/// Immutable after load. Numeric and categorical cells carry per-cell
/// observed flags; annotation columns ride along untouched by fitting.
struct Dataset {
    std::vector<std::string> ids;
    std::vector<FeatureSpec> numeric_specs;
    std::vector<FeatureSpec> categorical_specs;

    std::vector<double> x;              // N x R, row-major
    std::vector<std::uint8_t> x_obs;    // N x R
    std::vector<int> y;                 // N x C, row-major (category index)
    std::vector<std::uint8_t> y_obs;    // N x C

    std::vector<std::string> annotation_keys;
    std::vector<std::vector<std::string>> annotations;  // N x keys

    std::vector<ColumnRef> column_order;

    int n() const { return static_cast<int>(ids.size()); }
    int num_numeric() const { return static_cast<int>(numeric_specs.size()); }
    int num_categorical() const { return static_cast<int>(categorical_specs.size()); }

    double x_at(int obj, int r) const { return x[static_cast<std::size_t>(obj) * num_numeric() + r]; }
    bool x_observed(int obj, int r) const { return x_obs[static_cast<std::size_t>(obj) * num_numeric() + r] != 0; }
    int y_at(int obj, int c) const { return y[static_cast<std::size_t>(obj) * num_categorical() + c]; }
    bool y_observed(int obj, int c) const { return y_obs[static_cast<std::size_t>(obj) * num_categorical() + c] != 0; }

    void set_x(int obj, int r, double v) {
        x[static_cast<std::size_t>(obj) * num_numeric() + r] = v;
        x_obs[static_cast<std::size_t>(obj) * num_numeric() + r] = 1;
    }
    void set_y(int obj, int c, int v) {
        y[static_cast<std::size_t>(obj) * num_categorical() + c] = v;
        y_obs[static_cast<std::size_t>(obj) * num_categorical() + c] = 1;
    }

    std::vector<int> category_sizes() const {
        std::vector<int> sizes;
        sizes.reserve(categorical_specs.size());
        for (const auto& s : categorical_specs)
            sizes.push_back(static_cast<int>(s.categories.size()));
        return sizes;
    }

    long observed_cells() const {
        long count = 0;
        for (auto f : x_obs) count += f;
        for (auto f : y_obs) count += f;
        return count;
    }

    long total_cells() const {
        return static_cast<long>(n()) * (num_numeric() + num_categorical());
    }

    /// Row subset sharing specs, annotation keys and column order. Category
    /// vocabularies stay those of the parent, so models trained on a subset
    /// still cover labels only seen elsewhere.
    Dataset subset(const std::vector<int>& rows) const {
        Dataset out;
        out.numeric_specs = numeric_specs;
        out.categorical_specs = categorical_specs;
        out.annotation_keys = annotation_keys;
        out.column_order = column_order;
        const int R = num_numeric(), C = num_categorical();
        out.x.reserve(rows.size() * R);
        out.x_obs.reserve(rows.size() * R);
        out.y.reserve(rows.size() * C);
        out.y_obs.reserve(rows.size() * C);
        for (int row : rows) {
            out.ids.push_back(ids[row]);
            for (int r = 0; r < R; ++r) {
                out.x.push_back(x_at(row, r));
                out.x_obs.push_back(x_obs[static_cast<std::size_t>(row) * R + r]);
            }
            for (int c = 0; c < C; ++c) {
                out.y.push_back(y_at(row, c));
                out.y_obs.push_back(y_obs[static_cast<std::size_t>(row) * C + c]);
            }
            if (!annotation_keys.empty()) out.annotations.push_back(annotations[row]);
        }
        if (annotation_keys.empty()) out.annotations.resize(rows.size());
        return out;
    }

    /// Observed mean per numeric feature; 0 when a feature is never observed.
    std::vector<double> numeric_means() const {
        const int R = num_numeric();
        std::vector<double> mean(R, 0.0);
        std::vector<long> count(R, 0);
        for (int obj = 0; obj < n(); ++obj)
            for (int r = 0; r < R; ++r)
                if (x_observed(obj, r)) {
                    mean[r] += x_at(obj, r);
                    ++count[r];
                }
        for (int r = 0; r < R; ++r)
            if (count[r] > 0) mean[r] /= static_cast<double>(count[r]);
        return mean;
    }

    /// In-place z-score of numeric features over their observed cells.
    /// Opt-in; fitting consumes values as given.
    void standardize_numeric() {
        const int R = num_numeric();
        std::vector<double> mean = numeric_means();
        std::vector<double> sq(R, 0.0);
        std::vector<long> count(R, 0);
        for (int obj = 0; obj < n(); ++obj)
            for (int r = 0; r < R; ++r)
                if (x_observed(obj, r)) {
                    double d = x_at(obj, r) - mean[r];
                    sq[r] += d * d;
                    ++count[r];
                }
        for (int obj = 0; obj < n(); ++obj)
            for (int r = 0; r < R; ++r)
                if (x_observed(obj, r)) {
                    double sd = count[r] > 1 ? std::sqrt(sq[r] / static_cast<double>(count[r])) : 0.0;
                    double v = x_at(obj, r) - mean[r];
                    x[static_cast<std::size_t>(obj) * R + r] = sd > 0.0 ? v / sd : 0.0;
                }
    }
};

namespace detail {

inline bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end;
}

inline bool is_missing_cell(const std::string& s) { return s.empty() || s == "NA"; }

}  // namespace detail

/// Loads the corpus CSV. Header cells are `id`, `<name>:num`, `<name>:cat`
/// or `meta:<name>`; empty cells and the literal `NA` are missing. When no
/// schema is given, each categorical vocabulary is the sorted set of labels
/// observed in its column.
inline Dataset load_dataset(const std::string& path,
                            const std::optional<std::vector<FeatureSpec>>& schema = std::nullopt) {
    auto rows = csv::read_file(path);
    if (rows.empty()) throw ParseError(path + ": empty file");
    const auto& header = rows.front();
    if (header.empty() || header[0] != "id")
        throw SchemaError(path + ": first header column must be 'id'");

    Dataset d;
    std::vector<int> cell_kind;  // parallel to header cells past id
    std::set<std::string> seen_names;
    for (std::size_t j = 1; j < header.size(); ++j) {
        const std::string& h = header[j];
        if (h.rfind("meta:", 0) == 0) {
            d.annotation_keys.push_back(h.substr(5));
            d.column_order.push_back({ColumnRef::Kind::meta,
                                      static_cast<int>(d.annotation_keys.size()) - 1});
            cell_kind.push_back(2);
            continue;
        }
        auto pos = h.rfind(':');
        if (pos == std::string::npos)
            throw SchemaError(path + ": header column '" + h +
                              "' must end with :num or :cat, or start with meta:");
        std::string name = h.substr(0, pos);
        std::string kind = h.substr(pos + 1);
        if (name.empty())
            throw SchemaError(path + ": empty feature name in header column " + std::to_string(j + 1));
        if (!seen_names.insert(name).second)
            throw SchemaError(path + ": duplicate feature name '" + name + "'");
        if (kind == "num") {
            d.numeric_specs.push_back({name, FeatureKind::numeric, {}, ""});
            d.column_order.push_back({ColumnRef::Kind::numeric,
                                      static_cast<int>(d.numeric_specs.size()) - 1});
            cell_kind.push_back(0);
        } else if (kind == "cat") {
            d.categorical_specs.push_back({name, FeatureKind::categorical, {}, ""});
            d.column_order.push_back({ColumnRef::Kind::categorical,
                                      static_cast<int>(d.categorical_specs.size()) - 1});
            cell_kind.push_back(1);
        } else {
            throw SchemaError(path + ": header column '" + h + "' has unknown kind ':" + kind + "'");
        }
    }

    if (schema) {
        // Schema overrides inferred specs; match by name, order from file.
        std::map<std::string, const FeatureSpec*> by_name;
        for (const auto& s : *schema) by_name[s.name] = &s;
        for (auto& s : d.numeric_specs) {
            auto it = by_name.find(s.name);
            if (it == by_name.end())
                throw SchemaError(path + ": feature '" + s.name + "' not in supplied schema");
            if (it->second->kind != FeatureKind::numeric)
                throw SchemaError(path + ": feature '" + s.name + "' is numeric in file, categorical in schema");
            s = *it->second;
        }
        for (auto& s : d.categorical_specs) {
            auto it = by_name.find(s.name);
            if (it == by_name.end())
                throw SchemaError(path + ": feature '" + s.name + "' not in supplied schema");
            if (it->second->kind != FeatureKind::categorical)
                throw SchemaError(path + ": feature '" + s.name + "' is categorical in file, numeric in schema");
            s = *it->second;
        }
    }

    const int N = static_cast<int>(rows.size()) - 1;
    const int R = d.num_numeric(), C = d.num_categorical();
    d.x.assign(static_cast<std::size_t>(N) * R, 0.0);
    d.x_obs.assign(static_cast<std::size_t>(N) * R, 0);
    d.y.assign(static_cast<std::size_t>(N) * C, 0);
    d.y_obs.assign(static_cast<std::size_t>(N) * C, 0);
    d.annotations.assign(N, std::vector<std::string>(d.annotation_keys.size()));

    std::set<std::string> seen_ids;
    // Raw categorical labels, indexed after the vocabulary is known.
    std::vector<std::vector<std::pair<int, std::string>>> cat_cells(C);

    for (int i = 0; i < N; ++i) {
        const auto& row = rows[i + 1];
        const std::size_t line_no = static_cast<std::size_t>(i) + 2;
        if (row.size() != header.size())
            throw ParseError(path + ": row " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " cells, got " +
                             std::to_string(row.size()));
        if (row[0].empty())
            throw SchemaError(path + ": row " + std::to_string(line_no) + ": empty object id");
        if (!seen_ids.insert(row[0]).second)
            throw SchemaError(path + ": duplicate object id '" + row[0] + "'");
        d.ids.push_back(row[0]);

        for (std::size_t j = 1; j < row.size(); ++j) {
            const std::string& cell = row[j];
            const ColumnRef& col = d.column_order[j - 1];
            switch (cell_kind[j - 1]) {
                case 0: {
                    if (detail::is_missing_cell(cell)) break;
                    double v;
                    if (!detail::parse_double(cell, v) || !std::isfinite(v))
                        throw ValueError(path + ": row " + std::to_string(line_no) +
                                         ", column '" + d.numeric_specs[col.index].name +
                                         "': invalid numeric value '" + cell + "'");
                    d.set_x(i, col.index, v);
                    break;
                }
                case 1: {
                    if (detail::is_missing_cell(cell)) break;
                    cat_cells[col.index].push_back({i, cell});
                    break;
                }
                default:
                    d.annotations[i][col.index] = cell;
            }
        }
    }

    for (int c = 0; c < C; ++c) {
        auto& spec = d.categorical_specs[c];
        if (!schema) {
            std::set<std::string> labels;
            for (const auto& [obj, label] : cat_cells[c]) labels.insert(label);
            spec.categories.assign(labels.begin(), labels.end());
        }
        std::map<std::string, int> index;
        for (int v = 0; v < static_cast<int>(spec.categories.size()); ++v)
            index[spec.categories[v]] = v;
        for (const auto& [obj, label] : cat_cells[c]) {
            auto it = index.find(label);
            if (it == index.end())
                throw SchemaError(path + ": feature '" + spec.name + "': label '" + label +
                                  "' not in schema categories");
            d.set_y(obj, c, it->second);
        }
    }
    return d;
}

/// Canonical writer: file column order, empty cell as the missing marker,
/// shortest round-trip numerics, '\n' line endings.
inline void write_dataset(const Dataset& d, std::ostream& out) {
    std::vector<std::string> header{"id"};
    for (const auto& col : d.column_order) {
        switch (col.kind) {
            case ColumnRef::Kind::numeric:
                header.push_back(d.numeric_specs[col.index].name + ":num");
                break;
            case ColumnRef::Kind::categorical:
                header.push_back(d.categorical_specs[col.index].name + ":cat");
                break;
            case ColumnRef::Kind::meta:
                header.push_back("meta:" + d.annotation_keys[col.index]);
                break;
        }
    }
    out << csv::join_record(header) << "\n";
    for (int i = 0; i < d.n(); ++i) {
        std::vector<std::string> row{d.ids[i]};
        for (const auto& col : d.column_order) {
            switch (col.kind) {
                case ColumnRef::Kind::numeric:
                    row.push_back(d.x_observed(i, col.index)
                                      ? csv::format_double(d.x_at(i, col.index))
                                      : std::string());
                    break;
                case ColumnRef::Kind::categorical:
                    row.push_back(d.y_observed(i, col.index)
                                      ? d.categorical_specs[col.index].categories[d.y_at(i, col.index)]
                                      : std::string());
                    break;
                case ColumnRef::Kind::meta:
                    row.push_back(d.annotations[i][col.index]);
                    break;
            }
        }
        out << csv::join_record(row) << "\n";
    }
}

inline void write_dataset(const Dataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValueError("cannot write file: " + path);
    write_dataset(d, out);
}

// ---------------------------------------------------------------------------
// Raw caliper measurements and the derived ratio features.

inline constexpr int kNumRawLengths = 13;   // lengths a..m
inline constexpr int kNumAnthropometrics = 12;

/// Per-object raw lengths a..m; observed lengths are strictly positive.
struct RawMeasurements {
    std::vector<std::string> ids;
    std::vector<std::array<double, kNumRawLengths>> values;
    std::vector<std::array<std::uint8_t, kNumRawLengths>> observed;

    int n() const { return static_cast<int>(ids.size()); }
};

/// Ratio table: feature i = values[num]/values[den]; den < 0 marks the one
/// pass-through feature (kept un-normalized).
struct RatioDef {
    int num;
    int den;
};
inline constexpr std::array<RatioDef, kNumAnthropometrics> kRatioDefs = {{
    {0, 1},    // a/b
    {2, 3},    // c/d
    {2, 0},    // c/a
    {4, 2},    // e/c
    {5, 6},    // f/g
    {7, 8},    // h/i
    {8, 9},    // i/j
    {0, 8},    // a/i
    {10, 8},   // k/i
    {11, 8},   // l/i
    {11, 12},  // l/m
    {4, -1},   // e, pass-through
}};

inline std::vector<std::string> anthropometric_feature_names() {
    std::vector<std::string> names;
    names.reserve(kNumAnthropometrics);
    for (const auto& def : kRatioDefs) {
        if (def.den < 0) {
            names.push_back(std::string("len_") + static_cast<char>('a' + def.num));
        } else {
            names.push_back(std::string("ratio_") + static_cast<char>('a' + def.num) +
                            static_cast<char>('a' + def.den));
        }
    }
    return names;
}

/// Ratio features for one object. An output is missing exactly when an
/// operand is missing or its denominator is not strictly positive; observed
/// outputs are always finite.
inline std::array<std::optional<double>, kNumAnthropometrics> compute_anthropometrics(
    const std::array<double, kNumRawLengths>& lengths,
    const std::array<std::uint8_t, kNumRawLengths>& observed) {
    std::array<std::optional<double>, kNumAnthropometrics> out;
    for (int i = 0; i < kNumAnthropometrics; ++i) {
        const auto& def = kRatioDefs[i];
        if (!observed[def.num]) continue;
        if (def.den < 0) {
            out[i] = lengths[def.num];
            continue;
        }
        if (!observed[def.den] || lengths[def.den] <= 0.0) continue;
        out[i] = lengths[def.num] / lengths[def.den];
    }
    return out;
}

/// Builds a fit-ready numeric dataset from raw measurements: one column per
/// derived ratio feature, missing wherever the ratio is undefined.
inline Dataset anthropometrics_dataset(const RawMeasurements& raw) {
    Dataset d;
    const auto names = anthropometric_feature_names();
    for (int r = 0; r < kNumAnthropometrics; ++r) {
        d.numeric_specs.push_back({names[r], FeatureKind::numeric, {}, ""});
        d.column_order.push_back({ColumnRef::Kind::numeric, r});
    }
    d.ids = raw.ids;
    const int N = raw.n();
    d.x.assign(static_cast<std::size_t>(N) * kNumAnthropometrics, 0.0);
    d.x_obs.assign(static_cast<std::size_t>(N) * kNumAnthropometrics, 0);
    d.annotations.assign(N, {});
    for (int n = 0; n < N; ++n) {
        auto features = compute_anthropometrics(raw.values[n], raw.observed[n]);
        for (int r = 0; r < kNumAnthropometrics; ++r)
            if (features[r]) d.set_x(n, r, *features[r]);
    }
    return d;
}

/// Raw-measurement CSV: columns `id,a,b,...,m`; empty or NA cells missing.
inline RawMeasurements load_raw_measurements(const std::string& path) {
    auto rows = csv::read_file(path);
    if (rows.empty()) throw ParseError(path + ": empty file");
    const auto& header = rows.front();
    if (header.size() != kNumRawLengths + 1 || header[0] != "id")
        throw SchemaError(path + ": header must be id,a,b,...,m");
    for (int j = 0; j < kNumRawLengths; ++j) {
        std::string expect(1, static_cast<char>('a' + j));
        if (header[j + 1] != expect)
            throw SchemaError(path + ": expected column '" + expect + "', got '" + header[j + 1] + "'");
    }
    RawMeasurements raw;
    std::set<std::string> seen;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != header.size())
            throw ParseError(path + ": row " + std::to_string(i + 1) + ": expected " +
                             std::to_string(header.size()) + " cells, got " +
                             std::to_string(row.size()));
        if (!seen.insert(row[0]).second)
            throw SchemaError(path + ": duplicate object id '" + row[0] + "'");
        raw.ids.push_back(row[0]);
        std::array<double, kNumRawLengths> vals{};
        std::array<std::uint8_t, kNumRawLengths> obs{};
        for (int j = 0; j < kNumRawLengths; ++j) {
            const std::string& cell = row[j + 1];
            if (detail::is_missing_cell(cell)) continue;
            double v;
            if (!detail::parse_double(cell, v) || !std::isfinite(v) || v <= 0.0)
                throw ValueError(path + ": row " + std::to_string(i + 1) + ", column '" +
                                 header[j + 1] + "': length must be a positive number, got '" +
                                 cell + "'");
            vals[j] = v;
            obs[j] = 1;
        }
        raw.values.push_back(vals);
        raw.observed.push_back(obs);
    }
    return raw;
}

// ---------------------------------------------------------------------------
// Sparsity diagnostics.

struct SparsityReport {
    double overall = 0.0;                    // missing cells / total cells
    std::vector<std::string> feature_names;  // numeric then categorical
    std::vector<double> per_feature;         // missing fraction per feature
    long observed = 0;
    long total = 0;
    int num_numeric = 0;
    int sum_categories_minus_one = 0;

    /// Free parameters at K clusters: (K-1) mixture weights, mean and
    /// precision per (cluster, numeric feature), and V_c - 1 probabilities
    /// per (cluster, categorical feature).
    long free_parameters(int K) const {
        return (K - 1) + static_cast<long>(K) * 2 * num_numeric +
               static_cast<long>(K) * sum_categories_minus_one;
    }

    double observables_per_parameter(int K) const {
        return static_cast<double>(observed) / static_cast<double>(free_parameters(K));
    }
};

inline SparsityReport sparsity_report(const Dataset& d) {
    SparsityReport rep;
    const int N = d.n(), R = d.num_numeric(), C = d.num_categorical();
    rep.total = d.total_cells();
    rep.observed = d.observed_cells();
    rep.overall = rep.total > 0
                      ? static_cast<double>(rep.total - rep.observed) / static_cast<double>(rep.total)
                      : 0.0;
    rep.num_numeric = R;
    for (int size : d.category_sizes()) rep.sum_categories_minus_one += size - 1;
    for (int r = 0; r < R; ++r) {
        long miss = 0;
        for (int obj = 0; obj < N; ++obj) miss += d.x_observed(obj, r) ? 0 : 1;
        rep.feature_names.push_back(d.numeric_specs[r].name);
        rep.per_feature.push_back(N > 0 ? static_cast<double>(miss) / N : 0.0);
    }
    for (int c = 0; c < C; ++c) {
        long miss = 0;
        for (int obj = 0; obj < N; ++obj) miss += d.y_observed(obj, c) ? 0 : 1;
        rep.feature_names.push_back(d.categorical_specs[c].name);
        rep.per_feature.push_back(N > 0 ? static_cast<double>(miss) / N : 0.0);
    }
    return rep;
}

}  // namespace mixclust
