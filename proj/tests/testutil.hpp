#pragma once

// Shared builders for the test suite.

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mixclust/dataset.hpp"
#include "mixclust/model.hpp"
#include "mixclust/rng.hpp"

namespace testutil {

/// Dataset built directly in memory; cells given as (value, observed) with
/// observed=false cells carrying a placeholder value the code must ignore.
inline mixclust::Dataset make_dataset(int n, int num_numeric,
                                      const std::vector<int>& category_sizes) {
    mixclust::Dataset d;
    for (int r = 0; r < num_numeric; ++r) {
        d.numeric_specs.push_back(
            {"num_" + std::to_string(r + 1), mixclust::FeatureKind::numeric, {}, ""});
        d.column_order.push_back({mixclust::ColumnRef::Kind::numeric, r});
    }
    for (int c = 0; c < static_cast<int>(category_sizes.size()); ++c) {
        mixclust::FeatureSpec s{"cat_" + std::to_string(c + 1),
                                mixclust::FeatureKind::categorical, {}, ""};
        for (int v = 0; v < category_sizes[c]; ++v) s.categories.push_back("v" + std::to_string(v + 1));
        d.categorical_specs.push_back(std::move(s));
        d.column_order.push_back({mixclust::ColumnRef::Kind::categorical, c});
    }
    for (int i = 0; i < n; ++i) d.ids.push_back("obj_" + std::to_string(i + 1));
    d.x.assign(static_cast<std::size_t>(n) * num_numeric, 0.0);
    d.x_obs.assign(static_cast<std::size_t>(n) * num_numeric, 0);
    d.y.assign(static_cast<std::size_t>(n) * category_sizes.size(), 0);
    d.y_obs.assign(static_cast<std::size_t>(n) * category_sizes.size(), 0);
    d.annotations.assign(n, {});
    return d;
}

/// Random valid parameters for property tests.
inline mixclust::ModelParams random_params(int K, int R, const std::vector<int>& category_sizes,
                                           mixclust::Rng& rng) {
    mixclust::ModelParams p;
    p.K = K;
    p.pi.assign(K, 0.0);
    rng.dirichlet1(p.pi);
    p.mu.resize(static_cast<std::size_t>(K) * R);
    p.lambda.resize(static_cast<std::size_t>(K) * R);
    for (auto& m : p.mu) m = 4.0 * rng.normal();
    for (auto& l : p.lambda) l = 0.2 + 3.0 * rng.uniform01();
    p.rho.resize(K);
    for (int k = 0; k < K; ++k) {
        p.rho[k].resize(category_sizes.size());
        for (std::size_t c = 0; c < category_sizes.size(); ++c) {
            p.rho[k][c].assign(category_sizes[c], 0.0);
            rng.dirichlet1(p.rho[k][c]);
        }
    }
    return p;
}

/// Random dataset with the given missing rate; every generated value is
/// finite and categorical indices are valid.
inline mixclust::Dataset random_dataset(int n, int R, const std::vector<int>& category_sizes,
                                        double missing_rate, mixclust::Rng& rng) {
    mixclust::Dataset d = make_dataset(n, R, category_sizes);
    for (int i = 0; i < n; ++i) {
        for (int r = 0; r < R; ++r)
            if (rng.uniform01() >= missing_rate) d.set_x(i, r, 3.0 * rng.normal());
        for (std::size_t c = 0; c < category_sizes.size(); ++c)
            if (rng.uniform01() >= missing_rate)
                d.set_y(i, static_cast<int>(c),
                        static_cast<int>(rng.uniform_below(category_sizes[c])));
    }
    return d;
}

class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        dir_ = std::filesystem::temp_directory_path() /
               ("mixclust_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(dir_);
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() { std::filesystem::remove_all(dir_); }
    std::filesystem::path path() const { return dir_; }
    std::filesystem::path file(const std::string& name) const { return dir_ / name; }

  private:
    std::filesystem::path dir_;
};

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace testutil
