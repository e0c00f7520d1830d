#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mixclust/network.hpp"
#include "mixclust/synth.hpp"
#include "testutil.hpp"

using namespace mixclust;

namespace {

DistanceMatrix matrix_from(const std::vector<std::vector<double>>& rows) {
    DistanceMatrix m;
    m.n = static_cast<int>(rows.size());
    m.dist.resize(static_cast<std::size_t>(m.n) * m.n);
    m.shared.assign(static_cast<std::size_t>(m.n) * m.n, 1);
    for (int i = 0; i < m.n; ++i)
        for (int j = 0; j < m.n; ++j) m.dist[static_cast<std::size_t>(i) * m.n + j] = rows[i][j];
    return m;
}

std::vector<std::string> ids_for(int n) {
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("n" + std::to_string(i));
    return ids;
}

}  // namespace

TEST_CASE("distance_matrix: identical objects score 0") {
    auto d = testutil::make_dataset(2, 2, {2});
    for (int i = 0; i < 2; ++i) {
        d.set_x(i, 0, 1.5);
        d.set_x(i, 1, -2.0);
        d.set_y(i, 0, 1);
    }
    auto m = distance_matrix(d);
    CHECK(m.at(0, 1) == 0.0);
    CHECK(m.shared_at(0, 1) == 3);
}

TEST_CASE("distance_matrix: one differing categorical feature scores exactly 1/20") {
    auto d = testutil::make_dataset(2, 0, {3});
    d.set_y(0, 0, 0);
    d.set_y(1, 0, 2);
    auto m = distance_matrix(d);
    CHECK(m.at(0, 1) == 1.0 / 20.0);
}

TEST_CASE("distance_matrix: mixed missingness hand case vs independent recount") {
    // 3 numeric + 4 categorical, values chosen so only some cells overlap.
    auto d = testutil::make_dataset(2, 3, {2, 2, 3, 2});
    d.set_x(0, 0, 1.0);
    d.set_x(0, 2, 4.0);
    d.set_x(1, 0, 2.5);
    d.set_x(1, 1, 7.0);
    d.set_x(1, 2, 3.0);
    d.set_y(0, 0, 0);
    d.set_y(0, 1, 1);
    d.set_y(0, 3, 1);
    d.set_y(1, 0, 1);
    d.set_y(1, 2, 2);
    d.set_y(1, 3, 1);
    auto m = distance_matrix(d);
    // Overlap: num_1 (1.0 vs 2.5), num_3 (4.0 vs 3.0); cat_1 mismatch, cat_4 match.
    const double expect = (1.0 - 2.5) * (1.0 - 2.5) + (4.0 - 3.0) * (4.0 - 3.0) + 1.0 / 20.0;
    CHECK(m.at(0, 1) == expect);
    CHECK(m.at(1, 0) == expect);
    CHECK(m.shared_at(0, 1) == 4);

    // Independent per-cell recount.
    double recount = 0.0;
    for (int r = 0; r < 3; ++r)
        if (d.x_observed(0, r) && d.x_observed(1, r)) {
            double diff = d.x_at(0, r) - d.x_at(1, r);
            recount += diff * diff;
        }
    for (int c = 0; c < 4; ++c)
        if (d.y_observed(0, c) && d.y_observed(1, c) && d.y_at(0, c) != d.y_at(1, c))
            recount += 0.05;
    CHECK(m.at(0, 1) == doctest::Approx(recount).epsilon(1e-15));
}

TEST_CASE("distance_matrix: no shared features means distance 0 and it is counted") {
    auto d = testutil::make_dataset(2, 1, {2});
    d.set_x(0, 0, 5.0);
    d.set_y(1, 0, 1);
    auto m = distance_matrix(d);
    CHECK(m.at(0, 1) == 0.0);
    CHECK(m.shared_at(0, 1) == 0);
    auto g = build_graph(m, ids_for(2), {0, 0});
    CHECK(g.zero_shared_pairs == 1);
    CHECK(g.edges.size() == 1);  // D = 0 < 0.5, adjacent by the published rule
    // The overlap filter removes exactly that artifact.
    auto filtered = build_graph(m, ids_for(2), {0, 0}, 0.5, 1);
    CHECK(filtered.edges.empty());
}

TEST_CASE("distance_matrix invariants on random corpora") {
    Rng rng = Rng::from_seed(61);
    for (int trial = 0; trial < 5; ++trial) {
        Dataset d = testutil::random_dataset(25, 3, {2, 3}, 0.4, rng);
        auto m = distance_matrix(d);
        for (int i = 0; i < 25; ++i) {
            CHECK(m.at(i, i) == 0.0);
            for (int j = 0; j < 25; ++j) {
                CHECK(m.at(i, j) == m.at(j, i));
                CHECK(m.at(i, j) >= 0.0);
                CHECK(std::isfinite(m.at(i, j)));
            }
        }
    }
}

TEST_CASE("distance_matrix: reordering objects permutes rows and columns") {
    Rng rng = Rng::from_seed(67);
    Dataset d = testutil::random_dataset(12, 2, {3}, 0.3, rng);
    auto m = distance_matrix(d);
    std::vector<int> perm{3, 1, 4, 0, 2, 5, 11, 7, 9, 10, 6, 8};
    Dataset shuffled = d.subset(perm);
    auto m2 = distance_matrix(shuffled);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) CHECK(m2.at(i, j) == m.at(perm[i], perm[j]));
}

TEST_CASE("build_graph: strict threshold, no edge at exactly 0.5") {
    auto m = matrix_from({{0.0, 0.5}, {0.5, 0.0}});
    auto g = build_graph(m, ids_for(2), {0, 1});
    CHECK(g.edges.empty());
    CHECK(g.nodes.empty());
    CHECK(g.isolated_ids.size() == 2);
    // Just below the threshold the edge exists.
    auto m2 = matrix_from({{0.0, 0.4999999}, {0.4999999, 0.0}});
    auto g2 = build_graph(m2, ids_for(2), {0, 1});
    CHECK(g2.edges.size() == 1);
}

TEST_CASE("build_graph: all-zero matrix gives the complete triangle") {
    auto m = matrix_from({{0, 0, 0}, {0, 0, 0}, {0, 0, 0}});
    auto g = build_graph(m, ids_for(3), {0, 1, 2});
    CHECK(g.nodes.size() == 3);
    CHECK(g.edges.size() == 3);
    CHECK(g.isolated_ids.empty());
}

TEST_CASE("build_graph: random matrix edge set equals a double-loop recount") {
    Rng rng = Rng::from_seed(71);
    const int n = 30;
    DistanceMatrix m;
    m.n = n;
    m.dist.assign(static_cast<std::size_t>(n) * n, 0.0);
    m.shared.assign(static_cast<std::size_t>(n) * n, 1);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double v = rng.uniform01();
            m.dist[static_cast<std::size_t>(i) * n + j] = v;
            m.dist[static_cast<std::size_t>(j) * n + i] = v;
        }
    auto g = build_graph(m, ids_for(n), std::vector<int>(n, 0), 0.5);
    long expect = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (m.at(i, j) < 0.5) ++expect;
    CHECK(static_cast<long>(g.edges.size()) == expect);
    // Monotonicity in the threshold: raising it never removes an edge.
    auto bigger = build_graph(m, ids_for(n), std::vector<int>(n, 0), 0.7);
    CHECK(bigger.edges.size() >= g.edges.size());
    std::set<std::pair<std::string, std::string>> small_edges, big_edges;
    for (const auto& [a, b] : g.edges) small_edges.insert({g.nodes[a].id, g.nodes[b].id});
    for (const auto& [a, b] : bigger.edges) big_edges.insert({bigger.nodes[a].id, bigger.nodes[b].id});
    for (const auto& e : small_edges) CHECK(big_edges.count(e) == 1);
}

TEST_CASE("layout: single node sits at the frame center") {
    NetworkGraph g;
    g.nodes.push_back({"solo", 0, 0.0, 0.0});
    layout_force_directed(g, 100, 3);
    CHECK(g.nodes[0].x == 0.5);
    CHECK(g.nodes[0].y == 0.5);
}

TEST_CASE("layout: two connected nodes settle near the ideal edge length") {
    NetworkGraph g;
    g.nodes.push_back({"a", 0, 0.0, 0.0});
    g.nodes.push_back({"b", 1, 0.0, 0.0});
    g.edges.push_back({0, 1});
    layout_force_directed(g, 500, 11);
    const double kappa = std::sqrt(1.0 / 2.0);  // two-body equilibrium separation
    const double dx = g.nodes[0].x - g.nodes[1].x;
    const double dy = g.nodes[0].y - g.nodes[1].y;
    const double dist = std::sqrt(dx * dx + dy * dy);
    CHECK(std::abs(dist - kappa) <= 0.2 * kappa);
}

TEST_CASE("layout: identical seed gives bit-identical coordinates") {
    auto make = [&] {
        NetworkGraph g;
        for (int i = 0; i < 8; ++i) g.nodes.push_back({"n" + std::to_string(i), i % 3, 0, 0});
        for (int i = 0; i < 7; ++i) g.edges.push_back({i, i + 1});
        g.edges.push_back({0, 4});
        return g;
    };
    NetworkGraph g1 = make(), g2 = make();
    layout_force_directed(g1, 300, 42);
    layout_force_directed(g2, 300, 42);
    for (std::size_t i = 0; i < g1.nodes.size(); ++i) {
        CHECK(g1.nodes[i].x == g2.nodes[i].x);
        CHECK(g1.nodes[i].y == g2.nodes[i].y);
    }
    NetworkGraph g3 = make();
    layout_force_directed(g3, 300, 43);
    bool any_differ = false;
    for (std::size_t i = 0; i < g1.nodes.size(); ++i)
        any_differ |= (g1.nodes[i].x != g3.nodes[i].x);
    CHECK(any_differ);
}

TEST_CASE("layout: coordinates stay finite and inside the frame") {
    Rng rng = Rng::from_seed(73);
    NetworkGraph g;
    for (int i = 0; i < 20; ++i) g.nodes.push_back({"n" + std::to_string(i), 0, 0, 0});
    for (int i = 0; i < 20; ++i)
        for (int j = i + 1; j < 20; ++j)
            if (rng.uniform01() < 0.15) g.edges.push_back({i, j});
    layout_force_directed(g, 500, 5);
    for (const auto& node : g.nodes) {
        CHECK(std::isfinite(node.x));
        CHECK(std::isfinite(node.y));
        CHECK(node.x >= 0.0);
        CHECK(node.x <= 1.0);
        CHECK(node.y >= 0.0);
        CHECK(node.y <= 1.0);
    }
}

TEST_CASE("layout: cooling reduces the FR energy on most seeded graphs") {
    int improved = 0;
    const int trials = 50;
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng = Rng::from_seed(1000 + trial);
        const int n = 6 + static_cast<int>(rng.uniform_below(10));
        NetworkGraph early, late;
        for (int i = 0; i < n; ++i) {
            early.nodes.push_back({"n" + std::to_string(i), 0, 0, 0});
            late.nodes.push_back({"n" + std::to_string(i), 0, 0, 0});
        }
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (rng.uniform01() < 0.3) {
                    early.edges.push_back({i, j});
                    late.edges.push_back({i, j});
                }
        layout_force_directed(early, 1, 2000 + trial);
        layout_force_directed(late, 500, 2000 + trial);
        if (layout_energy(late) <= layout_energy(early)) ++improved;
    }
    CHECK(improved >= 45);  // >= 90% of 50
}

TEST_CASE("export: JSON with empty edges, DOT edge statements, SVG shape") {
    NetworkGraph g;
    g.nodes.push_back({"a", 0, 0.1, 0.2});
    g.nodes.push_back({"b", 1, 0.8, 0.9});
    g.threshold = 0.5;
    g.has_coordinates = true;
    SUBCASE("empty edge array in JSON") {
        auto j = graph_to_json(g);
        CHECK(j.at("edges").empty());
        CHECK(j.at("nodes").size() == 2);
        CHECK(j.at("format") == kGraphFormat);
    }
    SUBCASE("triangle DOT has exactly 3 edge statements") {
        NetworkGraph tri;
        for (int i = 0; i < 3; ++i) tri.nodes.push_back({"t" + std::to_string(i), i, 0, 0});
        tri.edges = {{0, 1}, {0, 2}, {1, 2}};
        auto dot = graph_to_dot(tri);
        std::size_t count = 0, pos = 0;
        while ((pos = dot.find(" -- ", pos)) != std::string::npos) {
            ++count;
            pos += 4;
        }
        CHECK(count == 3);
        CHECK(dot.find("graph clusters {") == 0);
        // First four cluster colors follow the yellow/blue/cyan/green convention.
        CHECK(dot.find("#ffff00") != std::string::npos);
        CHECK(dot.find("#0000ff") != std::string::npos);
        CHECK(dot.find("#00ffff") != std::string::npos);
    }
    SUBCASE("SVG is a valid static document") {
        auto svg = graph_to_svg(g);
        CHECK(svg.find("<svg") != std::string::npos);
        CHECK(svg.find("version=\"1.1\"") != std::string::npos);
        CHECK(svg.find("<circle") != std::string::npos);
    }
    SUBCASE("unknown format name is a usage error") {
        CHECK_THROWS_AS(parse_graph_format("png"), UsageError);
    }
}

TEST_CASE("export: fitted corpus JSON node count equals N minus isolated") {
    GeneratorSpec spec;
    spec.K = 2;
    spec.N = 40;
    spec.R = 2;
    spec.C = 3;
    spec.separation = 4.0;
    spec.missing_rate = 0.3;
    spec.seed = 13;
    SynthResult synth = generate(spec);
    auto m = distance_matrix(synth.data);
    auto g = build_graph(m, synth.data.ids, synth.labels, 0.5);
    layout_force_directed(g, 50, 1);
    auto j = graph_to_json(g);
    CHECK(j.at("nodes").size() + j.at("isolated_count").get<std::size_t>() ==
          static_cast<std::size_t>(spec.N));
}
