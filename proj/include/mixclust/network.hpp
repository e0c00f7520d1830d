#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixclust/common.hpp"
#include "mixclust/dataset.hpp"
#include "mixclust/rng.hpp"

namespace mixclust {

/// Symmetric pairwise distances with a zero diagonal, plus the count of
/// features both objects have observed (pairs sharing none score 0 and show
/// up as spuriously close; the shared counts let callers filter or report
/// that).
struct DistanceMatrix {
    int n = 0;
    std::vector<double> dist;  // n x n
    std::vector<int> shared;   // n x n

    double at(int i, int j) const { return dist[static_cast<std::size_t>(i) * n + j]; }
    int shared_at(int i, int j) const { return shared[static_cast<std::size_t>(i) * n + j]; }
};

/// D_ij = sum of squared differences over numeric features observed by both,
/// plus 1/20 per mismatching categorical feature observed by both.
inline DistanceMatrix distance_matrix(const Dataset& d) {
    const int N = d.n(), R = d.num_numeric(), C = d.num_categorical();
    DistanceMatrix m;
    m.n = N;
    m.dist.assign(static_cast<std::size_t>(N) * N, 0.0);
    m.shared.assign(static_cast<std::size_t>(N) * N, 0);
    for (int i = 0; i < N; ++i) {
        for (int j = i + 1; j < N; ++j) {
            double total = 0.0;
            int both = 0;
            for (int r = 0; r < R; ++r)
                if (d.x_observed(i, r) && d.x_observed(j, r)) {
                    const double diff = d.x_at(i, r) - d.x_at(j, r);
                    total += diff * diff;
                    ++both;
                }
            for (int c = 0; c < C; ++c)
                if (d.y_observed(i, c) && d.y_observed(j, c)) {
                    if (d.y_at(i, c) != d.y_at(j, c)) total += 1.0 / 20.0;
                    ++both;
                }
            m.dist[static_cast<std::size_t>(i) * N + j] = total;
            m.dist[static_cast<std::size_t>(j) * N + i] = total;
            m.shared[static_cast<std::size_t>(i) * N + j] = both;
            m.shared[static_cast<std::size_t>(j) * N + i] = both;
        }
    }
    return m;
}

struct GraphNode {
    std::string id;
    int label = 0;
    double x = 0.0;
    double y = 0.0;
};

struct NetworkGraph {
    std::vector<GraphNode> nodes;
    std::vector<std::pair<int, int>> edges;  // indices into nodes, first < second
    double threshold = 0.5;
    int min_shared_features = 0;
    std::vector<std::string> isolated_ids;   // excluded zero-degree objects
    int zero_shared_pairs = 0;               // object pairs with no common observed feature
    bool has_coordinates = false;
};

/// Adjacency under the strict rule D < threshold. Zero-degree objects are
/// dropped from the node list and reported; min_shared_features > 0
/// additionally suppresses edges between objects with too little overlap.
inline NetworkGraph build_graph(const DistanceMatrix& m, const std::vector<std::string>& ids,
                                const std::vector<int>& labels, double threshold = 0.5,
                                int min_shared_features = 0) {
    if (!(threshold > 0.0)) throw ValueError("threshold must be > 0");
    const int N = m.n;
    NetworkGraph g;
    g.threshold = threshold;
    g.min_shared_features = min_shared_features;
    std::vector<int> degree(N, 0);
    std::vector<std::pair<int, int>> raw_edges;
    for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j) {
            if (m.shared_at(i, j) == 0) ++g.zero_shared_pairs;
            if (m.at(i, j) < threshold && m.shared_at(i, j) >= min_shared_features) {
                raw_edges.push_back({i, j});
                ++degree[i];
                ++degree[j];
            }
        }
    std::vector<int> node_index(N, -1);
    for (int i = 0; i < N; ++i) {
        if (degree[i] > 0) {
            node_index[i] = static_cast<int>(g.nodes.size());
            g.nodes.push_back({ids[i], labels.empty() ? 0 : labels[i], 0.0, 0.0});
        } else {
            g.isolated_ids.push_back(ids[i]);
        }
    }
    for (const auto& [i, j] : raw_edges) g.edges.push_back({node_index[i], node_index[j]});
    return g;
}

/// Potential whose negative gradient gives the layout forces: attractive
/// d^3/(3 kappa) per edge, repulsive -kappa^2 log d per node pair. Used as a
/// cooling sanity check.
inline double layout_energy(const NetworkGraph& g) {
    const int V = static_cast<int>(g.nodes.size());
    const double kappa = std::sqrt(1.0 / std::max(V, 1));
    double energy = 0.0;
    for (const auto& [a, b] : g.edges) {
        const double dx = g.nodes[a].x - g.nodes[b].x;
        const double dy = g.nodes[a].y - g.nodes[b].y;
        const double dist = std::max(std::sqrt(dx * dx + dy * dy), 1e-9);
        energy += dist * dist * dist / (3.0 * kappa);
    }
    for (int i = 0; i < V; ++i)
        for (int j = i + 1; j < V; ++j) {
            const double dx = g.nodes[i].x - g.nodes[j].x;
            const double dy = g.nodes[i].y - g.nodes[j].y;
            const double dist = std::max(std::sqrt(dx * dx + dy * dy), 1e-9);
            energy -= kappa * kappa * std::log(dist);
        }
    return energy;
}

/// Classic force-directed embedding on the unit square: ideal edge length
/// kappa = sqrt(area/|V|), repulsion kappa^2/d between all pairs, attraction
/// d^2/kappa along edges, displacement capped by a linearly cooling
/// temperature that starts at 0.1 * sqrt(area). Deterministic given the seed.
inline void layout_force_directed(NetworkGraph& g, int iterations = 500, std::uint64_t seed = 0) {
    const int V = static_cast<int>(g.nodes.size());
    if (V == 0) throw ValueError("cannot lay out an empty graph");
    if (V == 1) {
        g.nodes[0].x = 0.5;
        g.nodes[0].y = 0.5;
        g.has_coordinates = true;
        return;
    }
    const double area = 1.0;
    const double kappa = std::sqrt(area / V);
    Rng rng = Rng::from_seed(mix_seed({seed, 0x6c61796f7574ULL}));
    for (auto& node : g.nodes) {
        node.x = rng.uniform01();
        node.y = rng.uniform01();
    }
    std::vector<double> disp_x(V), disp_y(V);
    const double t0 = 0.1 * std::sqrt(area);
    for (int iter = 0; iter < iterations; ++iter) {
        const double temp = t0 * (1.0 - static_cast<double>(iter) / iterations);
        std::fill(disp_x.begin(), disp_x.end(), 0.0);
        std::fill(disp_y.begin(), disp_y.end(), 0.0);
        for (int i = 0; i < V; ++i)
            for (int j = i + 1; j < V; ++j) {
                double dx = g.nodes[i].x - g.nodes[j].x;
                double dy = g.nodes[i].y - g.nodes[j].y;
                double dist = std::sqrt(dx * dx + dy * dy);
                if (dist < 1e-9) {
                    // Coincident nodes: push along a fixed direction.
                    dx = 1e-9;
                    dy = 0.0;
                    dist = 1e-9;
                }
                const double force = kappa * kappa / dist;
                disp_x[i] += dx / dist * force;
                disp_y[i] += dy / dist * force;
                disp_x[j] -= dx / dist * force;
                disp_y[j] -= dy / dist * force;
            }
        for (const auto& [a, b] : g.edges) {
            double dx = g.nodes[a].x - g.nodes[b].x;
            double dy = g.nodes[a].y - g.nodes[b].y;
            double dist = std::sqrt(dx * dx + dy * dy);
            if (dist < 1e-9) continue;
            const double force = dist * dist / kappa;
            disp_x[a] -= dx / dist * force;
            disp_y[a] -= dy / dist * force;
            disp_x[b] += dx / dist * force;
            disp_y[b] += dy / dist * force;
        }
        for (int i = 0; i < V; ++i) {
            const double len = std::sqrt(disp_x[i] * disp_x[i] + disp_y[i] * disp_y[i]);
            if (len < 1e-12) continue;
            const double step = std::min(len, temp);
            g.nodes[i].x = std::clamp(g.nodes[i].x + disp_x[i] / len * step, 0.0, 1.0);
            g.nodes[i].y = std::clamp(g.nodes[i].y + disp_y[i] / len * step, 0.0, 1.0);
        }
    }
    g.has_coordinates = true;
}

enum class GraphFormat { json, dot, svg };

inline GraphFormat parse_graph_format(const std::string& name) {
    if (name == "json") return GraphFormat::json;
    if (name == "dot") return GraphFormat::dot;
    if (name == "svg") return GraphFormat::svg;
    throw UsageError("unknown graph format '" + name + "' (expected json, dot or svg)");
}

/// Cluster palette: the first four mirror the cluster color convention used
/// in our reports (yellow, blue, cyan, green); further clusters continue
/// through a fixed extended list and then cycle.
inline std::string cluster_color(int label) {
    static const char* palette[] = {"#ffff00", "#0000ff", "#00ffff", "#00ff00",
                                    "#ff00ff", "#ff8000", "#804000", "#ff80c0",
                                    "#808080", "#808000", "#8000ff", "#008080"};
    if (label < 0) return "#c0c0c0";
    return palette[label % (sizeof(palette) / sizeof(palette[0]))];
}

inline constexpr const char* kGraphFormat = "mixclust.graph/1";

inline nlohmann::json graph_to_json(const NetworkGraph& g) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& node : g.nodes)
        nodes.push_back({{"id", node.id}, {"label", node.label}, {"x", node.x}, {"y", node.y}});
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [a, b] : g.edges) edges.push_back({{"source", a}, {"target", b}});
    return nlohmann::json{{"format", kGraphFormat},
                          {"threshold", g.threshold},
                          {"min_shared_features", g.min_shared_features},
                          {"nodes", std::move(nodes)},
                          {"edges", std::move(edges)},
                          {"isolated_count", static_cast<int>(g.isolated_ids.size())},
                          {"isolated_ids", g.isolated_ids},
                          {"zero_shared_pairs", g.zero_shared_pairs}};
}

namespace detail {

inline std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

inline std::string fixed6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace detail

inline std::string graph_to_dot(const NetworkGraph& g) {
    std::ostringstream out;
    out << "graph clusters {\n";
    out << "  node [style=filled, shape=circle];\n";
    for (const auto& node : g.nodes)
        out << "  \"" << detail::dot_escape(node.id) << "\" [fillcolor=\""
            << cluster_color(node.label) << "\"];\n";
    for (const auto& [a, b] : g.edges)
        out << "  \"" << detail::dot_escape(g.nodes[a].id) << "\" -- \""
            << detail::dot_escape(g.nodes[b].id) << "\";\n";
    out << "}\n";
    return out.str();
}

inline std::string graph_to_svg(const NetworkGraph& g) {
    if (!g.has_coordinates && !g.nodes.empty())
        throw ValueError("svg export requires layout coordinates");
    const double size = 800.0, margin = 20.0;
    auto sx = [&](double x) { return margin + x * size; };
    auto sy = [&](double y) { return margin + y * size; };
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
        << detail::fixed6(size + 2 * margin) << "\" height=\"" << detail::fixed6(size + 2 * margin)
        << "\">\n";
    out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& [a, b] : g.edges)
        out << "  <line x1=\"" << detail::fixed6(sx(g.nodes[a].x)) << "\" y1=\""
            << detail::fixed6(sy(g.nodes[a].y)) << "\" x2=\"" << detail::fixed6(sx(g.nodes[b].x))
            << "\" y2=\"" << detail::fixed6(sy(g.nodes[b].y))
            << "\" stroke=\"#b0b0b0\" stroke-width=\"1\"/>\n";
    for (const auto& node : g.nodes) {
        out << "  <circle cx=\"" << detail::fixed6(sx(node.x)) << "\" cy=\""
            << detail::fixed6(sy(node.y)) << "\" r=\"6\" fill=\"" << cluster_color(node.label)
            << "\" stroke=\"black\" stroke-width=\"0.5\"><title>" << node.id
            << "</title></circle>\n";
    }
    out << "</svg>\n";
    return out.str();
}

inline std::string export_graph(const NetworkGraph& g, GraphFormat format) {
    switch (format) {
        case GraphFormat::json:
            return graph_to_json(g).dump(2) + "\n";
        case GraphFormat::dot:
            return graph_to_dot(g);
        case GraphFormat::svg:
            return graph_to_svg(g);
    }
    throw UsageError("unknown graph format");
}

}  // namespace mixclust
