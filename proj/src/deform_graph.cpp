#include "meshdeform/deform_graph.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <queue>

namespace meshdeform {

using json = nlohmann::ordered_json;

std::string metric_name(Metric metric) {
    return metric == Metric::Geodesic ? "geodesic" : "euclidean";
}

Metric metric_from_name(const std::string& name) {
    if (name == "geodesic") return Metric::Geodesic;
    if (name == "euclidean") return Metric::Euclidean;
    throw DataError("unknown metric '" + name + "' (expected geodesic or euclidean)");
}

std::vector<int> sample_control_nodes(const Mesh& mesh, int n_node, int seed_vertex) {
    const int nv = mesh.vertex_count();
    if (n_node < 1 || n_node > nv) {
        throw DataError("sample_control_nodes: n_node " + std::to_string(n_node) +
                        " outside [1, " + std::to_string(nv) + "]");
    }
    if (seed_vertex < 0 || seed_vertex >= nv) {
        throw DataError("sample_control_nodes: seed vertex out of range");
    }

    std::vector<double> dist(nv, kInfinity);
    std::vector<char> selected(nv, 0);
    std::vector<int> nodes;
    nodes.reserve(n_node);

    int next = seed_vertex;
    using Entry = std::pair<double, int>;
    for (int round = 0; round < n_node; ++round) {
        nodes.push_back(next);
        selected[next] = 1;

        // Incremental Dijkstra from the new node, relaxing the global
        // nearest-node distance field in place.
        std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
        if (dist[next] > 0.0) {
            dist[next] = 0.0;
            heap.emplace(0.0, next);
        }
        while (!heap.empty()) {
            const auto [d, v] = heap.top();
            heap.pop();
            if (d != dist[v]) continue;
            for (const auto& [n, e] : mesh.vertex_star[v]) {
                const double nd = d + mesh.edges[e].rest_length;
                if (nd < dist[n]) {
                    dist[n] = nd;
                    heap.emplace(nd, n);
                }
            }
        }

        if (round + 1 == n_node) break;
        int best = -1;
        double best_dist = -1.0;
        for (int v = 0; v < nv; ++v) {
            if (!selected[v] && dist[v] > best_dist) {
                best = v;
                best_dist = dist[v];
            }
        }
        if (best == -1 || best_dist == kInfinity) {
            throw DataError("sample_control_nodes: mesh has fewer than " +
                            std::to_string(n_node) + " vertices reachable from the seed");
        }
        next = best;
    }
    return nodes;
}

namespace {

struct Candidate {
    double distance;
    int node;
    bool operator<(const Candidate& other) const {
        return distance < other.distance ||
               (distance == other.distance && node < other.node);
    }
};

// Keeps the `keep` best candidates per vertex, ordered by (distance, node).
void bounded_insert(std::vector<Candidate>& list, Candidate c, size_t keep) {
    auto it = std::lower_bound(list.begin(), list.end(), c);
    list.insert(it, c);
    if (list.size() > keep) list.pop_back();
}

}  // namespace

DeformationGraph build_graph(const Mesh& mesh, const std::vector<int>& nodes,
                             int n_neighbor, Metric metric) {
    const int nv = mesh.vertex_count();
    const int np = static_cast<int>(nodes.size());
    if (n_neighbor < 1) {
        throw DataError("build_graph: n_neighbor must be >= 1");
    }
    if (n_neighbor + 1 > np) {
        throw DataError("build_graph: need at least n_neighbor+1 = " +
                        std::to_string(n_neighbor + 1) + " nodes, have " + std::to_string(np));
    }
    for (int p : nodes) {
        if (p < 0 || p >= nv) {
            throw DataError("build_graph: node vertex id " + std::to_string(p) +
                            " out of range");
        }
    }

    const size_t keep = static_cast<size_t>(n_neighbor) + 1;
    std::vector<std::vector<Candidate>> candidates(nv);

    if (metric == Metric::Geodesic) {
        for (int j = 0; j < np; ++j) {
            const GeodesicResult geo = multi_source_geodesic(mesh, {nodes[j]});
            for (int v = 0; v < nv; ++v) {
                if (geo.distance[v] == kInfinity) continue;
                bounded_insert(candidates[v], {geo.distance[v], j}, keep);
            }
        }
    } else {
        for (int v = 0; v < nv; ++v) {
            for (int j = 0; j < np; ++j) {
                const double d = (mesh.vertices[v] - mesh.vertices[nodes[j]]).norm();
                bounded_insert(candidates[v], {d, j}, keep);
            }
        }
    }

    DeformationGraph graph;
    graph.node_vertex_ids = nodes;
    graph.metric = metric;
    graph.vertices.resize(nv);
    for (int v = 0; v < nv; ++v) {
        const auto& cand = candidates[v];
        if (cand.size() < keep) {
            throw DataError("build_graph: vertex " + std::to_string(v) + " reaches only " +
                            std::to_string(cand.size()) + " of the required " +
                            std::to_string(keep) + " nodes (disconnected component?)");
        }
        const double d_max = cand[n_neighbor].distance;
        VertexInfluence& inf = graph.vertices[v];
        inf.neighbors.resize(n_neighbor);
        inf.weights.resize(n_neighbor);
        double total = 0.0;
        for (int i = 0; i < n_neighbor; ++i) {
            inf.neighbors[i] = cand[i].node;
            const double ratio = 1.0 - cand[i].distance / d_max;
            inf.weights[i] = ratio * ratio;
            total += inf.weights[i];
        }
        if (d_max == 0.0 || total == 0.0) {
            // all neighbors tied at d_max; the formula degenerates to uniform
            std::fill(inf.weights.begin(), inf.weights.end(), 1.0 / n_neighbor);
        } else {
            for (double& w : inf.weights) w /= total;
        }
    }
    return graph;
}

std::string graph_to_json(const DeformationGraph& graph) {
    json doc;
    doc["nodes"] = graph.node_vertex_ids;
    doc["metric"] = metric_name(graph.metric);
    json verts = json::array();
    for (const VertexInfluence& inf : graph.vertices) {
        verts.push_back({{"neighbors", inf.neighbors}, {"weights", inf.weights}});
    }
    doc["vertices"] = std::move(verts);
    return doc.dump(2) + "\n";
}

DeformationGraph graph_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("graph JSON parse error: ") + e.what());
    }
    DeformationGraph graph;
    try {
        graph.node_vertex_ids = doc.at("nodes").get<std::vector<int>>();
        graph.metric = metric_from_name(doc.at("metric").get<std::string>());
        for (const auto& entry : doc.at("vertices")) {
            VertexInfluence inf;
            inf.neighbors = entry.at("neighbors").get<std::vector<int>>();
            inf.weights = entry.at("weights").get<std::vector<double>>();
            graph.vertices.push_back(std::move(inf));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("graph JSON schema error: ") + e.what());
    }

    const int np = graph.node_count();
    for (const VertexInfluence& inf : graph.vertices) {
        if (inf.neighbors.size() != inf.weights.size() || inf.neighbors.empty()) {
            throw DataError("graph JSON: neighbor/weight lists malformed");
        }
        double total = 0.0;
        for (size_t i = 0; i < inf.neighbors.size(); ++i) {
            if (inf.neighbors[i] < 0 || inf.neighbors[i] >= np) {
                throw DataError("graph JSON: neighbor node id out of range");
            }
            if (inf.weights[i] < 0.0) {
                throw DataError("graph JSON: negative influence weight");
            }
            total += inf.weights[i];
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw DataError("graph JSON: vertex weights sum to " + std::to_string(total) +
                            ", expected 1");
        }
    }
    return graph;
}

void save_graph(const std::filesystem::path& path, const DeformationGraph& graph) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write graph file: " + path.string());
    out << graph_to_json(graph);
}

DeformationGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open graph file: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return graph_from_json(text);
}

void validate_graph(const DeformationGraph& graph, const Mesh& mesh) {
    if (static_cast<int>(graph.vertices.size()) != mesh.vertex_count()) {
        throw DataError("graph covers " + std::to_string(graph.vertices.size()) +
                        " vertices but mesh has " + std::to_string(mesh.vertex_count()));
    }
    for (int p : graph.node_vertex_ids) {
        if (p < 0 || p >= mesh.vertex_count()) {
            throw DataError("graph node vertex id " + std::to_string(p) +
                            " out of range for mesh");
        }
    }
}

}  // namespace meshdeform
