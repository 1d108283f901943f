#pragma once

// Control-node sampling and the vertex -> node influence structure that
// drives skinning.

#include "meshdeform/mesh.hpp"

#include <iosfwd>

namespace meshdeform {

enum class Metric { Geodesic, Euclidean };

std::string metric_name(Metric metric);
Metric metric_from_name(const std::string& name);

struct VertexInfluence {
    std::vector<int> neighbors;    // node ids, ascending distance
    std::vector<double> weights;   // nonnegative, sum to 1
};

struct DeformationGraph {
    std::vector<int> node_vertex_ids;
    Metric metric = Metric::Geodesic;
    std::vector<VertexInfluence> vertices;

    int node_count() const { return static_cast<int>(node_vertex_ids.size()); }
    int neighbor_count() const {
        return vertices.empty() ? 0 : static_cast<int>(vertices.front().neighbors.size());
    }
};

// Farthest-point sampling under the graph-geodesic metric, starting at
// seed_vertex; ties break to the smallest vertex index.
std::vector<int> sample_control_nodes(const Mesh& mesh, int n_node, int seed_vertex);

// For each vertex, the n_neighbor nearest nodes under the chosen metric with
// influence weights w = (1 - d/d_max)^2 normalized, d_max the distance to the
// (n_neighbor+1)-nearest node. All-tied neighborhoods fall back to uniform.
DeformationGraph build_graph(const Mesh& mesh, const std::vector<int>& nodes,
                             int n_neighbor, Metric metric);

std::string graph_to_json(const DeformationGraph& graph);
DeformationGraph graph_from_json(const std::string& text);

void save_graph(const std::filesystem::path& path, const DeformationGraph& graph);
DeformationGraph load_graph(const std::filesystem::path& path);

// Structural consistency against the mesh the graph will deform.
void validate_graph(const DeformationGraph& graph, const Mesh& mesh);

}  // namespace meshdeform
