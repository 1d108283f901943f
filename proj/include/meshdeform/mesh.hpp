#pragma once

// Triangle-mesh container with the adjacency, geodesic-distance and
// differential-geometry primitives the deformation modules consume.
//
// The mesh and every derived table are immutable after construction and safe
// to share across threads.

#include "meshdeform/common.hpp"

#include <array>
#include <filesystem>
#include <unordered_map>

namespace meshdeform {

struct MeshEdge {
    int v0 = -1;  // v0 < v1
    int v1 = -1;
    double rest_length = 0.0;
    int face0 = -1;
    int face1 = -1;  // -1 on boundary edges
};

// Two faces sharing an interior edge.
struct FacePair {
    int edge = -1;
    int f0 = -1;
    int f1 = -1;
};

struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;  // counter-clockwise winding
    std::vector<MeshEdge> edges;
    std::vector<FacePair> face_adjacency;

    // Per-vertex (neighbor vertex, edge id) pairs, sorted by neighbor index.
    std::vector<std::vector<std::pair<int, int>>> vertex_star;

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int face_count() const { return static_cast<int>(faces.size()); }

    // Undirected edge id for (a, b), or -1 if absent.
    int edge_index(int a, int b) const;

    Vec3 bbox_min() const;
    Vec3 bbox_max() const;
    double bbox_diagonal() const;

private:
    friend Mesh make_mesh(std::vector<Vec3>, std::vector<std::array<int, 3>>);
    std::unordered_map<std::int64_t, int> edge_lookup_;
};

// Builds a mesh and derives all adjacency. Throws DataError on out-of-range
// or degenerate faces, zero-length edges, or an edge shared by > 2 faces.
Mesh make_mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> faces);

// OBJ subset: `v x y z` and `f i j k...` (1-based, `i/...` suffixes ignored);
// polygons are fan-triangulated from the first polygon vertex.
Mesh load_obj(const std::filesystem::path& path);

// Fixed 6-decimal output for byte determinism.
void save_obj(const std::filesystem::path& path, const Mesh& mesh);
void save_obj(const std::filesystem::path& path, const VertexField3& positions,
              const std::vector<std::array<int, 3>>& faces);

// Vertices sharing an edge with v, ascending; excludes v itself.
std::vector<int> one_ring(const Mesh& mesh, int vertex);

// Cotangent weight per mesh.edges entry, 0.5 * sum of cot(opposite angle)
// over incident faces, on rest geometry. Symmetric by construction; not
// clamped, obtuse triangles yield negative entries.
std::vector<double> cotangent_weights(const Mesh& mesh);

struct GeodesicResult {
    std::vector<double> distance;   // +infinity when unreachable
    std::vector<int> nearest_source;  // source vertex id, -1 when unreachable
};

// Shortest-path distance over the edge graph with Euclidean edge lengths
// (Dijkstra). Nearest-source ties break to the smallest source vertex index.
GeodesicResult multi_source_geodesic(const Mesh& mesh, const std::vector<int>& sources);

// Unit normals from winding-ordered edge vectors at the given positions.
// Throws NumericalError naming the first degenerate face.
std::vector<Vec3> face_normals(const Mesh& mesh, const VertexField3& positions);

}  // namespace meshdeform
