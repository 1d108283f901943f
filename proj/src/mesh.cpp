#include "meshdeform/mesh.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <queue>
#include <sstream>
#include <tuple>

namespace meshdeform {

namespace {

std::int64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::int64_t>(a) << 32) | static_cast<std::int64_t>(b);
}

}  // namespace

int Mesh::edge_index(int a, int b) const {
    auto it = edge_lookup_.find(edge_key(a, b));
    return it == edge_lookup_.end() ? -1 : it->second;
}

Vec3 Mesh::bbox_min() const {
    Vec3 lo = Vec3::Constant(kInfinity);
    for (const Vec3& v : vertices) lo = lo.cwiseMin(v);
    return lo;
}

Vec3 Mesh::bbox_max() const {
    Vec3 hi = Vec3::Constant(-kInfinity);
    for (const Vec3& v : vertices) hi = hi.cwiseMax(v);
    return hi;
}

double Mesh::bbox_diagonal() const {
    return (bbox_max() - bbox_min()).norm();
}

Mesh make_mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> faces) {
    Mesh mesh;
    mesh.vertices = std::move(vertices);
    mesh.faces = std::move(faces);

    const int nv = mesh.vertex_count();
    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto& face = mesh.faces[f];
        for (int c = 0; c < 3; ++c) {
            if (face[c] < 0 || face[c] >= nv) {
                throw DataError("face " + std::to_string(f) + " references vertex " +
                                std::to_string(face[c]) + " outside [0, " +
                                std::to_string(nv) + ")");
            }
        }
        if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
            throw DataError("face " + std::to_string(f) + " has repeated vertex indices");
        }
    }

    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto& face = mesh.faces[f];
        for (int c = 0; c < 3; ++c) {
            const int a = face[c];
            const int b = face[(c + 1) % 3];
            const std::int64_t key = edge_key(a, b);
            auto it = mesh.edge_lookup_.find(key);
            if (it == mesh.edge_lookup_.end()) {
                MeshEdge edge;
                edge.v0 = std::min(a, b);
                edge.v1 = std::max(a, b);
                edge.rest_length = (mesh.vertices[a] - mesh.vertices[b]).norm();
                if (!(edge.rest_length > 0.0)) {
                    throw DataError("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                                    ") has zero rest length");
                }
                edge.face0 = f;
                mesh.edge_lookup_.emplace(key, static_cast<int>(mesh.edges.size()));
                mesh.edges.push_back(edge);
            } else {
                MeshEdge& edge = mesh.edges[it->second];
                if (edge.face1 != -1) {
                    throw DataError("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                                    ") is shared by more than two faces");
                }
                edge.face1 = f;
            }
        }
    }

    mesh.vertex_star.resize(nv);
    for (int e = 0; e < static_cast<int>(mesh.edges.size()); ++e) {
        const MeshEdge& edge = mesh.edges[e];
        mesh.vertex_star[edge.v0].emplace_back(edge.v1, e);
        mesh.vertex_star[edge.v1].emplace_back(edge.v0, e);
        if (edge.face1 != -1) {
            mesh.face_adjacency.push_back({e, edge.face0, edge.face1});
        }
    }
    for (auto& star : mesh.vertex_star) {
        std::sort(star.begin(), star.end());
    }
    return mesh;
}

Mesh load_obj(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open OBJ file: " + path.string());
    }

    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x() >> v.y() >> v.z())) {
                throw DataError(path.string() + ":" + std::to_string(line_number) +
                                ": malformed vertex record");
            }
            vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> polygon;
            std::string token;
            while (ls >> token) {
                // strip /texture/normal suffixes
                const auto slash = token.find('/');
                if (slash != std::string::npos) token.resize(slash);
                int index = 0;
                try {
                    index = std::stoi(token);
                } catch (const std::exception&) {
                    throw DataError(path.string() + ":" + std::to_string(line_number) +
                                    ": malformed face index '" + token + "'");
                }
                if (index < 1 || index > static_cast<int>(vertices.size())) {
                    throw DataError(path.string() + ":" + std::to_string(line_number) +
                                    ": face index " + std::to_string(index) +
                                    " out of range (have " + std::to_string(vertices.size()) +
                                    " vertices)");
                }
                polygon.push_back(index - 1);
            }
            if (polygon.size() < 3) {
                throw DataError(path.string() + ":" + std::to_string(line_number) +
                                ": face with fewer than 3 vertices");
            }
            for (size_t k = 1; k + 1 < polygon.size(); ++k) {
                faces.push_back({polygon[0], polygon[k], polygon[k + 1]});
            }
        }
    }
    if (vertices.empty() || faces.empty()) {
        throw DataError(path.string() + ": empty mesh (needs both `v` and `f` records)");
    }
    return make_mesh(std::move(vertices), std::move(faces));
}

void save_obj(const std::filesystem::path& path, const VertexField3& positions,
              const std::vector<std::array<int, 3>>& faces) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write OBJ file: " + path.string());
    }
    char buf[128];
    for (const Vec3& v : positions) {
        std::snprintf(buf, sizeof(buf), "v %.6f %.6f %.6f\n", v.x(), v.y(), v.z());
        out << buf;
    }
    for (const auto& f : faces) {
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    }
    if (!out) {
        throw DataError("write failed: " + path.string());
    }
}

void save_obj(const std::filesystem::path& path, const Mesh& mesh) {
    save_obj(path, mesh.vertices, mesh.faces);
}

std::vector<int> one_ring(const Mesh& mesh, int vertex) {
    if (vertex < 0 || vertex >= mesh.vertex_count()) {
        throw DataError("one_ring: vertex index " + std::to_string(vertex) + " out of range");
    }
    std::vector<int> ring;
    ring.reserve(mesh.vertex_star[vertex].size());
    for (const auto& [neighbor, edge] : mesh.vertex_star[vertex]) {
        (void)edge;
        ring.push_back(neighbor);
    }
    return ring;
}

namespace {

// cot of the angle at `apex` in triangle (apex, a, b); throws on zero area.
double cot_at(const Mesh& mesh, int face, int apex, int a, int b) {
    const Vec3 u = mesh.vertices[a] - mesh.vertices[apex];
    const Vec3 w = mesh.vertices[b] - mesh.vertices[apex];
    const double cross_norm = u.cross(w).norm();
    if (cross_norm <= 1e-12 * u.norm() * w.norm()) {
        throw NumericalError("cotangent_weights: face " + std::to_string(face) +
                             " has zero area");
    }
    return u.dot(w) / cross_norm;
}

}  // namespace

std::vector<double> cotangent_weights(const Mesh& mesh) {
    std::vector<double> weights(mesh.edges.size(), 0.0);
    for (int e = 0; e < static_cast<int>(mesh.edges.size()); ++e) {
        const MeshEdge& edge = mesh.edges[e];
        for (int face : {edge.face0, edge.face1}) {
            if (face == -1) continue;
            const auto& f = mesh.faces[face];
            int apex = -1;
            for (int c = 0; c < 3; ++c) {
                if (f[c] != edge.v0 && f[c] != edge.v1) apex = f[c];
            }
            weights[e] += 0.5 * cot_at(mesh, face, apex, edge.v0, edge.v1);
        }
    }
    return weights;
}

GeodesicResult multi_source_geodesic(const Mesh& mesh, const std::vector<int>& sources) {
    if (sources.empty()) {
        throw DataError("multi_source_geodesic: empty source set");
    }
    const int nv = mesh.vertex_count();
    GeodesicResult result;
    result.distance.assign(nv, kInfinity);
    result.nearest_source.assign(nv, -1);

    std::vector<int> unique_sources = sources;
    std::sort(unique_sources.begin(), unique_sources.end());
    unique_sources.erase(std::unique(unique_sources.begin(), unique_sources.end()),
                         unique_sources.end());

    // (distance, source, vertex); lexicographic pops give the smallest source
    // index among equal distances.
    using Entry = std::tuple<double, int, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
    for (int s : unique_sources) {
        if (s < 0 || s >= nv) {
            throw DataError("multi_source_geodesic: source " + std::to_string(s) +
                            " out of range");
        }
        result.distance[s] = 0.0;
        result.nearest_source[s] = s;
        heap.emplace(0.0, s, s);
    }

    std::vector<char> finalized(nv, 0);
    while (!heap.empty()) {
        const auto [d, s, v] = heap.top();
        heap.pop();
        if (finalized[v] || d != result.distance[v] || s != result.nearest_source[v]) {
            continue;
        }
        finalized[v] = 1;
        for (const auto& [n, e] : mesh.vertex_star[v]) {
            if (finalized[n]) continue;
            const double nd = d + mesh.edges[e].rest_length;
            if (nd < result.distance[n] ||
                (nd == result.distance[n] && s < result.nearest_source[n])) {
                result.distance[n] = nd;
                result.nearest_source[n] = s;
                heap.emplace(nd, s, n);
            }
        }
    }
    return result;
}

std::vector<Vec3> face_normals(const Mesh& mesh, const VertexField3& positions) {
    if (positions.size() != mesh.vertices.size()) {
        throw DataError("face_normals: positions length " + std::to_string(positions.size()) +
                        " != vertex count " + std::to_string(mesh.vertices.size()));
    }
    std::vector<Vec3> normals(mesh.faces.size());
    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto& face = mesh.faces[f];
        const Vec3 u = positions[face[1]] - positions[face[0]];
        const Vec3 w = positions[face[2]] - positions[face[0]];
        const Vec3 n = u.cross(w);
        const double norm = n.norm();
        if (norm <= 1e-12 * u.norm() * w.norm()) {
            throw NumericalError("face_normals: face " + std::to_string(f) +
                                 " is degenerate at the evaluated positions");
        }
        normals[f] = n / norm;
    }
    return normals;
}

}  // namespace meshdeform
