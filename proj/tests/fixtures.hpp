#pragma once

// Shared test meshes and independent oracles.

#include "meshdeform/mesh.hpp"
#include "meshdeform/skinning.hpp"

#include <random>

namespace fixtures {

using meshdeform::Mesh;
using meshdeform::Vec3;
using meshdeform::Mat3;

// Planar grid of (nx+1) x (ny+1) vertices triangulated with consistent
// diagonals, spacing `step`.
Mesh grid_mesh(int nx, int ny, double step = 1.0);

// Two triangles sharing the edge v0-v1, folded so the unit normals differ by
// `angle` radians; consistent winding.
Mesh folded_pair(double angle);

// UV sphere with (stacks-1)*slices + 2 vertices. stacks=21, slices=24 gives
// the 482-vertex sphere used by the CLI examples.
Mesh uv_sphere(int stacks, int slices, double radius = 1.0);

// Two parallel triangulated arms joined at one end; the gap between arms is
// smaller than the arm length so Euclidean and geodesic neighborhoods differ.
// `arm_of[v]` is 0 (arm A), 1 (arm B) or -1 (junction).
struct UStrip {
    Mesh mesh;
    std::vector<int> arm_of;
};
UStrip u_strip();

// Random triangulated surface whose edge lengths are all exactly-representable
// dyadic values (3-4-5 grid cells, axis fold lines, power-of-two scaling,
// random vertex relabeling), so every shortest-path sum is exact in double
// arithmetic regardless of association order.
Mesh random_exact_mesh(std::mt19937& rng, int max_cells_x = 12, int max_cells_y = 5);

// Random planar-ish triangulated patch with generic double coordinates.
Mesh random_bumpy_grid(std::mt19937& rng, int nx, int ny);

// All-pairs shortest paths by Floyd-Warshall over the mesh edge graph, with
// the same edge lengths the library uses.
std::vector<std::vector<double>> floyd_warshall(const Mesh& mesh);

// Nearest source per vertex from an all-pairs table; ties break to the
// smallest source vertex index.
struct OracleGeodesic {
    std::vector<double> distance;
    std::vector<int> nearest_source;
};
OracleGeodesic oracle_multi_source(const std::vector<std::vector<double>>& all_pairs,
                                   const std::vector<int>& sources);

Vec3 random_unit_vector(std::mt19937& rng);
Mat3 random_rotation(std::mt19937& rng, double max_angle = M_PI * 0.9);
meshdeform::NodeTransform random_small_transform(std::mt19937& rng, double max_angle,
                                                 double max_translation);

// Central finite difference of a scalar function of one coordinate.
template <typename F>
double central_difference(F&& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// |a - b| relative to the larger magnitude, floored to avoid blowups where
// both values vanish.
inline double relative_error(double a, double b, double floor_scale) {
    const double denom = std::max({std::abs(a), std::abs(b), floor_scale});
    return std::abs(a - b) / denom;
}

}  // namespace fixtures
