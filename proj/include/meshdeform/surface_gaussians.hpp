#pragma once

// Flat Gaussians bound to triangle faces by barycentric coordinates. Only the
// spatial attributes (center, rotation, scaling) are ever deformed; the
// appearance payload is opaque and immutable.

#include "meshdeform/mesh.hpp"

#include <cstdint>

namespace meshdeform {

struct SurfaceGaussian {
    int face = -1;
    Vec3 barycentric = Vec3(1.0 / 3, 1.0 / 3, 1.0 / 3);  // sums to 1 exactly
    Vec4 rotation = Vec4(1, 0, 0, 0);  // unit quaternion (w, x, y, z)
    Vec3 scaling = Vec3(1, 1, 1);      // positive components
    std::vector<std::uint8_t> appearance;  // opaque; color/opacity bytes
};

struct SurfaceGaussianSet {
    int per_face = 0;
    std::vector<SurfaceGaussian> gaussians;
    const Mesh* mesh = nullptr;
};

// Attaches `per_face` Gaussians (1, 3, 4 or 6) to every face in deterministic
// barycentric patterns. Initial rotation aligns the short axis with the face
// normal; initial scaling is (l * 1e-3, l, l) with l = circumradius / 2.
SurfaceGaussianSet bind_gaussians(const Mesh& mesh, int per_face);

// Center of each Gaussian at the bound barycentric coordinates.
std::vector<Vec3> gaussian_centers(const SurfaceGaussianSet& set,
                                   const VertexField3& positions);

// mu = pi_a * va + pi_b * vb + pi_c * vc at the deformed positions.
std::vector<Vec3> deform_gaussian_centers(const SurfaceGaussianSet& set,
                                          const VertexField3& deformed_positions);

// dq = exp(sum pi log R_vi) composed on the left of each stored rotation.
std::vector<Vec4> deform_gaussian_rotations(const SurfaceGaussianSet& set,
                                            const VertexFieldMat& per_vertex_rotation);

// s = (sum pi S_vi) * s. Non-positive results are clamped to 1e-8; the clamp
// count is reported through `clamp_count` when given.
std::vector<Vec3> deform_gaussian_scalings(const SurfaceGaussianSet& set,
                                           const VertexFieldMat& per_vertex_shear,
                                           int* clamp_count = nullptr);

std::string gaussians_to_json(const SurfaceGaussianSet& set);
SurfaceGaussianSet gaussians_from_json(const std::string& text, const Mesh& mesh);
void save_gaussians(const std::filesystem::path& path, const SurfaceGaussianSet& set);
SurfaceGaussianSet load_gaussians(const std::filesystem::path& path, const Mesh& mesh);

}  // namespace meshdeform
