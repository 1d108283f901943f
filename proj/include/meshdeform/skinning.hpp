#pragma once

// LBS, DQS and the adaptive hybrid blend: per-node transforms to deformed
// vertices with per-vertex rotations, shears and rigid strengths.

#include "meshdeform/deform_graph.hpp"

#include <span>

namespace meshdeform {

enum class SkinningMode { Lbs, Dqs, Ahs };

std::string skinning_mode_name(SkinningMode mode);
SkinningMode skinning_mode_from_name(const std::string& name);

// Local deformation of one control node.
struct NodeTransform {
    Mat3 rotation = Mat3::Identity();
    Mat3 shear = Mat3::Identity();          // symmetric
    Vec3 translation = Vec3::Zero();
    double rigid_strength = 0.0;            // eta in [0, 1]; 1 = fully rigid (DQS)
};

// Throws DataError unless R is special orthogonal (1e-9), S symmetric (1e-12)
// and eta in [0, 1].
void validate_node_transform(const NodeTransform& transform);

// Rigid motion as a unit dual quaternion: real + epsilon * dual, with
// |real| = 1 and real . dual = 0. Components ordered (w, x, y, z).
struct DualQuaternion {
    Vec4 real = Vec4(1, 0, 0, 0);
    Vec4 dual = Vec4::Zero();
};

DualQuaternion dq_from_rigid(const Mat3& rotation, const Vec3& translation);
Vec3 dq_apply(const DualQuaternion& dq, const Vec3& point);

// Sign-aligns every input to the pivot's real part, sums with the weights and
// renormalizes to a unit dual quaternion. Throws NumericalError when the
// blended real part nearly cancels (antipodal blend).
DualQuaternion dq_blend(std::span<const double> weights,
                        std::span<const DualQuaternion> dqs, int pivot);

// F = R * S with R special orthogonal and S symmetric positive-definite.
// Requires det F > 0.
struct PolarDecomposition {
    Mat3 rotation;
    Mat3 stretch;
};
PolarDecomposition polar_decompose(const Mat3& deformation);

// (1 - eta) * S + eta * I; eta = 1 removes all strain.
Mat3 effective_shear(const Mat3& shear, double eta);

// New node position R * effective_shear(S, eta) * p + t.
Vec3 deform_node(const Vec3& p, const NodeTransform& transform);

// Index of the highest-weight neighbor; ties break to the lowest node id.
int pivot_neighbor(std::span<const int> neighbors, std::span<const double> weights);

Vec3 lbs_vertex(const Vec3& rest, std::span<const int> neighbors,
                std::span<const double> weights,
                std::span<const NodeTransform> transforms);

Vec3 dqs_vertex(const Vec3& rest, std::span<const int> neighbors,
                std::span<const double> weights,
                std::span<const NodeTransform> transforms);

// exp(sum w log R) realized as a hemisphere-aligned weighted rotation-vector
// average. Pivot defaults to the highest-weight input (ties -> lowest index).
// Inputs exactly a half-turn from the pivot keep their canonical
// representative (dot == 0 does not flip); a flipped input whose aligned
// angle reaches 2pi has no usable log axis and raises NumericalError.
Mat3 rotation_log_blend(std::span<const double> weights, std::span<const Mat3> rotations);
Mat3 rotation_log_blend(std::span<const double> weights, std::span<const Mat3> rotations,
                        int pivot);

struct VertexDeformation {
    Vec3 position;
    Mat3 rotation;
    Mat3 shear;
    double rigid_strength;
};

VertexDeformation ahs_vertex(const Vec3& rest, std::span<const int> neighbors,
                             std::span<const double> weights,
                             std::span<const NodeTransform> transforms);

struct MeshDeformation {
    VertexField3 positions;
    VertexFieldMat rotations;       // R_v
    VertexFieldMat shears;          // S_v
    std::vector<double> rigid_strength;  // eta_v
};

// Applies the selected skinning mode per vertex. The per-vertex rotation,
// shear and rigid strength are the hybrid blends in every mode; only the
// position rule changes, which is what the LBS/DQS ablations swap.
MeshDeformation deform_mesh(const Mesh& mesh, const DeformationGraph& graph,
                            std::span<const NodeTransform> transforms, SkinningMode mode);

// ---- trajectory files ----
// {frames:[{time, nodes:[{rotvec, shear6 (xx,xy,xz,yy,yz,zz), translation, eta}]}]}

struct TrajectoryFrame {
    double time = 0.0;
    std::vector<NodeTransform> nodes;
};
using Trajectory = std::vector<TrajectoryFrame>;

std::string trajectory_to_json(const Trajectory& trajectory);
Trajectory trajectory_from_json(const std::string& text);
void save_trajectory(const std::filesystem::path& path, const Trajectory& trajectory);
Trajectory load_trajectory(const std::filesystem::path& path);

}  // namespace meshdeform
