#pragma once

// ARAP and normal-consistency energies with exact gradients with respect to
// the deformed vertex positions.

#include "meshdeform/mesh.hpp"

namespace meshdeform {

struct EnergyReport {
    double value = 0.0;
    VertexField3 gradient;  // dE / d(deformed position), per vertex
};

// sum_v sum_{n in one-ring(v)} w(v,n) |(p_v - p_n) - R_v (v - n)|^2 with the
// cotangent weights of the rest geometry; each undirected edge contributes
// twice, once per endpoint with that endpoint's rotation. The position
// gradient treats R_v as given; when `rotation_gradient` is non-null it
// receives dE/dR_v per vertex for callers that chain through the skinning.
EnergyReport arap_energy(const Mesh& mesh, const std::vector<double>& cotan_weights,
                         const VertexField3& deformed, const VertexFieldMat& rotations,
                         VertexFieldMat* rotation_gradient = nullptr);

// Convenience overload computing the cotangent weights on the fly.
EnergyReport arap_energy(const Mesh& mesh, const VertexField3& deformed,
                         const VertexFieldMat& rotations);

// sum over interior edges (f1, f2) of 1 - n(f1) . n(f2) with unit face
// normals at the deformed positions.
EnergyReport normal_consistency(const Mesh& mesh, const VertexField3& deformed);

}  // namespace meshdeform
