#include "meshdeform/energy.hpp"

namespace meshdeform {

EnergyReport arap_energy(const Mesh& mesh, const std::vector<double>& cotan_weights,
                         const VertexField3& deformed, const VertexFieldMat& rotations,
                         VertexFieldMat* rotation_gradient) {
    const int nv = mesh.vertex_count();
    if (static_cast<int>(deformed.size()) != nv || static_cast<int>(rotations.size()) != nv) {
        throw DataError("arap_energy: field length mismatch");
    }
    if (cotan_weights.size() != mesh.edges.size()) {
        throw DataError("arap_energy: cotangent weight count mismatch");
    }

    EnergyReport report;
    report.gradient.assign(nv, Vec3::Zero());
    if (rotation_gradient) rotation_gradient->assign(nv, Mat3::Zero());

    for (int v = 0; v < nv; ++v) {
        const Mat3& rot = rotations[v];
        for (const auto& [n, e] : mesh.vertex_star[v]) {
            const double w = cotan_weights[e];
            const Vec3 rest_edge = mesh.vertices[v] - mesh.vertices[n];
            const Vec3 diff = (deformed[v] - deformed[n]) - rot * rest_edge;
            report.value += w * diff.squaredNorm();
            const Vec3 d = 2.0 * w * diff;
            report.gradient[v] += d;
            report.gradient[n] -= d;
            if (rotation_gradient) {
                (*rotation_gradient)[v] -= d * rest_edge.transpose();
            }
        }
    }
    return report;
}

EnergyReport arap_energy(const Mesh& mesh, const VertexField3& deformed,
                         const VertexFieldMat& rotations) {
    return arap_energy(mesh, cotangent_weights(mesh), deformed, rotations, nullptr);
}

EnergyReport normal_consistency(const Mesh& mesh, const VertexField3& deformed) {
    const int nv = mesh.vertex_count();
    if (static_cast<int>(deformed.size()) != nv) {
        throw DataError("normal_consistency: field length mismatch");
    }

    const int nf = mesh.face_count();
    std::vector<Vec3> unit_normals(nf);
    std::vector<Vec3> raw_normals(nf);
    std::vector<double> norms(nf);
    for (int f = 0; f < nf; ++f) {
        const auto& face = mesh.faces[f];
        const Vec3 u = deformed[face[1]] - deformed[face[0]];
        const Vec3 w = deformed[face[2]] - deformed[face[0]];
        const Vec3 n = u.cross(w);
        const double norm = n.norm();
        if (norm <= 1e-12 * u.norm() * w.norm()) {
            throw NumericalError("normal_consistency: face " + std::to_string(f) +
                                 " is degenerate at the evaluated positions");
        }
        raw_normals[f] = n;
        norms[f] = norm;
        unit_normals[f] = n / norm;
    }

    EnergyReport report;
    report.gradient.assign(nv, Vec3::Zero());

    // dE/dn accumulated per face, then pushed through the normalization and
    // cross products once per face.
    std::vector<Vec3> normal_grad(nf, Vec3::Zero());
    for (const FacePair& pair : mesh.face_adjacency) {
        report.value += 1.0 - unit_normals[pair.f0].dot(unit_normals[pair.f1]);
        normal_grad[pair.f0] -= unit_normals[pair.f1];
        normal_grad[pair.f1] -= unit_normals[pair.f0];
    }

    for (int f = 0; f < nf; ++f) {
        const auto& face = mesh.faces[f];
        const Vec3& n = unit_normals[f];
        const Vec3 g_raw =
            (normal_grad[f] - n * n.dot(normal_grad[f])) / norms[f];
        const Vec3 u = deformed[face[1]] - deformed[face[0]];
        const Vec3 w = deformed[face[2]] - deformed[face[0]];
        const Vec3 gb = w.cross(g_raw);
        const Vec3 gc = g_raw.cross(u);
        report.gradient[face[1]] += gb;
        report.gradient[face[2]] += gc;
        report.gradient[face[0]] -= gb + gc;
    }
    return report;
}

}  // namespace meshdeform
