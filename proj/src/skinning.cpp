#include "meshdeform/skinning.hpp"

#include "meshdeform/so3.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/SVD>

#include <fstream>

namespace meshdeform {

using json = nlohmann::ordered_json;

std::string skinning_mode_name(SkinningMode mode) {
    switch (mode) {
        case SkinningMode::Lbs: return "lbs";
        case SkinningMode::Dqs: return "dqs";
        case SkinningMode::Ahs: return "ahs";
    }
    return "ahs";
}

SkinningMode skinning_mode_from_name(const std::string& name) {
    if (name == "lbs") return SkinningMode::Lbs;
    if (name == "dqs") return SkinningMode::Dqs;
    if (name == "ahs") return SkinningMode::Ahs;
    throw DataError("unknown skinning mode '" + name + "' (expected lbs, dqs or ahs)");
}

void validate_node_transform(const NodeTransform& t) {
    const Mat3& r = t.rotation;
    if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
        std::abs(r.determinant() - 1.0) > 1e-9) {
        throw DataError("NodeTransform: rotation is not special orthogonal");
    }
    if ((t.shear - t.shear.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        throw DataError("NodeTransform: shear is not symmetric");
    }
    if (t.rigid_strength < 0.0 || t.rigid_strength > 1.0) {
        throw DataError("NodeTransform: rigid strength " +
                        std::to_string(t.rigid_strength) + " outside [0, 1]");
    }
}

DualQuaternion dq_from_rigid(const Mat3& rotation, const Vec3& translation) {
    DualQuaternion dq;
    dq.real = so3::quat_from_matrix(rotation);
    const Vec4 t(0.0, translation.x(), translation.y(), translation.z());
    dq.dual = 0.5 * so3::quat_multiply(t, dq.real);
    return dq;
}

Vec3 dq_apply(const DualQuaternion& dq, const Vec3& point) {
    const Vec4 tq = so3::quat_multiply(dq.dual, so3::quat_conjugate(dq.real));
    const Vec3 translation = 2.0 * Vec3(tq[1], tq[2], tq[3]);
    return so3::quat_rotate(dq.real, point) + translation;
}

DualQuaternion dq_blend(std::span<const double> weights,
                        std::span<const DualQuaternion> dqs, int pivot) {
    if (weights.size() != dqs.size() || dqs.empty()) {
        throw DataError("dq_blend: weight/input count mismatch");
    }
    if (pivot < 0 || pivot >= static_cast<int>(dqs.size())) {
        throw DataError("dq_blend: pivot out of range");
    }
    const Vec4 pivot_real = dqs[pivot].real;
    Vec4 real_sum = Vec4::Zero();
    Vec4 dual_sum = Vec4::Zero();
    for (size_t i = 0; i < dqs.size(); ++i) {
        const double sign = pivot_real.dot(dqs[i].real) < 0.0 ? -1.0 : 1.0;
        real_sum += (weights[i] * sign) * dqs[i].real;
        dual_sum += (weights[i] * sign) * dqs[i].dual;
    }
    const double norm = real_sum.norm();
    if (norm < 1e-12) {
        throw NumericalError("dq_blend: blended rotation cancels (antipodal inputs)");
    }
    DualQuaternion out;
    out.real = real_sum / norm;
    out.dual = dual_sum / norm;
    out.dual -= out.real.dot(out.dual) * out.real;  // restore real . dual = 0
    return out;
}

PolarDecomposition polar_decompose(const Mat3& deformation) {
    if (!(deformation.determinant() > 0.0)) {
        throw NumericalError("polar_decompose: determinant must be positive");
    }
    Eigen::JacobiSVD<Mat3> svd(deformation, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    PolarDecomposition out;
    out.rotation = u * v.transpose();
    out.stretch = v * svd.singularValues().asDiagonal() * v.transpose();
    return out;
}

Mat3 effective_shear(const Mat3& shear, double eta) {
    return (1.0 - eta) * shear + eta * Mat3::Identity();
}

Vec3 deform_node(const Vec3& p, const NodeTransform& t) {
    return t.rotation * (effective_shear(t.shear, t.rigid_strength) * p) + t.translation;
}

int pivot_neighbor(std::span<const int> neighbors, std::span<const double> weights) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(weights.size()); ++i) {
        if (weights[i] > weights[best] ||
            (weights[i] == weights[best] && neighbors[i] < neighbors[best])) {
            best = i;
        }
    }
    return best;
}

Vec3 lbs_vertex(const Vec3& rest, std::span<const int> neighbors,
                std::span<const double> weights,
                std::span<const NodeTransform> transforms) {
    Vec3 out = Vec3::Zero();
    for (size_t i = 0; i < neighbors.size(); ++i) {
        const NodeTransform& t = transforms[neighbors[i]];
        const Mat3 f = t.rotation * effective_shear(t.shear, t.rigid_strength);
        out += weights[i] * (f * rest + t.translation);
    }
    return out;
}

Vec3 dqs_vertex(const Vec3& rest, std::span<const int> neighbors,
                std::span<const double> weights,
                std::span<const NodeTransform> transforms) {
    std::vector<DualQuaternion> dqs(neighbors.size());
    for (size_t i = 0; i < neighbors.size(); ++i) {
        const NodeTransform& t = transforms[neighbors[i]];
        dqs[i] = dq_from_rigid(t.rotation, t.translation);
    }
    const int pivot = pivot_neighbor(neighbors, weights);
    return dq_apply(dq_blend(weights, dqs, pivot), rest);
}

Mat3 rotation_log_blend(std::span<const double> weights, std::span<const Mat3> rotations,
                        int pivot) {
    if (weights.size() != rotations.size() || rotations.empty()) {
        throw DataError("rotation_log_blend: weight/input count mismatch");
    }
    if (pivot < 0 || pivot >= static_cast<int>(rotations.size())) {
        throw DataError("rotation_log_blend: pivot out of range");
    }
    const Vec4 pivot_quat = so3::quat_from_matrix(rotations[pivot]);
    Vec3 blended = Vec3::Zero();
    for (size_t i = 0; i < rotations.size(); ++i) {
        Vec4 q = so3::quat_from_matrix(rotations[i]);
        if (pivot_quat.dot(q) < 0.0) q = -q;
        // A flipped input whose aligned angle approaches 2pi has a degenerate
        // log axis; everything else (including exact half-turn pairs, where
        // dot == 0 keeps the canonical representative) blends fine.
        if (q[0] < 0.0 && Vec3(q[1], q[2], q[3]).norm() < 5e-7) {
            throw NumericalError("rotation_log_blend: input " + std::to_string(i) +
                                 " is antipodal to the pivot (log map ill-defined)");
        }
        blended += weights[i] * so3::quat_log(q);
    }
    return so3::exp_rotvec(blended);
}

Mat3 rotation_log_blend(std::span<const double> weights, std::span<const Mat3> rotations) {
    int pivot = 0;
    for (int i = 1; i < static_cast<int>(weights.size()); ++i) {
        if (weights[i] > weights[pivot]) pivot = i;
    }
    return rotation_log_blend(weights, rotations, pivot);
}

VertexDeformation ahs_vertex(const Vec3& rest, std::span<const int> neighbors,
                             std::span<const double> weights,
                             std::span<const NodeTransform> transforms) {
    VertexDeformation out;
    double eta = 0.0;
    Mat3 shear = Mat3::Zero();
    std::vector<Mat3> rotations(neighbors.size());
    for (size_t i = 0; i < neighbors.size(); ++i) {
        const NodeTransform& t = transforms[neighbors[i]];
        eta += weights[i] * t.rigid_strength;
        shear += weights[i] * effective_shear(t.shear, t.rigid_strength);
        rotations[i] = t.rotation;
    }
    const Vec3 lbs = lbs_vertex(rest, neighbors, weights, transforms);
    const Vec3 dqs = dqs_vertex(rest, neighbors, weights, transforms);
    out.position = (1.0 - eta) * lbs + eta * dqs;
    out.rotation = rotation_log_blend(weights, rotations, pivot_neighbor(neighbors, weights));
    out.shear = shear;
    out.rigid_strength = eta;
    return out;
}

MeshDeformation deform_mesh(const Mesh& mesh, const DeformationGraph& graph,
                            std::span<const NodeTransform> transforms, SkinningMode mode) {
    validate_graph(graph, mesh);
    if (static_cast<int>(transforms.size()) != graph.node_count()) {
        throw DataError("deform_mesh: " + std::to_string(transforms.size()) +
                        " transforms for " + std::to_string(graph.node_count()) + " nodes");
    }
    const int nv = mesh.vertex_count();
    MeshDeformation out;
    out.positions.resize(nv);
    out.rotations.resize(nv);
    out.shears.resize(nv);
    out.rigid_strength.resize(nv);
    for (int v = 0; v < nv; ++v) {
        const VertexInfluence& inf = graph.vertices[v];
        const VertexDeformation d =
            ahs_vertex(mesh.vertices[v], inf.neighbors, inf.weights, transforms);
        switch (mode) {
            case SkinningMode::Lbs:
                out.positions[v] =
                    lbs_vertex(mesh.vertices[v], inf.neighbors, inf.weights, transforms);
                break;
            case SkinningMode::Dqs:
                out.positions[v] =
                    dqs_vertex(mesh.vertices[v], inf.neighbors, inf.weights, transforms);
                break;
            case SkinningMode::Ahs:
                out.positions[v] = d.position;
                break;
        }
        out.rotations[v] = d.rotation;
        out.shears[v] = d.shear;
        out.rigid_strength[v] = d.rigid_strength;
    }
    return out;
}

// ---- trajectory files ----

namespace {

json node_to_json(const NodeTransform& t) {
    const Vec3 rotvec = so3::log_matrix(t.rotation);
    const Mat3& s = t.shear;
    return json{{"rotvec", {rotvec.x(), rotvec.y(), rotvec.z()}},
                {"shear6", {s(0, 0), s(0, 1), s(0, 2), s(1, 1), s(1, 2), s(2, 2)}},
                {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}},
                {"eta", t.rigid_strength}};
}

NodeTransform node_from_json(const json& entry) {
    NodeTransform t;
    const auto rotvec = entry.at("rotvec").get<std::vector<double>>();
    const auto shear6 = entry.at("shear6").get<std::vector<double>>();
    const auto translation = entry.at("translation").get<std::vector<double>>();
    if (rotvec.size() != 3 || shear6.size() != 6 || translation.size() != 3) {
        throw DataError("trajectory node: malformed component lengths");
    }
    t.rotation = so3::exp_rotvec(Vec3(rotvec[0], rotvec[1], rotvec[2]));
    t.shear << shear6[0], shear6[1], shear6[2],
               shear6[1], shear6[3], shear6[4],
               shear6[2], shear6[4], shear6[5];
    t.translation = Vec3(translation[0], translation[1], translation[2]);
    t.rigid_strength = entry.at("eta").get<double>();
    if (t.rigid_strength < 0.0 || t.rigid_strength > 1.0) {
        throw DataError("trajectory node: eta outside [0, 1]");
    }
    return t;
}

}  // namespace

std::string trajectory_to_json(const Trajectory& trajectory) {
    json frames = json::array();
    for (const TrajectoryFrame& frame : trajectory) {
        json nodes = json::array();
        for (const NodeTransform& t : frame.nodes) nodes.push_back(node_to_json(t));
        frames.push_back({{"time", frame.time}, {"nodes", std::move(nodes)}});
    }
    return json{{"frames", std::move(frames)}}.dump(2) + "\n";
}

Trajectory trajectory_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("trajectory JSON parse error: ") + e.what());
    }
    Trajectory trajectory;
    try {
        for (const auto& frame_json : doc.at("frames")) {
            TrajectoryFrame frame;
            frame.time = frame_json.at("time").get<double>();
            for (const auto& node_json : frame_json.at("nodes")) {
                frame.nodes.push_back(node_from_json(node_json));
            }
            trajectory.push_back(std::move(frame));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("trajectory JSON schema error: ") + e.what());
    }
    return trajectory;
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& trajectory) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write trajectory file: " + path.string());
    out << trajectory_to_json(trajectory);
}

Trajectory load_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open trajectory file: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return trajectory_from_json(text);
}

}  // namespace meshdeform
