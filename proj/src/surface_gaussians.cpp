#include "meshdeform/surface_gaussians.hpp"

#include "meshdeform/skinning.hpp"
#include "meshdeform/so3.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

namespace meshdeform {

using json = nlohmann::ordered_json;

namespace {

// Nudges the last component by ulps so a + b + c (left to right) is 1.0.
Vec3 exact_barycentric(double a, double b, double c_hint) {
    const double s = a + b;
    double c = c_hint;
    while (s + c < 1.0) c = std::nextafter(c, kInfinity);
    while (s + c > 1.0) c = std::nextafter(c, -kInfinity);
    return Vec3(a, b, c);
}

std::vector<Vec3> barycentric_pattern(int per_face) {
    const double third = 1.0 / 3.0;
    const double sixth = 1.0 / 6.0;
    const double two_thirds = 2.0 / 3.0;
    const double edge_mid = 5.0 / 12.0;
    const Vec3 centroid = exact_barycentric(third, third, third);
    const std::vector<Vec3> corners = {
        exact_barycentric(two_thirds, sixth, sixth),
        exact_barycentric(sixth, two_thirds, sixth),
        exact_barycentric(sixth, sixth, two_thirds),
    };
    const std::vector<Vec3> edges = {
        exact_barycentric(sixth, edge_mid, edge_mid),
        exact_barycentric(edge_mid, sixth, edge_mid),
        exact_barycentric(edge_mid, edge_mid, sixth),
    };
    switch (per_face) {
        case 1:
            return {centroid};
        case 3:
            return corners;
        case 4: {
            std::vector<Vec3> p = {centroid};
            p.insert(p.end(), corners.begin(), corners.end());
            return p;
        }
        case 6: {
            std::vector<Vec3> p = corners;
            p.insert(p.end(), edges.begin(), edges.end());
            return p;
        }
        default:
            throw DataError("bind_gaussians: unsupported per-face count " +
                            std::to_string(per_face) + " (expected 1, 3, 4 or 6)");
    }
}

}  // namespace

SurfaceGaussianSet bind_gaussians(const Mesh& mesh, int per_face) {
    const std::vector<Vec3> pattern = barycentric_pattern(per_face);
    const std::vector<Vec3> normals = face_normals(mesh, mesh.vertices);

    SurfaceGaussianSet set;
    set.per_face = per_face;
    set.mesh = &mesh;
    set.gaussians.reserve(pattern.size() * mesh.faces.size());
    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto& face = mesh.faces[f];
        const Vec3& pa = mesh.vertices[face[0]];
        const Vec3& pb = mesh.vertices[face[1]];
        const Vec3& pc = mesh.vertices[face[2]];

        const double la = (pb - pc).norm();
        const double lb = (pc - pa).norm();
        const double lc = (pa - pb).norm();
        const double area = 0.5 * (pb - pa).cross(pc - pa).norm();
        const double circumradius = la * lb * lc / (4.0 * area);
        const double extent = 0.5 * circumradius;

        // local x axis (short axis) -> face normal
        const Vec3 n = normals[f];
        const Vec3 tangent = (pb - pa).normalized();
        Mat3 frame;
        frame.col(0) = n;
        frame.col(1) = tangent;
        frame.col(2) = n.cross(tangent);

        for (const Vec3& bary : pattern) {
            SurfaceGaussian g;
            g.face = f;
            g.barycentric = bary;
            g.rotation = so3::quat_from_matrix(frame);
            g.scaling = Vec3(extent * 1e-3, extent, extent);
            set.gaussians.push_back(std::move(g));
        }
    }
    return set;
}

std::vector<Vec3> gaussian_centers(const SurfaceGaussianSet& set,
                                   const VertexField3& positions) {
    if (!set.mesh) throw DataError("gaussian set has no bound mesh");
    if (positions.size() != set.mesh->vertices.size()) {
        throw DataError("gaussian_centers: positions length mismatch");
    }
    std::vector<Vec3> centers(set.gaussians.size());
    for (size_t i = 0; i < set.gaussians.size(); ++i) {
        const SurfaceGaussian& g = set.gaussians[i];
        const auto& face = set.mesh->faces[g.face];
        centers[i] = g.barycentric[0] * positions[face[0]] +
                     g.barycentric[1] * positions[face[1]] +
                     g.barycentric[2] * positions[face[2]];
    }
    return centers;
}

std::vector<Vec3> deform_gaussian_centers(const SurfaceGaussianSet& set,
                                          const VertexField3& deformed_positions) {
    return gaussian_centers(set, deformed_positions);
}

std::vector<Vec4> deform_gaussian_rotations(const SurfaceGaussianSet& set,
                                            const VertexFieldMat& per_vertex_rotation) {
    if (!set.mesh) throw DataError("gaussian set has no bound mesh");
    if (per_vertex_rotation.size() != set.mesh->vertices.size()) {
        throw DataError("deform_gaussian_rotations: rotation field length mismatch");
    }
    std::vector<Vec4> out(set.gaussians.size());
    for (size_t i = 0; i < set.gaussians.size(); ++i) {
        const SurfaceGaussian& g = set.gaussians[i];
        const auto& face = set.mesh->faces[g.face];
        const std::array<Mat3, 3> rotations = {per_vertex_rotation[face[0]],
                                               per_vertex_rotation[face[1]],
                                               per_vertex_rotation[face[2]]};
        const std::array<double, 3> weights = {g.barycentric[0], g.barycentric[1],
                                               g.barycentric[2]};
        const Mat3 delta = rotation_log_blend(weights, rotations);
        const Vec4 q = so3::quat_multiply(so3::quat_from_matrix(delta), g.rotation);
        out[i] = q / q.norm();
    }
    return out;
}

std::vector<Vec3> deform_gaussian_scalings(const SurfaceGaussianSet& set,
                                           const VertexFieldMat& per_vertex_shear,
                                           int* clamp_count) {
    if (!set.mesh) throw DataError("gaussian set has no bound mesh");
    if (per_vertex_shear.size() != set.mesh->vertices.size()) {
        throw DataError("deform_gaussian_scalings: shear field length mismatch");
    }
    int clamped = 0;
    std::vector<Vec3> out(set.gaussians.size());
    for (size_t i = 0; i < set.gaussians.size(); ++i) {
        const SurfaceGaussian& g = set.gaussians[i];
        const auto& face = set.mesh->faces[g.face];
        const Mat3 blend = g.barycentric[0] * per_vertex_shear[face[0]] +
                           g.barycentric[1] * per_vertex_shear[face[1]] +
                           g.barycentric[2] * per_vertex_shear[face[2]];
        Vec3 s = blend * g.scaling;
        for (int c = 0; c < 3; ++c) {
            if (s[c] <= 0.0) {
                s[c] = 1e-8;
                ++clamped;
            }
        }
        out[i] = s;
    }
    if (clamp_count) *clamp_count = clamped;
    return out;
}

// ---- serialization ----

namespace {

const char kBase64Chars[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    for (size_t i = 0; i < bytes.size(); i += 3) {
        std::uint32_t chunk = static_cast<std::uint32_t>(bytes[i]) << 16;
        if (i + 1 < bytes.size()) chunk |= static_cast<std::uint32_t>(bytes[i + 1]) << 8;
        if (i + 2 < bytes.size()) chunk |= static_cast<std::uint32_t>(bytes[i + 2]);
        out.push_back(kBase64Chars[(chunk >> 18) & 0x3F]);
        out.push_back(kBase64Chars[(chunk >> 12) & 0x3F]);
        out.push_back(i + 1 < bytes.size() ? kBase64Chars[(chunk >> 6) & 0x3F] : '=');
        out.push_back(i + 2 < bytes.size() ? kBase64Chars[chunk & 0x3F] : '=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    auto value_of = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    if (text.size() % 4 != 0) throw DataError("payload base64: length not a multiple of 4");
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (size_t i = 0; i < text.size(); i += 4) {
        int vals[4] = {0, 0, 0, 0};
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = text[i + k];
            if (c == '=') {
                ++pad;
                continue;
            }
            vals[k] = value_of(c);
            if (vals[k] < 0 || pad > 0) throw DataError("payload base64: invalid character");
        }
        const std::uint32_t chunk = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
        out.push_back((chunk >> 16) & 0xFF);
        if (pad < 2) out.push_back((chunk >> 8) & 0xFF);
        if (pad < 1) out.push_back(chunk & 0xFF);
    }
    return out;
}

}  // namespace

std::string gaussians_to_json(const SurfaceGaussianSet& set) {
    json doc;
    doc["per_face"] = set.per_face;
    json list = json::array();
    for (const SurfaceGaussian& g : set.gaussians) {
        list.push_back({{"face", g.face},
                        {"bary", {g.barycentric[0], g.barycentric[1], g.barycentric[2]}},
                        {"quat", {g.rotation[0], g.rotation[1], g.rotation[2], g.rotation[3]}},
                        {"scale", {g.scaling[0], g.scaling[1], g.scaling[2]}},
                        {"payload", base64_encode(g.appearance)}});
    }
    doc["gaussians"] = std::move(list);
    return doc.dump(2) + "\n";
}

SurfaceGaussianSet gaussians_from_json(const std::string& text, const Mesh& mesh) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("gaussian JSON parse error: ") + e.what());
    }
    SurfaceGaussianSet set;
    set.mesh = &mesh;
    try {
        set.per_face = doc.at("per_face").get<int>();
        for (const auto& entry : doc.at("gaussians")) {
            SurfaceGaussian g;
            g.face = entry.at("face").get<int>();
            const auto bary = entry.at("bary").get<std::vector<double>>();
            const auto quat = entry.at("quat").get<std::vector<double>>();
            const auto scale = entry.at("scale").get<std::vector<double>>();
            if (bary.size() != 3 || quat.size() != 4 || scale.size() != 3) {
                throw DataError("gaussian JSON: malformed component lengths");
            }
            g.barycentric = Vec3(bary[0], bary[1], bary[2]);
            g.rotation = Vec4(quat[0], quat[1], quat[2], quat[3]);
            g.scaling = Vec3(scale[0], scale[1], scale[2]);
            g.appearance = base64_decode(entry.at("payload").get<std::string>());
            if (g.face < 0 || g.face >= mesh.face_count()) {
                throw DataError("gaussian JSON: face index out of range");
            }
            set.gaussians.push_back(std::move(g));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("gaussian JSON schema error: ") + e.what());
    }
    return set;
}

void save_gaussians(const std::filesystem::path& path, const SurfaceGaussianSet& set) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write gaussian file: " + path.string());
    out << gaussians_to_json(set);
}

SurfaceGaussianSet load_gaussians(const std::filesystem::path& path, const Mesh& mesh) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open gaussian file: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return gaussians_from_json(text, mesh);
}

}  // namespace meshdeform
