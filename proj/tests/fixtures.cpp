#include "fixtures.hpp"

#include "meshdeform/so3.hpp"

#include <algorithm>
#include <numeric>

namespace fixtures {

using meshdeform::make_mesh;

Mesh grid_mesh(int nx, int ny, double step) {
    std::vector<Vec3> vertices;
    const double cx = 0.5 * nx * step;
    const double cy = 0.5 * ny * step;
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            vertices.emplace_back(i * step - cx, j * step - cy, 0.0);
        }
    }
    auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
    std::vector<std::array<int, 3>> faces;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            faces.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
            faces.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
        }
    }
    return make_mesh(std::move(vertices), std::move(faces));
}

Mesh folded_pair(double angle) {
    std::vector<Vec3> vertices = {
        {0.0, 0.0, 0.0},
        {0.0, 1.0, 0.0},
        {1.0, 0.5, 0.0},
        {-std::cos(angle), 0.5, std::sin(angle)},
    };
    // (0,2,1) has normal +z; (0,1,3) has normal (sin a, 0, cos a)
    std::vector<std::array<int, 3>> faces = {{0, 2, 1}, {0, 1, 3}};
    return make_mesh(std::move(vertices), std::move(faces));
}

Mesh uv_sphere(int stacks, int slices, double radius) {
    std::vector<Vec3> vertices;
    vertices.emplace_back(0.0, 0.0, radius);  // north pole
    for (int i = 1; i < stacks; ++i) {
        const double phi = M_PI * i / stacks;
        for (int j = 0; j < slices; ++j) {
            const double theta = 2.0 * M_PI * j / slices;
            vertices.emplace_back(radius * std::sin(phi) * std::cos(theta),
                                  radius * std::sin(phi) * std::sin(theta),
                                  radius * std::cos(phi));
        }
    }
    vertices.emplace_back(0.0, 0.0, -radius);  // south pole
    const int south = static_cast<int>(vertices.size()) - 1;
    auto ring = [slices](int i, int j) { return 1 + i * slices + ((j % slices + slices) % slices); };

    std::vector<std::array<int, 3>> faces;
    for (int j = 0; j < slices; ++j) {
        faces.push_back({0, ring(0, j), ring(0, j + 1)});
    }
    for (int i = 0; i + 1 < stacks - 1; ++i) {
        for (int j = 0; j < slices; ++j) {
            const int ul = ring(i, j), ur = ring(i, j + 1);
            const int ll = ring(i + 1, j), lr = ring(i + 1, j + 1);
            faces.push_back({ul, ll, lr});
            faces.push_back({ul, lr, ur});
        }
    }
    for (int j = 0; j < slices; ++j) {
        faces.push_back({ring(stacks - 2, j), south, ring(stacks - 2, j + 1)});
    }
    return make_mesh(std::move(vertices), std::move(faces));
}

UStrip u_strip() {
    // Arms run along +x with 13 columns; rails at y = {0,1} (arm A) and
    // y = {3,4} (arm B); a junction column at x = -1 closes the U.
    const int columns = 13;
    std::vector<Vec3> vertices;
    std::vector<int> arm_of;
    auto add = [&](double x, double y, int arm) {
        vertices.emplace_back(x, y, 0.0);
        arm_of.push_back(arm);
        return static_cast<int>(vertices.size()) - 1;
    };

    std::vector<std::array<int, 2>> arm_a(columns), arm_b(columns);
    for (int i = 0; i < columns; ++i) {
        // only label columns clear of the junction
        const int label_a = i >= 2 ? 0 : -1;
        const int label_b = i >= 2 ? 1 : -1;
        arm_a[i] = {add(i, 0.0, label_a), add(i, 1.0, label_a)};
        arm_b[i] = {add(i, 3.0, label_b), add(i, 4.0, label_b)};
    }
    const int j0 = add(-1.0, 0.0, -1);
    const int j1 = add(-1.0, 1.0, -1);
    const int j2 = add(-1.0, 3.0, -1);
    const int j3 = add(-1.0, 4.0, -1);

    std::vector<std::array<int, 3>> faces;
    auto quad = [&faces](int a, int b, int c, int d) {
        faces.push_back({a, b, c});
        faces.push_back({a, c, d});
    };
    for (int i = 0; i + 1 < columns; ++i) {
        quad(arm_a[i][0], arm_a[i + 1][0], arm_a[i + 1][1], arm_a[i][1]);
        quad(arm_b[i][0], arm_b[i + 1][0], arm_b[i + 1][1], arm_b[i][1]);
    }
    quad(j0, arm_a[0][0], arm_a[0][1], j1);
    quad(j1, arm_a[0][1], arm_b[0][0], j2);  // spans the gap at the closed end
    quad(j2, arm_b[0][0], arm_b[0][1], j3);

    UStrip strip;
    strip.mesh = make_mesh(std::move(vertices), std::move(faces));
    strip.arm_of = std::move(arm_of);
    return strip;
}

Mesh random_exact_mesh(std::mt19937& rng, int max_cells_x, int max_cells_y) {
    std::uniform_int_distribution<int> cx(3, max_cells_x);
    std::uniform_int_distribution<int> cy(1, max_cells_y);
    std::uniform_int_distribution<int> coin(0, 1);
    const int nx = cx(rng);
    const int ny = cy(rng);

    // 3-4-5 cells: x pitch 3, y pitch 4, so every edge length is 3, 4 or 5.
    std::vector<Vec3> vertices;
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            vertices.emplace_back(3.0 * i, 4.0 * j, 0.0);
        }
    }
    auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
    std::vector<std::array<int, 3>> faces;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int a = vid(i, j), b = vid(i + 1, j);
            const int c = vid(i + 1, j + 1), d = vid(i, j + 1);
            if (coin(rng)) {
                faces.push_back({a, b, c});
                faces.push_back({a, c, d});
            } else {
                faces.push_back({a, b, d});
                faces.push_back({b, c, d});
            }
        }
    }

    // Fold at vertex columns, largest first, by +-90 degrees about the line
    // x = 3*c, z = 0. Coordinate swaps keep everything exactly representable
    // and the hinge column sits on the axis, so every length is preserved.
    std::vector<int> fold_columns;
    for (int c = 1; c < nx; ++c) {
        if (coin(rng) && coin(rng)) fold_columns.push_back(c);
    }
    std::sort(fold_columns.rbegin(), fold_columns.rend());
    for (int c : fold_columns) {
        const double hinge_x = 3.0 * c;
        const double sign = coin(rng) ? 1.0 : -1.0;
        for (int j = 0; j <= ny; ++j) {
            for (int i = c + 1; i <= nx; ++i) {
                Vec3& p = vertices[vid(i, j)];
                const double dx = p.x() - hinge_x;
                const double dz = p.z();
                p.x() = hinge_x + sign * dz;
                p.z() = -sign * dx;
            }
        }
    }

    // Power-of-two scaling is exact.
    const double scale = std::ldexp(1.0, std::uniform_int_distribution<int>(-2, 2)(rng));
    for (Vec3& p : vertices) p *= scale;

    // Random relabeling to exercise index tie rules.
    const int nv = static_cast<int>(vertices.size());
    std::vector<int> relabel(nv);
    std::iota(relabel.begin(), relabel.end(), 0);
    std::shuffle(relabel.begin(), relabel.end(), rng);
    std::vector<Vec3> shuffled(nv);
    for (int v = 0; v < nv; ++v) shuffled[relabel[v]] = vertices[v];
    for (auto& f : faces) {
        for (int& v : f) v = relabel[v];
    }
    return make_mesh(std::move(shuffled), std::move(faces));
}

Mesh random_bumpy_grid(std::mt19937& rng, int nx, int ny) {
    std::uniform_real_distribution<double> jitter(-0.25, 0.25);
    std::uniform_real_distribution<double> height(-0.4, 0.4);
    Mesh flat = grid_mesh(nx, ny);
    std::vector<Vec3> vertices = flat.vertices;
    for (Vec3& p : vertices) {
        p.x() += jitter(rng);
        p.y() += jitter(rng);
        p.z() += height(rng);
    }
    return make_mesh(std::move(vertices), flat.faces);
}

std::vector<std::vector<double>> floyd_warshall(const Mesh& mesh) {
    const int nv = mesh.vertex_count();
    std::vector<std::vector<double>> dist(nv, std::vector<double>(nv, meshdeform::kInfinity));
    for (int v = 0; v < nv; ++v) dist[v][v] = 0.0;
    for (const auto& edge : mesh.edges) {
        dist[edge.v0][edge.v1] = std::min(dist[edge.v0][edge.v1], edge.rest_length);
        dist[edge.v1][edge.v0] = dist[edge.v0][edge.v1];
    }
    for (int k = 0; k < nv; ++k) {
        for (int i = 0; i < nv; ++i) {
            if (dist[i][k] == meshdeform::kInfinity) continue;
            for (int j = 0; j < nv; ++j) {
                const double nd = dist[i][k] + dist[k][j];
                if (nd < dist[i][j]) dist[i][j] = nd;
            }
        }
    }
    return dist;
}

OracleGeodesic oracle_multi_source(const std::vector<std::vector<double>>& all_pairs,
                                   const std::vector<int>& sources) {
    const int nv = static_cast<int>(all_pairs.size());
    OracleGeodesic out;
    out.distance.assign(nv, meshdeform::kInfinity);
    out.nearest_source.assign(nv, -1);
    std::vector<int> ordered = sources;
    std::sort(ordered.begin(), ordered.end());
    for (int v = 0; v < nv; ++v) {
        for (int s : ordered) {
            if (all_pairs[s][v] < out.distance[v]) {
                out.distance[v] = all_pairs[s][v];
                out.nearest_source[v] = s;
            }
        }
    }
    return out;
}

Vec3 random_unit_vector(std::mt19937& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec3 v;
    do {
        v = Vec3(gauss(rng), gauss(rng), gauss(rng));
    } while (v.norm() < 1e-6);
    return v.normalized();
}

Mat3 random_rotation(std::mt19937& rng, double max_angle) {
    std::uniform_real_distribution<double> angle(0.0, max_angle);
    return meshdeform::so3::exp_rotvec(angle(rng) * random_unit_vector(rng));
}

meshdeform::NodeTransform random_small_transform(std::mt19937& rng, double max_angle,
                                                 double max_translation) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    meshdeform::NodeTransform t;
    t.rotation = random_rotation(rng, max_angle);
    t.translation = max_translation * unit(rng) * random_unit_vector(rng);
    t.shear = Mat3::Identity();
    t.rigid_strength = unit(rng);
    return t;
}

}  // namespace fixtures
