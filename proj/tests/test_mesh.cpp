#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "meshdeform/mesh.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

using namespace meshdeform;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "meshdeform_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

Mesh write_and_load(const std::string& contents, const std::string& name) {
    const auto path = temp_file(name);
    std::ofstream(path) << contents;
    return load_obj(path);
}

}  // namespace

TEST_CASE("load_obj single triangle") {
    const Mesh mesh = write_and_load("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n", "tri.obj");
    CHECK(mesh.vertex_count() == 3);
    CHECK(mesh.face_count() == 1);
    CHECK(mesh.edges.size() == 3);
    for (const auto& edge : mesh.edges) {
        CHECK(edge.face1 == -1);  // all boundary
    }
    CHECK(mesh.face_adjacency.empty());
}

TEST_CASE("load_obj fan-triangulates polygons") {
    const Mesh mesh = write_and_load(
        "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n", "quad.obj");
    REQUIRE(mesh.face_count() == 2);
    CHECK(mesh.faces[0] == std::array<int, 3>{0, 1, 2});
    CHECK(mesh.faces[1] == std::array<int, 3>{0, 2, 3});
}

TEST_CASE("load_obj ignores attribute suffixes and other records") {
    const Mesh mesh = write_and_load(
        "# comment\nvn 0 0 1\nvt 0 0\nv 0 0 0\nv 2 0 0\nv 0 2 0\nf 1/1/1 2/2/1 3/3/1\n",
        "suffix.obj");
    CHECK(mesh.vertex_count() == 3);
    CHECK(mesh.face_count() == 1);
}

TEST_CASE("load_obj error paths") {
    CHECK_THROWS_AS(write_and_load("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n", "oob.obj"),
                    DataError);
    CHECK_THROWS_AS(write_and_load("v 0 0 0\n", "no_faces.obj"), DataError);
    CHECK_THROWS_AS(write_and_load("f 1 2 3\n", "no_verts.obj"), DataError);
    CHECK_THROWS_AS(write_and_load("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 x\n", "junk.obj"),
                    DataError);
    // line number appears in the message
    try {
        write_and_load("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 7\n", "line.obj");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find(":4") != std::string::npos);
    }
}

TEST_CASE("make_mesh rejects invalid topology") {
    std::vector<Vec3> verts = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    CHECK_THROWS_AS(make_mesh(verts, {{0, 1, 1}}), DataError);   // repeated index
    CHECK_THROWS_AS(make_mesh(verts, {{0, 1, 7}}), DataError);   // out of range
    // edge shared by three faces
    std::vector<Vec3> fan = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, -1, 0}};
    CHECK_THROWS_AS(make_mesh(fan, {{0, 1, 2}, {0, 1, 3}, {0, 1, 4}}), DataError);
    // zero-length edge
    std::vector<Vec3> dup = {{0, 0, 0}, {0, 0, 0}, {0, 1, 0}};
    CHECK_THROWS_AS(make_mesh(dup, {{0, 1, 2}}), DataError);
}

TEST_CASE("obj round trip preserves vertices to 1e-6 and faces exactly") {
    std::mt19937 rng(5);
    const Mesh mesh = fixtures::random_bumpy_grid(rng, 6, 4);
    const auto path = temp_file("roundtrip.obj");
    save_obj(path, mesh);
    const Mesh back = load_obj(path);
    REQUIRE(back.vertex_count() == mesh.vertex_count());
    CHECK(back.faces == mesh.faces);
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        CHECK((back.vertices[v] - mesh.vertices[v]).cwiseAbs().maxCoeff() <= 1e-6);
    }
    // byte determinism of the writer
    save_obj(temp_file("roundtrip2.obj"), mesh);
    std::ifstream a(path), b(temp_file("roundtrip2.obj"));
    const std::string sa((std::istreambuf_iterator<char>(a)), {});
    const std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
}

TEST_CASE("one_ring on the 3x3 grid center") {
    // 4x4-vertex grid: interior vertex 5 = (1,1). Incident faces connect it
    // left/right (4, 6), down/up (1, 9) and along the cell diagonals that end
    // at (1,1): corners 0 = (0,0) and 10 = (2,2).
    const Mesh mesh = fixtures::grid_mesh(3, 3);
    const auto ring = one_ring(mesh, 5);
    CHECK(ring == std::vector<int>{0, 1, 4, 6, 9, 10});
    // corner of a single triangle
    const Mesh tri = write_and_load("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n", "ring.obj");
    CHECK(one_ring(tri, 0) == std::vector<int>{1, 2});
    CHECK_THROWS_AS(one_ring(tri, 3), DataError);
}

TEST_CASE("one_ring of an isolated vertex is empty") {
    std::vector<Vec3> verts = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {5, 5, 5}};
    const Mesh mesh = make_mesh(verts, {{0, 1, 2}});
    CHECK(one_ring(mesh, 3).empty());
}

TEST_CASE("cotangent weights: equilateral interior edge") {
    // two equilateral triangles sharing edge 0-1
    const double h = std::sqrt(3.0) / 2.0;
    std::vector<Vec3> verts = {{0, 0, 0}, {1, 0, 0}, {0.5, h, 0}, {0.5, -h, 0}};
    const Mesh mesh = make_mesh(verts, {{0, 1, 2}, {0, 3, 1}});
    const auto weights = cotangent_weights(mesh);
    const int e01 = mesh.edge_index(0, 1);
    REQUIRE(e01 >= 0);
    // 0.5 * (cot 60 + cot 60) = 1/sqrt(3)
    CHECK(weights[e01] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));

    // independent oracle: accumulate cot of opposite angles directly
    for (size_t e = 0; e < mesh.edges.size(); ++e) {
        double expected = 0.0;
        for (int f : {mesh.edges[e].face0, mesh.edges[e].face1}) {
            if (f == -1) continue;
            int apex = -1;
            for (int c : mesh.faces[f]) {
                if (c != mesh.edges[e].v0 && c != mesh.edges[e].v1) apex = c;
            }
            const Vec3 u = mesh.vertices[mesh.edges[e].v0] - mesh.vertices[apex];
            const Vec3 w = mesh.vertices[mesh.edges[e].v1] - mesh.vertices[apex];
            const double angle = std::acos(u.normalized().dot(w.normalized()));
            expected += 0.5 / std::tan(angle);
        }
        CHECK(weights[e] == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("cotangent weights: right angle opposite a boundary edge gives zero") {
    // right isoceles triangle, 90 degrees at vertex 2 opposite edge 0-1
    std::vector<Vec3> verts = {{0, 0, 0}, {2, 0, 0}, {1, 1, 0}};
    const Mesh mesh = make_mesh(verts, {{0, 1, 2}});
    const auto weights = cotangent_weights(mesh);
    CHECK(weights[mesh.edge_index(0, 1)] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("cotangent weights error on zero-area face") {
    std::vector<Vec3> verts = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    const Mesh mesh = make_mesh(verts, {{0, 1, 2}});
    CHECK_THROWS_WITH_AS(cotangent_weights(mesh),
                         doctest::Contains("face 0"), NumericalError);
}

TEST_CASE("geodesic on a path mesh") {
    // path v0-v1-v2-v3 with unit edges built from skinny triangles
    std::vector<Vec3> verts = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0},
                               {0.5, 4, 0}, {1.5, 4, 0}, {2.5, 4, 0}};
    const Mesh mesh = make_mesh(verts, {{0, 1, 4}, {1, 2, 5}, {2, 3, 6}});
    const auto geo = multi_source_geodesic(mesh, {0});
    CHECK(geo.distance[0] == 0.0);
    CHECK(geo.distance[1] == 1.0);
    CHECK(geo.distance[2] == 2.0);
    CHECK(geo.distance[3] == 3.0);
    CHECK(geo.nearest_source[3] == 0);
}

TEST_CASE("geodesic with all vertices as sources") {
    const Mesh mesh = fixtures::grid_mesh(4, 3);
    std::vector<int> all(mesh.vertex_count());
    for (int v = 0; v < mesh.vertex_count(); ++v) all[v] = v;
    const auto geo = multi_source_geodesic(mesh, all);
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        CHECK(geo.distance[v] == 0.0);
        CHECK(geo.nearest_source[v] == v);
    }
}

TEST_CASE("geodesic errors and unreachable vertices") {
    const Mesh mesh = fixtures::grid_mesh(2, 2);
    CHECK_THROWS_AS(multi_source_geodesic(mesh, {}), DataError);
    CHECK_THROWS_AS(multi_source_geodesic(mesh, {99}), DataError);

    std::vector<Vec3> verts = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {9, 9, 9}};
    const Mesh island = make_mesh(verts, {{0, 1, 2}});
    const auto geo = multi_source_geodesic(island, {0});
    CHECK(geo.distance[3] == kInfinity);
    CHECK(geo.nearest_source[3] == -1);
}

TEST_CASE("geodesic equals Floyd-Warshall exactly on exact-arithmetic meshes") {
    std::mt19937 rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        const Mesh mesh = fixtures::random_exact_mesh(rng);
        REQUIRE(mesh.vertex_count() <= 200);
        const auto all_pairs = fixtures::floyd_warshall(mesh);

        std::uniform_int_distribution<int> count(1, 6);
        std::uniform_int_distribution<int> pick(0, mesh.vertex_count() - 1);
        std::set<int> source_set;
        const int n_sources = count(rng);
        while (static_cast<int>(source_set.size()) < n_sources) source_set.insert(pick(rng));
        const std::vector<int> sources(source_set.begin(), source_set.end());

        const auto geo = multi_source_geodesic(mesh, sources);
        const auto oracle = fixtures::oracle_multi_source(all_pairs, sources);
        for (int v = 0; v < mesh.vertex_count(); ++v) {
            CHECK(geo.distance[v] == oracle.distance[v]);  // bitwise
            CHECK(geo.nearest_source[v] == oracle.nearest_source[v]);
        }
    }
}

TEST_CASE("geodesic triangle inequality on generic meshes") {
    std::mt19937 rng(202);
    const Mesh mesh = fixtures::random_bumpy_grid(rng, 7, 5);
    std::uniform_int_distribution<int> pick(0, mesh.vertex_count() - 1);
    for (int trial = 0; trial < 60; ++trial) {
        const int u = pick(rng), x = pick(rng), w = pick(rng);
        const auto from_u = multi_source_geodesic(mesh, {u});
        const auto from_x = multi_source_geodesic(mesh, {x});
        CHECK(from_u.distance[w] <= from_u.distance[x] + from_x.distance[w] + 1e-12);
    }
}

TEST_CASE("face normals orientation and degeneracy") {
    std::vector<Vec3> verts = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    const Mesh ccw = make_mesh(verts, {{0, 1, 2}});
    const auto normals = face_normals(ccw, ccw.vertices);
    CHECK((normals[0] - Vec3(0, 0, 1)).norm() < 1e-15);

    const Mesh cw = make_mesh(verts, {{0, 2, 1}});
    CHECK((face_normals(cw, cw.vertices)[0] - Vec3(0, 0, -1)).norm() < 1e-15);

    VertexField3 collinear = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    CHECK_THROWS_WITH_AS(face_normals(ccw, collinear), doctest::Contains("face 0"),
                         NumericalError);
    CHECK_THROWS_AS(face_normals(ccw, VertexField3(2)), DataError);
}

TEST_CASE("fixture meshes have consistently wound interiors") {
    // every interior edge must be traversed in opposite directions by its two
    // faces, otherwise normal-consistency tests are meaningless
    for (const Mesh& mesh :
         {fixtures::uv_sphere(9, 12), fixtures::grid_mesh(4, 4), fixtures::u_strip().mesh}) {
        for (const FacePair& pair : mesh.face_adjacency) {
            const auto& e = mesh.edges[pair.edge];
            int direction_sum = 0;
            for (int f : {pair.f0, pair.f1}) {
                const auto& face = mesh.faces[f];
                for (int c = 0; c < 3; ++c) {
                    if (face[c] == e.v0 && face[(c + 1) % 3] == e.v1) direction_sum += 1;
                    if (face[c] == e.v1 && face[(c + 1) % 3] == e.v0) direction_sum -= 1;
                }
            }
            CHECK(direction_sum == 0);
        }
    }
}
