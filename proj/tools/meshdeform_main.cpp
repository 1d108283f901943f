// Batch CLI: build-graph | deform | fit | energy.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.

#include "meshdeform/fitting.hpp"
#include "meshdeform/so3.hpp"
#include "meshdeform/surface_gaussians.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace md = meshdeform;
using json = nlohmann::ordered_json;

namespace {

struct RunConfig {
    std::string mesh_path;
    std::string graph_path;
    std::string trajectory_path;
    std::string targets_path;
    std::string deformed_path;
    std::string rotations_path;
    std::string out_path;
    std::string mode = "ahs";
    std::string metric = "geodesic";
    int n_node = 1024;
    int n_neighbor = 4;
    int per_face = 0;
    double lambda_arap = 5.0;
    double lambda_nc = 10.0;
    int max_iters = 500;
    unsigned seed = 0;       // reserved; the core pipeline is deterministic
    bool serial = true;      // deterministic serial reductions (always on)
};

std::string frame_name(const char* prefix, int index, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s%04d.%s", prefix, index, ext);
    return buf;
}

int cmd_build_graph(const RunConfig& cfg) {
    const md::Mesh mesh = md::load_obj(cfg.mesh_path);
    int n_node = cfg.n_node;
    if (n_node > mesh.vertex_count()) {
        std::fprintf(stderr, "warning: n_node %d exceeds vertex count %d, clamping\n",
                     n_node, mesh.vertex_count());
        n_node = mesh.vertex_count();
    }
    const std::vector<int> nodes = md::sample_control_nodes(mesh, n_node, 0);
    const md::DeformationGraph graph =
        md::build_graph(mesh, nodes, cfg.n_neighbor, md::metric_from_name(cfg.metric));
    md::save_graph(cfg.out_path, graph);
    std::fprintf(stderr, "graph: %d nodes, %d neighbors per vertex, metric=%s\n",
                 graph.node_count(), graph.neighbor_count(), cfg.metric.c_str());
    return 0;
}

int cmd_deform(const RunConfig& cfg) {
    const md::Mesh mesh = md::load_obj(cfg.mesh_path);
    const md::DeformationGraph graph = md::load_graph(cfg.graph_path);
    md::validate_graph(graph, mesh);
    const md::Trajectory trajectory = md::load_trajectory(cfg.trajectory_path);
    const md::SkinningMode mode = md::skinning_mode_from_name(cfg.mode);

    md::SurfaceGaussianSet gaussians;
    if (cfg.per_face > 0) {
        gaussians = md::bind_gaussians(mesh, cfg.per_face);
    }

    std::filesystem::create_directories(cfg.out_path);
    const std::filesystem::path out_dir(cfg.out_path);
    for (size_t f = 0; f < trajectory.size(); ++f) {
        const md::TrajectoryFrame& frame = trajectory[f];
        if (static_cast<int>(frame.nodes.size()) != graph.node_count()) {
            throw md::DataError("frame " + std::to_string(f) + " has " +
                                std::to_string(frame.nodes.size()) + " nodes, graph has " +
                                std::to_string(graph.node_count()));
        }
        const md::MeshDeformation deformed =
            md::deform_mesh(mesh, graph, frame.nodes, mode);
        md::save_obj(out_dir / frame_name("frame_", static_cast<int>(f), "obj"),
                     deformed.positions, mesh.faces);
        if (cfg.per_face > 0) {
            md::SurfaceGaussianSet moved = gaussians;
            moved.mesh = &mesh;
            const std::vector<md::Vec4> rotations =
                md::deform_gaussian_rotations(gaussians, deformed.rotations);
            int clamped = 0;
            const std::vector<md::Vec3> scalings =
                md::deform_gaussian_scalings(gaussians, deformed.shears, &clamped);
            if (clamped > 0) {
                std::fprintf(stderr, "warning: frame %zu clamped %d non-positive scalings\n",
                             f, clamped);
            }
            for (size_t g = 0; g < moved.gaussians.size(); ++g) {
                moved.gaussians[g].rotation = rotations[g];
                moved.gaussians[g].scaling = scalings[g];
            }
            md::save_gaussians(out_dir / frame_name("gaussians_", static_cast<int>(f), "json"),
                               moved);
        }
    }
    std::fprintf(stderr, "deformed %zu frames to %s\n", trajectory.size(), cfg.out_path.c_str());
    return 0;
}

std::vector<std::filesystem::path> sorted_obj_files(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    if (!std::filesystem::is_directory(dir)) {
        throw md::DataError("targets path is not a directory: " + dir.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".obj") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw md::DataError("no .obj target frames in " + dir.string());
    }
    return files;
}

int cmd_fit(const RunConfig& cfg) {
    const md::Mesh mesh = md::load_obj(cfg.mesh_path);
    const md::DeformationGraph graph = md::load_graph(cfg.graph_path);
    md::validate_graph(graph, mesh);

    std::vector<md::VertexField3> frames;
    for (const auto& path : sorted_obj_files(cfg.targets_path)) {
        const md::Mesh target = md::load_obj(path);
        if (target.faces != mesh.faces) {
            throw md::DataError("target " + path.string() +
                                " connectivity differs from the rest mesh");
        }
        frames.push_back(target.vertices);
    }

    md::FitConfig fit_cfg;
    fit_cfg.lambda_arap = cfg.lambda_arap;
    fit_cfg.lambda_nc = cfg.lambda_nc;
    fit_cfg.max_iters = cfg.max_iters;
    fit_cfg.mode = md::skinning_mode_from_name(cfg.mode);

    const std::vector<md::FitResult> results = md::fit_sequence(mesh, graph, frames, fit_cfg);

    std::filesystem::create_directories(cfg.out_path);
    const std::filesystem::path out_dir(cfg.out_path);
    md::Trajectory trajectory;
    for (size_t f = 0; f < results.size(); ++f) {
        trajectory.push_back({static_cast<double>(f), results[f].params.decode()});
        md::save_trace_csv(out_dir / frame_name("trace_", static_cast<int>(f), "csv"),
                           results[f].trace);
        const md::MeshDeformation deformed =
            md::deform_mesh(mesh, graph, trajectory.back().nodes, fit_cfg.mode);
        double rmse = 0.0;
        for (int v = 0; v < mesh.vertex_count(); ++v) {
            rmse += (deformed.positions[v] - frames[f][v]).squaredNorm();
        }
        rmse = std::sqrt(rmse / mesh.vertex_count());
        std::fprintf(stderr, "frame %zu: %zu iterations, vertex RMSE %.3e\n", f,
                     results[f].trace.size() - 1, rmse);
    }
    md::save_trajectory(out_dir / "trajectory.json", trajectory);
    return 0;
}

int cmd_energy(const RunConfig& cfg) {
    const md::Mesh mesh = md::load_obj(cfg.mesh_path);
    const md::Mesh deformed = md::load_obj(cfg.deformed_path);
    if (deformed.faces != mesh.faces) {
        throw md::DataError("deformed mesh connectivity differs from the rest mesh");
    }

    md::VertexFieldMat rotations(mesh.vertex_count(), md::Mat3::Identity());
    if (!cfg.rotations_path.empty()) {
        std::ifstream in(cfg.rotations_path);
        if (!in) throw md::DataError("cannot open rotations file: " + cfg.rotations_path);
        json doc;
        try {
            doc = json::parse(in);
            const auto list = doc.at("rotations").get<std::vector<std::vector<double>>>();
            if (static_cast<int>(list.size()) != mesh.vertex_count()) {
                throw md::DataError("rotations count != vertex count");
            }
            for (size_t v = 0; v < list.size(); ++v) {
                if (list[v].size() != 3) throw md::DataError("rotvec needs 3 components");
                rotations[v] = md::so3::exp_rotvec(
                    md::Vec3(list[v][0], list[v][1], list[v][2]));
            }
        } catch (const json::exception& e) {
            throw md::DataError(std::string("rotations JSON error: ") + e.what());
        }
    }

    const md::EnergyReport arap = md::arap_energy(mesh, deformed.vertices, rotations);
    const md::EnergyReport nc = md::normal_consistency(mesh, deformed.vertices);
    json report;
    report["arap"] = arap.value;
    report["nc"] = nc.value;
    const std::string text = report.dump() + "\n";
    std::cout << text;
    if (!cfg.out_path.empty()) {
        std::ofstream out(cfg.out_path);
        if (!out) throw md::DataError("cannot write report: " + cfg.out_path);
        out << text;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse-controlled mesh deformation: deformation graphs, hybrid "
                 "skinning, surface Gaussians, and trajectory fitting"};
    app.require_subcommand(1);
    RunConfig cfg;

    CLI::App* build = app.add_subcommand("build-graph", "Sample control nodes and build the "
                                                        "vertex-node influence graph");
    build->add_option("--mesh", cfg.mesh_path, "Rest mesh OBJ")->required();
    build->add_option("--n-node", cfg.n_node, "Control node count (clamped to vertex count)");
    build->add_option("--n-neighbor", cfg.n_neighbor, "Neighbor nodes per vertex");
    build->add_option("--metric", cfg.metric, "geodesic|euclidean")
        ->check(CLI::IsMember({"geodesic", "euclidean"}));
    build->add_option("--out", cfg.out_path, "Output graph JSON")->required();

    CLI::App* deform = app.add_subcommand("deform", "Apply a node-transform trajectory");
    deform->add_option("--mesh", cfg.mesh_path, "Rest mesh OBJ")->required();
    deform->add_option("--graph", cfg.graph_path, "Deformation graph JSON")->required();
    deform->add_option("--trajectory", cfg.trajectory_path, "Trajectory JSON")->required();
    deform->add_option("--mode", cfg.mode, "lbs|dqs|ahs")
        ->check(CLI::IsMember({"lbs", "dqs", "ahs"}));
    deform->add_option("--per-face", cfg.per_face,
                       "Bind this many Gaussians per face and write them per frame");
    deform->add_option("--out", cfg.out_path, "Output directory")->required();

    CLI::App* fit = app.add_subcommand("fit", "Recover node transforms from target frames");
    fit->add_option("--mesh", cfg.mesh_path, "Rest mesh OBJ")->required();
    fit->add_option("--graph", cfg.graph_path, "Deformation graph JSON")->required();
    fit->add_option("--targets", cfg.targets_path, "Directory of target OBJ frames")->required();
    fit->add_option("--mode", cfg.mode, "lbs|dqs|ahs")
        ->check(CLI::IsMember({"lbs", "dqs", "ahs"}));
    fit->add_option("--lambda-arap", cfg.lambda_arap, "ARAP weight");
    fit->add_option("--lambda-nc", cfg.lambda_nc, "Normal-consistency weight");
    fit->add_option("--max-iters", cfg.max_iters, "Iteration cap per frame");
    fit->add_option("--out", cfg.out_path, "Output directory")->required();

    CLI::App* energy = app.add_subcommand("energy", "Report ARAP and normal-consistency "
                                                    "values for a deformed mesh");
    energy->add_option("--mesh", cfg.mesh_path, "Rest mesh OBJ")->required();
    energy->add_option("--deformed", cfg.deformed_path, "Deformed mesh OBJ")->required();
    energy->add_option("--rotations", cfg.rotations_path,
                       "Optional per-vertex rotations JSON {rotations:[[rx,ry,rz],...]}");
    energy->add_option("--out", cfg.out_path, "Also write the JSON report here");

    for (CLI::App* sub : {build, deform, fit, energy}) {
        sub->add_option("--seed", cfg.seed, "Random seed (reserved; pipeline is deterministic)");
        sub->add_flag("--serial", cfg.serial, "Force deterministic serial reductions (default)");
    }

    try {
        app.parse(argc, argv);
        if (build->parsed()) return cmd_build_graph(cfg);
        if (deform->parsed()) return cmd_deform(cfg);
        if (fit->parsed()) return cmd_fit(cfg);
        if (energy->parsed()) return cmd_energy(cfg);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const md::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const md::DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
