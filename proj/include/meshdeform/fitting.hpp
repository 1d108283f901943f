#pragma once

// Recovers per-frame node transforms from target vertex positions by
// first-order descent on a vertex data term plus the geometric regularizers.

#include "meshdeform/energy.hpp"
#include "meshdeform/skinning.hpp"

namespace meshdeform {

struct FitConfig {
    double lambda_arap = 5.0;
    double lambda_nc = 10.0;
    int max_iters = 500;
    double step_size = 1e-2;
    double convergence_tol = 1e-8;  // relative objective decrease
    SkinningMode mode = SkinningMode::Ahs;
};

// Free per-node parameter table: 13 values per node laid out as rotvec(3),
// shear upper triangle (xx, xy, xz, yy, yz, zz), translation(3), eta logit.
// eta = logistic(logit) keeps the rigid strength smoothly inside [0, 1].
struct FrameParams {
    Eigen::VectorXd values;

    static FrameParams identity(int node_count);
    int node_count() const { return static_cast<int>(values.size()) / 13; }
    NodeTransform decode_node(int node) const;
    std::vector<NodeTransform> decode() const;
};

struct ObjectiveBreakdown {
    double data = 0.0;
    double arap = 0.0;
    double nc = 0.0;
    double total = 0.0;
};

struct ObjectiveResult {
    ObjectiveBreakdown value;
    Eigen::VectorXd gradient;  // d(total)/d(params), 13 per node
};

// Mean squared vertex error + lambda_arap * ARAP + lambda_nc * NC under the
// configured skinning mode, with the exact parameter gradient. Throws
// NumericalError when the objective is not finite (diverged parameters).
ObjectiveResult objective(const Mesh& mesh, const DeformationGraph& graph,
                          const FrameParams& params, const VertexField3& targets,
                          const FitConfig& config);

struct TraceRow {
    int iter = 0;
    ObjectiveBreakdown value;
};

struct FitResult {
    FrameParams params;
    std::vector<TraceRow> trace;  // monotone non-increasing total
};

// First-order descent with backtracking line search (halve on insufficient
// decrease, Armijo constant 1e-4): limited-memory quasi-Newton directions
// built from gradients only, over a fixed diagonal metric. Stops at max_iters
// or when the relative decrease drops below convergence_tol. The trace is
// monotone non-increasing.
FitResult fit_frame(const Mesh& mesh, const DeformationGraph& graph,
                    const VertexField3& targets, const FitConfig& config,
                    const FrameParams& init);
FitResult fit_frame(const Mesh& mesh, const DeformationGraph& graph,
                    const VertexField3& targets, const FitConfig& config);

// Frame k warm-starts from the fitted frame k-1; frame 0 from identity.
std::vector<FitResult> fit_sequence(const Mesh& mesh, const DeformationGraph& graph,
                                    const std::vector<VertexField3>& target_frames,
                                    const FitConfig& config);

void save_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace);

}  // namespace meshdeform
