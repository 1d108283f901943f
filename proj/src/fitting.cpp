#include "meshdeform/fitting.hpp"

#include "meshdeform/so3.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace meshdeform {

namespace {

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// The rotation-vector parametrization needs the principal domain; a fit that
// drifts past it has diverged.
constexpr double kRotvecDomainLimit = M_PI - 1e-4;

struct DecodedNode {
    Vec3 rotvec;
    Mat3 rotation;
    Vec4 quat;        // quat_exp(rotvec), w >= 0 on the principal domain
    Mat3 shear;
    Mat3 effective;   // (1 - eta) S + eta I
    Vec3 translation;
    Vec4 dual;        // 0.5 * (0, t) x quat
    double eta = 0.0;
};

bool decode_nodes(const FrameParams& params, std::vector<DecodedNode>& nodes) {
    const int np = params.node_count();
    nodes.resize(np);
    for (int p = 0; p < np; ++p) {
        const auto seg = params.values.segment(13 * p, 13);
        DecodedNode& n = nodes[p];
        n.rotvec = seg.head(3);
        if (!n.rotvec.allFinite() || n.rotvec.norm() >= kRotvecDomainLimit) return false;
        n.rotation = so3::exp_rotvec(n.rotvec);
        n.quat = so3::quat_exp_rotvec(n.rotvec);
        n.shear << seg[3], seg[4], seg[5],
                   seg[4], seg[6], seg[7],
                   seg[5], seg[7], seg[8];
        n.translation = seg.segment(9, 3);
        n.eta = logistic(seg[12]);
        n.effective = (1.0 - n.eta) * n.shear + n.eta * Mat3::Identity();
        const Vec4 t_quat(0.0, n.translation.x(), n.translation.y(), n.translation.z());
        n.dual = 0.5 * so3::quat_multiply(t_quat, n.quat);
        if (!n.shear.allFinite() || !n.translation.allFinite() || !std::isfinite(n.eta)) {
            return false;
        }
    }
    return true;
}

// Per-vertex forward state kept for the backward pass.
struct VertexForward {
    Vec3 lbs = Vec3::Zero();
    Vec3 dqs = Vec3::Zero();
    Vec3 position = Vec3::Zero();
    double eta = 0.0;
    Vec4 qhat = Vec4(1, 0, 0, 0);
    Vec4 dhat = Vec4::Zero();
    double real_norm = 1.0;
    Vec3 blend_rotvec = Vec3::Zero();  // u_v
    Mat3 rotation = Mat3::Identity();  // R_v
    std::vector<double> signs;         // hemisphere alignment per neighbor
};

struct Evaluation {
    bool finite = false;
    ObjectiveBreakdown value;
    Eigen::VectorXd gradient;
};

struct FitProblem {
    const Mesh& mesh;
    const DeformationGraph& graph;
    const VertexField3& targets;
    const FitConfig& config;
    std::vector<double> cotan;  // rest cotangent weights, for the ARAP term
    Eigen::VectorXd preconditioner;

    FitProblem(const Mesh& mesh_in, const DeformationGraph& graph_in,
               const VertexField3& targets_in, const FitConfig& config_in)
        : mesh(mesh_in), graph(graph_in), targets(targets_in), config(config_in) {
        validate_graph(graph, mesh);
        if (targets.size() != mesh.vertices.size()) {
            throw DataError("fitting: target field length mismatch");
        }
        if (config.lambda_arap < 0.0 || config.lambda_nc < 0.0 || config.max_iters < 1) {
            throw DataError("fitting: invalid config (lambdas >= 0, max_iters >= 1)");
        }
        if (config.lambda_arap > 0.0) {
            cotan = cotangent_weights(mesh);
        }

        // Fixed diagonal descent metric. Rotation, shear and eta act through
        // lever arms of the influenced vertices while translations act
        // directly, so their gradient blocks are rescaled by the mean squared
        // vertex distance per node to keep the problem well conditioned.
        const int np = graph.node_count();
        Eigen::VectorXd lever(np), weight_sum(np);
        lever.setZero();
        weight_sum.setZero();
        for (int v = 0; v < mesh.vertex_count(); ++v) {
            const VertexInfluence& inf = graph.vertices[v];
            for (size_t i = 0; i < inf.neighbors.size(); ++i) {
                lever[inf.neighbors[i]] += inf.weights[i] * mesh.vertices[v].squaredNorm();
                weight_sum[inf.neighbors[i]] += inf.weights[i];
            }
        }
        preconditioner.resize(13 * np);
        for (int p = 0; p < np; ++p) {
            const double r2 = weight_sum[p] > 0.0 ? lever[p] / weight_sum[p] : 0.0;
            const double scaled = 1.0 / (1.0 + r2);
            preconditioner.segment(13 * p, 9).setConstant(scaled);   // rotvec + shear
            preconditioner.segment(13 * p + 9, 3).setOnes();         // translation
            preconditioner[13 * p + 12] = scaled;                    // eta logit
        }
    }
};

// Forward skinning for one vertex from decoded nodes. Returns false when the
// dual-quaternion or rotation blend degenerates (antipodal inputs).
bool forward_vertex(const FitProblem& problem, const std::vector<DecodedNode>& nodes,
                    int v, VertexForward& fwd) {
    const VertexInfluence& inf = problem.graph.vertices[v];
    const size_t k = inf.neighbors.size();
    const Vec3& rest = problem.mesh.vertices[v];
    const SkinningMode mode = problem.config.mode;

    const int pivot = pivot_neighbor(inf.neighbors, inf.weights);
    const Vec4& pivot_quat = nodes[inf.neighbors[pivot]].quat;

    fwd.signs.resize(k);
    fwd.eta = 0.0;
    Vec4 real_sum = Vec4::Zero();
    Vec4 dual_sum = Vec4::Zero();
    Vec3 rotvec_sum = Vec3::Zero();
    fwd.lbs = Vec3::Zero();
    for (size_t i = 0; i < k; ++i) {
        const DecodedNode& node = nodes[inf.neighbors[i]];
        const double w = inf.weights[i];
        fwd.signs[i] = pivot_quat.dot(node.quat) < 0.0 ? -1.0 : 1.0;
        fwd.eta += w * node.eta;
        fwd.lbs += w * (node.rotation * (node.effective * rest) + node.translation);
        real_sum += (w * fwd.signs[i]) * node.quat;
        dual_sum += (w * fwd.signs[i]) * node.dual;
        Vec3 rho = node.rotvec;
        if (fwd.signs[i] < 0.0) {
            // hemisphere-aligned representative r - 2pi r_hat; degenerate as
            // the rotation approaches identity (matches the runtime guard)
            const double theta = rho.norm();
            if (theta < 1e-6) return false;
            rho -= (2.0 * M_PI / theta) * rho;
        }
        rotvec_sum += w * rho;
    }

    fwd.blend_rotvec = rotvec_sum;
    fwd.rotation = so3::exp_rotvec(rotvec_sum);

    if (mode != SkinningMode::Lbs) {
        fwd.real_norm = real_sum.norm();
        if (fwd.real_norm < 1e-12) return false;
        fwd.qhat = real_sum / fwd.real_norm;
        fwd.dhat = dual_sum / fwd.real_norm;
        const Vec4 tq = so3::quat_multiply(fwd.dhat, so3::quat_conjugate(fwd.qhat));
        fwd.dqs = so3::quat_rotate(fwd.qhat, rest) + 2.0 * Vec3(tq[1], tq[2], tq[3]);
    }

    switch (mode) {
        case SkinningMode::Lbs: fwd.position = fwd.lbs; break;
        case SkinningMode::Dqs: fwd.position = fwd.dqs; break;
        case SkinningMode::Ahs:
            fwd.position = (1.0 - fwd.eta) * fwd.lbs + fwd.eta * fwd.dqs;
            break;
    }
    return fwd.position.allFinite();
}

// Scatters dL/dShear_bar (unconstrained 3x3) into the shear6 and eta-logit
// parameter slots of node p.
void fold_effective_shear_gradient(const DecodedNode& node, const Mat3& g_sbar,
                                   double* shear6_grad, double& logit_grad) {
    const double scale = 1.0 - node.eta;
    shear6_grad[0] += scale * g_sbar(0, 0);
    shear6_grad[1] += scale * (g_sbar(0, 1) + g_sbar(1, 0));
    shear6_grad[2] += scale * (g_sbar(0, 2) + g_sbar(2, 0));
    shear6_grad[3] += scale * g_sbar(1, 1);
    shear6_grad[4] += scale * (g_sbar(1, 2) + g_sbar(2, 1));
    shear6_grad[5] += scale * g_sbar(2, 2);
    // dShear_bar/deta = I - S, chained through the logistic squash
    const double deta = (Mat3::Identity() - node.shear).cwiseProduct(g_sbar).sum();
    logit_grad += deta * node.eta * (1.0 - node.eta);
}

void backward_vertex(const FitProblem& problem, const std::vector<DecodedNode>& nodes,
                     int v, const VertexForward& fwd, const Vec3& g_pos,
                     const Mat3& g_rotation, Eigen::VectorXd& grad) {
    const VertexInfluence& inf = problem.graph.vertices[v];
    const size_t k = inf.neighbors.size();
    const Vec3& rest = problem.mesh.vertices[v];
    const SkinningMode mode = problem.config.mode;

    Vec3 g_lbs = Vec3::Zero();
    Vec3 g_dqs = Vec3::Zero();
    double g_eta_v = 0.0;
    switch (mode) {
        case SkinningMode::Lbs:
            g_lbs = g_pos;
            break;
        case SkinningMode::Dqs:
            g_dqs = g_pos;
            break;
        case SkinningMode::Ahs:
            g_lbs = (1.0 - fwd.eta) * g_pos;
            g_dqs = fwd.eta * g_pos;
            g_eta_v = g_pos.dot(fwd.dqs - fwd.lbs);
            break;
    }

    // blended rotation: dL/du = J_l(u)^T vee(G R^T - R G^T)
    Vec3 g_u = Vec3::Zero();
    if (!g_rotation.isZero(0.0)) {
        const Mat3 m = g_rotation * fwd.rotation.transpose();
        g_u = so3::left_jacobian(fwd.blend_rotvec).transpose() * so3::vee(m - m.transpose());
    }

    // dual-quaternion sums
    Vec4 g_real_sum = Vec4::Zero();
    Vec4 g_dual_sum = Vec4::Zero();
    if (mode != SkinningMode::Lbs && !g_dqs.isZero(0.0)) {
        Vec4 g_qhat = so3::quat_rotate_jacobian(fwd.qhat, rest).transpose() * g_dqs;
        // translation part 2 * vec(dhat x qhat*)
        const Eigen::Matrix4d conj = Eigen::Vector4d(1, -1, -1, -1).asDiagonal();
        const Eigen::Matrix<double, 3, 4> dt_ddhat =
            2.0 * so3::quat_right_matrix(so3::quat_conjugate(fwd.qhat)).bottomRows<3>();
        const Eigen::Matrix<double, 3, 4> dt_dqhat =
            2.0 * (so3::quat_left_matrix(fwd.dhat) * conj).bottomRows<3>();
        Vec4 g_dhat = dt_ddhat.transpose() * g_dqs;
        g_qhat += dt_dqhat.transpose() * g_dqs;
        // normalization by |real_sum|
        const double n = fwd.real_norm;
        g_real_sum = (g_qhat - fwd.qhat * fwd.qhat.dot(g_qhat)) / n -
                     fwd.qhat * (fwd.dhat.dot(g_dhat) / n);
        g_dual_sum = g_dhat / n;
    }

    for (size_t i = 0; i < k; ++i) {
        const int p = inf.neighbors[i];
        const DecodedNode& node = nodes[p];
        const double w = inf.weights[i];
        const double ws = w * fwd.signs[i];
        auto g_node = grad.segment(13 * p, 13);

        // eta through the position blend
        if (g_eta_v != 0.0) {
            g_node[12] += w * node.eta * (1.0 - node.eta) * g_eta_v;
        }

        if (!g_lbs.isZero(0.0)) {
            // w * (R Sbar rest + t)
            g_node.segment(9, 3) += w * g_lbs;
            const Vec3 rotated = node.rotation * (node.effective * rest);
            g_node.head(3) +=
                w * so3::left_jacobian(node.rotvec).transpose() * rotated.cross(g_lbs);
            const Mat3 g_sbar = w * (node.rotation.transpose() * g_lbs) * rest.transpose();
            double shear6[6] = {0, 0, 0, 0, 0, 0};
            double logit = 0.0;
            fold_effective_shear_gradient(node, g_sbar, shear6, logit);
            for (int c = 0; c < 6; ++c) g_node[3 + c] += shear6[c];
            g_node[12] += logit;
        }

        if (!g_real_sum.isZero(0.0) || !g_dual_sum.isZero(0.0)) {
            // real_sum += ws * q_p; dual_sum += ws * 0.5 * (0, t_p) x q_p
            const Vec4 t_quat(0.0, node.translation.x(), node.translation.y(),
                              node.translation.z());
            const Vec4 g_quat =
                ws * (g_real_sum + 0.5 * so3::quat_left_matrix(t_quat).transpose() * g_dual_sum);
            g_node.head(3) += so3::quat_exp_rotvec_jacobian(node.rotvec).transpose() * g_quat;
            const Vec4 g_t4 =
                ws * 0.5 * so3::quat_right_matrix(node.quat).transpose() * g_dual_sum;
            g_node.segment(9, 3) += g_t4.tail<3>();
        }

        if (!g_u.isZero(0.0)) {
            // u_v += w * rho_p, rho the hemisphere-aligned rotation vector
            if (fwd.signs[i] > 0.0) {
                g_node.head(3) += w * g_u;
            } else {
                const double theta = node.rotvec.norm();
                const Vec3 axis = node.rotvec / theta;
                const Mat3 jac = Mat3::Identity() -
                                 (2.0 * M_PI / theta) *
                                     (Mat3::Identity() - axis * axis.transpose());
                g_node.head(3) += w * jac.transpose() * g_u;
            }
        }
    }
}

Evaluation evaluate(const FitProblem& problem, const FrameParams& params,
                    bool want_gradient) {
    Evaluation eval;
    const int nv = problem.mesh.vertex_count();
    const FitConfig& cfg = problem.config;

    std::vector<DecodedNode> nodes;
    if (!decode_nodes(params, nodes)) return eval;

    std::vector<VertexForward> forward(nv);
    VertexField3 positions(nv);
    VertexFieldMat rotations(nv);
    for (int v = 0; v < nv; ++v) {
        if (!forward_vertex(problem, nodes, v, forward[v])) return eval;
        positions[v] = forward[v].position;
        rotations[v] = forward[v].rotation;
    }

    // data term: mean squared vertex error
    double data = 0.0;
    for (int v = 0; v < nv; ++v) {
        data += (positions[v] - problem.targets[v]).squaredNorm();
    }
    data /= nv;

    VertexField3 position_grad;
    VertexFieldMat rotation_grad;
    if (want_gradient) {
        position_grad.resize(nv);
        for (int v = 0; v < nv; ++v) {
            position_grad[v] = (2.0 / nv) * (positions[v] - problem.targets[v]);
        }
        rotation_grad.assign(nv, Mat3::Zero());
    }

    double arap_value = 0.0;
    double nc_value = 0.0;
    try {
        if (cfg.lambda_arap > 0.0) {
            EnergyReport arap = arap_energy(problem.mesh, problem.cotan, positions, rotations,
                                            want_gradient ? &rotation_grad : nullptr);
            arap_value = arap.value;
            if (want_gradient) {
                for (int v = 0; v < nv; ++v) {
                    position_grad[v] += cfg.lambda_arap * arap.gradient[v];
                    rotation_grad[v] *= cfg.lambda_arap;
                }
            }
        }
        if (cfg.lambda_nc > 0.0) {
            EnergyReport nc = normal_consistency(problem.mesh, positions);
            nc_value = nc.value;
            if (want_gradient) {
                for (int v = 0; v < nv; ++v) {
                    position_grad[v] += cfg.lambda_nc * nc.gradient[v];
                }
            }
        }
    } catch (const NumericalError&) {
        return eval;  // degenerate trial point; caller treats as non-finite
    }

    eval.value.data = data;
    eval.value.arap = arap_value;
    eval.value.nc = nc_value;
    eval.value.total = data + cfg.lambda_arap * arap_value + cfg.lambda_nc * nc_value;
    if (!std::isfinite(eval.value.total)) return eval;

    if (want_gradient) {
        eval.gradient = Eigen::VectorXd::Zero(params.values.size());
        for (int v = 0; v < nv; ++v) {
            backward_vertex(problem, nodes, v, forward[v], position_grad[v],
                            rotation_grad.empty() ? Mat3::Zero() : rotation_grad[v],
                            eval.gradient);
        }
        if (!eval.gradient.allFinite()) return eval;
    }
    eval.finite = true;
    return eval;
}

}  // namespace

FrameParams FrameParams::identity(int node_count) {
    FrameParams params;
    params.values = Eigen::VectorXd::Zero(13 * node_count);
    for (int p = 0; p < node_count; ++p) {
        params.values[13 * p + 3] = 1.0;  // xx
        params.values[13 * p + 6] = 1.0;  // yy
        params.values[13 * p + 8] = 1.0;  // zz
    }
    return params;
}

NodeTransform FrameParams::decode_node(int node) const {
    const auto seg = values.segment(13 * node, 13);
    NodeTransform t;
    t.rotation = so3::exp_rotvec(Vec3(seg[0], seg[1], seg[2]));
    t.shear << seg[3], seg[4], seg[5],
               seg[4], seg[6], seg[7],
               seg[5], seg[7], seg[8];
    t.translation = Vec3(seg[9], seg[10], seg[11]);
    t.rigid_strength = logistic(seg[12]);
    return t;
}

std::vector<NodeTransform> FrameParams::decode() const {
    std::vector<NodeTransform> out(node_count());
    for (int p = 0; p < node_count(); ++p) out[p] = decode_node(p);
    return out;
}

ObjectiveResult objective(const Mesh& mesh, const DeformationGraph& graph,
                          const FrameParams& params, const VertexField3& targets,
                          const FitConfig& config) {
    if (params.node_count() != graph.node_count() ||
        params.values.size() != 13 * graph.node_count()) {
        throw DataError("objective: parameter count does not match graph nodes");
    }
    FitProblem problem(mesh, graph, targets, config);
    Evaluation eval = evaluate(problem, params, true);
    if (!eval.finite) {
        throw NumericalError("objective: non-finite value (diverged parameters)");
    }
    return {eval.value, std::move(eval.gradient)};
}

FitResult fit_frame(const Mesh& mesh, const DeformationGraph& graph,
                    const VertexField3& targets, const FitConfig& config,
                    const FrameParams& init) {
    if (init.values.size() != 13 * graph.node_count()) {
        throw DataError("fit_frame: init parameter count does not match graph nodes");
    }
    FitProblem problem(mesh, graph, targets, config);

    FitResult result;
    result.params = init;
    Evaluation current = evaluate(problem, result.params, true);
    if (!current.finite) {
        throw NumericalError("fit_frame: objective not finite at the initial point");
    }
    result.trace.push_back({0, current.value});

    // Limited-memory quasi-Newton direction (gradient-only) over the diagonal
    // descent metric, with Armijo backtracking. Plain steepest descent stalls
    // sublinearly along the nearly flat eta directions of this objective.
    constexpr int kMemory = 10;
    std::vector<Eigen::VectorXd> s_hist, y_hist;
    std::vector<double> rho_hist;

    for (int iter = 1; iter <= config.max_iters; ++iter) {
        Eigen::VectorXd direction = -current.gradient;
        const int m = static_cast<int>(s_hist.size());
        std::vector<double> alpha(m);
        for (int i = m - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(direction);
            direction -= alpha[i] * y_hist[i];
        }
        double gamma = 1.0;
        if (m > 0) {
            gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        }
        direction = (gamma * problem.preconditioner.array() * direction.array()).matrix();
        for (int i = 0; i < m; ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(direction);
            direction += (alpha[i] - beta) * s_hist[i];
        }

        double slope = -current.gradient.dot(direction);  // along -direction
        if (!(slope > 0.0)) {
            // unusable curvature; restart from preconditioned steepest descent
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            direction = -problem.preconditioner.cwiseProduct(current.gradient);
            slope = -current.gradient.dot(direction);
            if (slope == 0.0) break;
        }

        double step = m > 0 ? 1.0 : config.step_size;
        FrameParams trial;
        Evaluation trial_eval;
        bool accepted = false;
        while (step > 1e-20) {
            trial.values = result.params.values + step * direction;
            trial_eval = evaluate(problem, trial, false);
            if (trial_eval.finite &&
                trial_eval.value.total <= current.value.total - 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        const double previous_total = current.value.total;
        Eigen::VectorXd param_delta = trial.values - result.params.values;
        result.params = std::move(trial);
        const Evaluation next = evaluate(problem, result.params, true);
        if (!next.finite) {
            throw NumericalError("fit_frame: objective became non-finite after a step");
        }
        result.trace.push_back({iter, next.value});

        Eigen::VectorXd grad_delta = next.gradient - current.gradient;
        const double curvature = param_delta.dot(grad_delta);
        if (curvature > 1e-12 * param_delta.norm() * grad_delta.norm()) {
            s_hist.push_back(std::move(param_delta));
            y_hist.push_back(std::move(grad_delta));
            rho_hist.push_back(1.0 / curvature);
            if (static_cast<int>(s_hist.size()) > kMemory) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho_hist.erase(rho_hist.begin());
            }
        }
        current = next;

        const double decrease = previous_total - current.value.total;
        if (decrease <= config.convergence_tol * std::max(std::abs(previous_total), 1e-300)) {
            break;
        }
    }
    return result;
}

FitResult fit_frame(const Mesh& mesh, const DeformationGraph& graph,
                    const VertexField3& targets, const FitConfig& config) {
    return fit_frame(mesh, graph, targets, config, FrameParams::identity(graph.node_count()));
}

std::vector<FitResult> fit_sequence(const Mesh& mesh, const DeformationGraph& graph,
                                    const std::vector<VertexField3>& target_frames,
                                    const FitConfig& config) {
    if (target_frames.empty()) {
        throw DataError("fit_sequence: need at least one target frame");
    }
    std::vector<FitResult> results;
    FrameParams init = FrameParams::identity(graph.node_count());
    for (const VertexField3& targets : target_frames) {
        results.push_back(fit_frame(mesh, graph, targets, config, init));
        init = results.back().params;
    }
    return results;
}

void save_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write trace file: " + path.string());
    out << "iter,data,arap,nc,total\n";
    char buf[256];
    for (const TraceRow& row : trace) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", row.iter,
                      row.value.data, row.value.arap, row.value.nc, row.value.total);
        out << buf;
    }
}

}  // namespace meshdeform
