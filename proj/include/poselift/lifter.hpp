#pragma once

#include <Eigen/Core>
#include <Eigen/QR>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "poselift/camera.hpp"
#include "poselift/dictionary.hpp"
#include "poselift/error.hpp"
#include "poselift/limits.hpp"
#include "poselift/pose.hpp"

namespace poselift {

struct LiftConfig {
  int max_bases = 10;           // K
  double residual_tol = 1e-8;   // stop threshold on objective improvement
  double anthro_weight = 0.1;   // lambda
  int max_alternations = 10;    // coefficient/camera rounds per greedy step
  bool candidate_flips = true;  // offer the depth-mirrored candidate to the gate

  void validate() const {
    if (max_bases < 0) throw ConfigError("lift: max_bases must be >= 0");
    if (!(residual_tol >= 0.0)) throw ConfigError("lift: residual_tol must be >= 0");
    if (!(anthro_weight >= 0.0)) throw ConfigError("lift: anthro_weight must be >= 0");
    if (max_alternations < 1) throw ConfigError("lift: max_alternations must be >= 1");
  }
};

struct LiftResult {
  Pose3D pose;        // recovered pose in camera coordinates (z = depth)
  SparseCode code;
  CameraParams camera;
  double residual = 0.0;
  bool valid = false;
  int iterations = 0;
  std::vector<double> objective_trace;  // objective at init and after each greedy step
};

namespace detail {

// Stacked projection s * (I (x) R_{1:2}) * pose as a length-2P vector.
inline Eigen::VectorXd project_flat(const Eigen::VectorXd& pose, double scale,
                                    const Eigen::Matrix<double, 2, 3>& r12) {
  const Eigen::Index p = pose.size() / 3;
  Eigen::VectorXd out(2 * p);
  for (Eigen::Index j = 0; j < p; ++j)
    out.segment<2>(2 * j) = scale * (r12 * pose.segment<3>(3 * j));
  return out;
}

inline double anthro_penalty(const Eigen::VectorXd& pose, const Eigen::VectorXd& ref_lengths,
                             const JointTopology& topo) {
  const Eigen::VectorXd lengths = limb_lengths(pose, topo);
  return (lengths - ref_lengths).squaredNorm();
}

}  // namespace detail

// Squared reprojection residual of Eq-style weak perspective plus the
// anthropometric limb-length penalty against the dictionary mean.
inline double objective(const Pose2D& obs, const SparseCode& code, const CameraParams& cam,
                        const PoseDictionary& dict, double lambda) {
  if (!same_topology(obs.topology, dict.topology))
    throw StructuralError("objective: observation and dictionary topologies differ");
  const Eigen::VectorXd model = reconstruct_pose(dict, code);
  Eigen::VectorXd obs_flat(2 * obs.coords.rows());
  for (Eigen::Index j = 0; j < obs.coords.rows(); ++j)
    obs_flat.segment<2>(2 * j) = obs.coords.row(j).transpose();
  const double reproj =
      (obs_flat - detail::project_flat(model, cam.scale, cam.top_rows())).squaredNorm();
  if (lambda == 0.0) return reproj;
  const Eigen::VectorXd ref = limb_lengths(dict.mean, *dict.topology);
  return reproj + lambda * detail::anthro_penalty(model, ref, *dict.topology);
}

namespace detail {

struct LiftWorkspace {
  const Eigen::VectorXd& obs_flat;    // hip-centered observation, stacked 2P
  const Eigen::VectorXd& mean_c;      // hip-centered dictionary mean
  const Eigen::MatrixXd& basis_c;     // hip-centered basis columns
  const Eigen::VectorXd& ref_lengths;
  const JointTopology& topo;
  double lambda;

  Eigen::VectorXd model(const std::vector<Eigen::Index>& sel, const Eigen::VectorXd& w) const {
    Eigen::VectorXd m = mean_c;
    for (std::size_t k = 0; k < sel.size(); ++k)
      m += w(static_cast<Eigen::Index>(k)) * basis_c.col(sel[k]);
    return m;
  }

  double objective_of(const Eigen::VectorXd& model_pose, const CameraParams& cam) const {
    const double reproj =
        (obs_flat - project_flat(model_pose, cam.scale, cam.top_rows())).squaredNorm();
    if (lambda == 0.0) return reproj;
    return reproj + lambda * anthro_penalty(model_pose, ref_lengths, topo);
  }
};

// Joint coefficient refit at a fixed camera: exact least squares when
// lambda is zero, otherwise one Gauss-Newton step on the limb-length
// residuals with a backtracking guard so the objective never increases.
inline Eigen::VectorXd refit_coefficients(const LiftWorkspace& ws,
                                          const std::vector<Eigen::Index>& sel,
                                          const Eigen::VectorXd& w0, const CameraParams& cam) {
  const auto k = static_cast<Eigen::Index>(sel.size());
  if (k == 0) return w0;
  const Eigen::Matrix<double, 2, 3> r12 = cam.top_rows();

  Eigen::MatrixXd proj_cols(ws.obs_flat.size(), k);
  for (Eigen::Index c = 0; c < k; ++c)
    proj_cols.col(c) = project_flat(ws.basis_c.col(sel[static_cast<std::size_t>(c)]), cam.scale, r12);
  const Eigen::VectorXd reproj_rhs = ws.obs_flat - project_flat(ws.mean_c, cam.scale, r12);

  Eigen::VectorXd proposed;
  if (ws.lambda == 0.0) {
    proposed = proj_cols.colPivHouseholderQr().solve(reproj_rhs);
  } else {
    // Linearize limb lengths around w0 and solve the stacked system.
    const auto n_limbs = static_cast<Eigen::Index>(ws.topo.limbs.size());
    const Eigen::VectorXd model0 = ws.model(sel, w0);
    Eigen::MatrixXd jac(n_limbs, k);
    Eigen::VectorXd len_res(n_limbs);
    for (Eigen::Index l = 0; l < n_limbs; ++l) {
      const auto& [a, b] = ws.topo.limbs[static_cast<std::size_t>(l)];
      const Eigen::Vector3d d = model0.segment<3>(3 * a) - model0.segment<3>(3 * b);
      const double len = d.norm();
      len_res(l) = len - ws.ref_lengths(l);
      for (Eigen::Index c = 0; c < k; ++c) {
        const auto& col = ws.basis_c.col(sel[static_cast<std::size_t>(c)]);
        const Eigen::Vector3d dd = col.segment<3>(3 * a) - col.segment<3>(3 * b);
        jac(l, c) = len > 0.0 ? d.dot(dd) / len : 0.0;
      }
    }
    const double sqrt_lambda = std::sqrt(ws.lambda);
    Eigen::MatrixXd stacked(ws.obs_flat.size() + n_limbs, k);
    stacked.topRows(ws.obs_flat.size()) = proj_cols;
    stacked.bottomRows(n_limbs) = sqrt_lambda * jac;
    Eigen::VectorXd rhs(ws.obs_flat.size() + n_limbs);
    rhs.head(ws.obs_flat.size()) = reproj_rhs;
    rhs.tail(n_limbs) = sqrt_lambda * (jac * w0 - len_res);
    proposed = stacked.colPivHouseholderQr().solve(rhs);
  }

  const double obj0 = ws.objective_of(ws.model(sel, w0), cam);
  Eigen::VectorXd step = proposed - w0;
  double t = 1.0;
  while (t > 1e-4) {
    const Eigen::VectorXd candidate = w0 + t * step;
    if (ws.objective_of(ws.model(sel, candidate), cam) <= obj0) return candidate;
    t *= 0.5;
  }
  return w0;
}

struct DescentState {
  std::vector<Eigen::Index> selected;
  Eigen::VectorXd coefficients;
  CameraParams camera;
  double objective = 0.0;
  std::vector<double> trace;
};

// Greedy OMP descent from one camera initialization: atom selection by
// largest objective decrease, joint coefficient refits alternated with
// camera refits until the improvement drops below the tolerance.
inline DescentState run_descent(const LiftWorkspace& ws, const Eigen::MatrixX2d& obs_c,
                                Eigen::Index hip, Eigen::Index n_columns, const LiftConfig& cfg,
                                const CameraParams& init) {
  DescentState state;
  state.camera = init;
  state.coefficients.resize(0);
  state.objective = ws.objective_of(ws.mean_c, state.camera);
  state.trace.push_back(state.objective);

  std::vector<bool> used(static_cast<std::size_t>(n_columns), false);
  while (static_cast<int>(state.selected.size()) < cfg.max_bases && n_columns > 0) {
    const Eigen::VectorXd model_cur = ws.model(state.selected, state.coefficients);
    const Eigen::VectorXd residual =
        ws.obs_flat - project_flat(model_cur, state.camera.scale, state.camera.top_rows());

    // Best single column by objective decrease, coefficient from a 1-D
    // least squares on the reprojection term. Ties go to the lowest index.
    Eigen::Index best = -1;
    double best_decrease = 0.0;
    double best_coeff = 0.0;
    for (Eigen::Index i = 0; i < n_columns; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      const Eigen::VectorXd proj_col =
          project_flat(ws.basis_c.col(i), state.camera.scale, state.camera.top_rows());
      const double denom = proj_col.squaredNorm();
      if (denom <= 1e-30) continue;
      const double coeff = residual.dot(proj_col) / denom;
      const double candidate_obj =
          ws.objective_of(model_cur + coeff * ws.basis_c.col(i), state.camera);
      const double decrease = state.objective - candidate_obj;
      if (best < 0 || decrease > best_decrease) {
        best = i;
        best_decrease = decrease;
        best_coeff = coeff;
      }
    }
    if (best < 0 || best_decrease <= 0.0 || best_decrease < cfg.residual_tol) break;

    state.selected.push_back(best);
    used[static_cast<std::size_t>(best)] = true;
    Eigen::VectorXd w_ext(state.coefficients.size() + 1);
    w_ext.head(state.coefficients.size()) = state.coefficients;
    w_ext(state.coefficients.size()) = best_coeff;
    state.coefficients = std::move(w_ext);

    // Alternate joint coefficient refits with camera refits.
    for (int round = 0; round < cfg.max_alternations; ++round) {
      const Eigen::VectorXd w_new =
          refit_coefficients(ws, state.selected, state.coefficients, state.camera);
      CameraParams cam_new = state.camera;
      try {
        cam_new = fit_camera(obs_c, ws.model(state.selected, w_new), hip);
      } catch (const FitError&) {
        // Degenerate intermediate model; keep the previous camera.
      }
      const double obj_new = ws.objective_of(ws.model(state.selected, w_new), cam_new);
      if (obj_new > state.objective) break;
      const double improvement = state.objective - obj_new;
      state.coefficients = w_new;
      state.camera = cam_new;
      state.objective = obj_new;
      if (improvement < cfg.residual_tol) break;
    }
    state.trace.push_back(state.objective);
  }
  return state;
}

}  // namespace detail

// Greedy OMP lift of one 2D frame. The weak-perspective camera fit against
// the mean pose is ambiguous up to 180-degree flips, and the alternating
// descent cannot leave a wrong basin, so the descent is run from the
// mean-pose fit plus its three axis-flip initializations and the lowest
// final objective wins. The validity gate then chooses between the winning
// pose and its depth-mirrored twin.
inline LiftResult lift_frame(const Pose2D& obs, const PoseDictionary& dict,
                             const LimitsModel& limits, const LiftConfig& cfg) {
  cfg.validate();
  if (!same_topology(obs.topology, dict.topology))
    throw StructuralError("lift_frame: observation and dictionary topologies differ");

  const auto& topo = *dict.topology;
  const auto p = static_cast<Eigen::Index>(topo.joint_count());
  const Eigen::Index hip = topo.root;

  const Eigen::MatrixX2d obs_c = hip_centered(obs.coords, hip);
  Eigen::VectorXd obs_flat(2 * p);
  for (Eigen::Index j = 0; j < p; ++j) obs_flat.segment<2>(2 * j) = obs_c.row(j).transpose();

  const Eigen::VectorXd mean_c = hip_centered(dict.mean, hip);
  Eigen::MatrixXd basis_c = dict.basis;
  for (Eigen::Index c = 0; c < basis_c.cols(); ++c) {
    const Eigen::Vector3d h = basis_c.col(c).segment<3>(3 * hip);
    for (Eigen::Index j = 0; j < p; ++j) basis_c.col(c).segment<3>(3 * j) -= h;
  }
  const Eigen::VectorXd ref_lengths = limb_lengths(dict.mean, topo);

  const detail::LiftWorkspace ws{obs_flat, mean_c, basis_c, ref_lengths, topo, cfg.anthro_weight};

  CameraParams cam0;
  try {
    cam0 = fit_camera(obs_c, mean_c, hip);
  } catch (const FitError& e) {
    throw LiftError(std::string("lift_frame: camera fit on mean pose failed: ") + e.what());
  }

  const double pi = 3.14159265358979323846;
  const std::vector<CameraParams> inits{
      cam0,
      CameraParams(cam0.scale, rot_x(pi) * cam0.rotation),
      CameraParams(cam0.scale, rot_y(pi) * cam0.rotation),
      CameraParams(cam0.scale, rot_z(pi) * cam0.rotation),
  };
  detail::DescentState winner;
  bool have_winner = false;
  for (const auto& init : inits) {
    detail::DescentState state = detail::run_descent(ws, obs_c, hip, dict.size(), cfg, init);
    if (!have_winner || state.objective < winner.objective) {
      winner = std::move(state);
      have_winner = true;
    }
  }

  // Depth-mirror reseed: the winner's pose explains the observation, but the
  // mirrored depth interpretation may be the true basin and its camera can
  // sit 180 degrees off an oblique axis. Align the winner's model onto its
  // own depth-mirrored camera-frame pose (closest proper rotation under the
  // model scatter) and descend once more from there.
  {
    const Eigen::VectorXd model_w = ws.model(winner.selected, winner.coefficients);
    Eigen::Matrix3d scatter_cross = Eigen::Matrix3d::Zero();
    for (Eigen::Index j = 0; j < p; ++j) {
      Eigen::Vector3d y = winner.camera.rotation * model_w.segment<3>(3 * j);
      y(2) = -y(2);
      scatter_cross += y * model_w.segment<3>(3 * j).transpose();
    }
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(scatter_cross,
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d r_seed = svd.matrixU() * svd.matrixV().transpose();
    if (r_seed.determinant() < 0.0) {
      Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
      flip(2, 2) = -1.0;
      r_seed = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    detail::DescentState state = detail::run_descent(
        ws, obs_c, hip, dict.size(), cfg, CameraParams(winner.camera.scale, r_seed));
    if (state.objective < winner.objective) winner = std::move(state);
  }

  std::vector<Eigen::Index> sel = std::move(winner.selected);
  Eigen::VectorXd w = std::move(winner.coefficients);
  CameraParams cam = winner.camera;
  const double obj_cur = winner.objective;
  std::vector<double> trace = std::move(winner.trace);

  // Candidate pool for the validity gate: the recovered pose in camera
  // coordinates and, optionally, its depth-mirrored twin.
  const Eigen::VectorXd model_final = ws.model(sel, w);
  Eigen::MatrixX3d pose_cam(p, 3);
  for (Eigen::Index j = 0; j < p; ++j)
    pose_cam.row(j) = (cam.rotation * model_final.segment<3>(3 * j)).transpose();

  struct Candidate {
    Eigen::MatrixX3d coords;
    CameraParams camera;
    double residual;
    bool valid;
  };
  std::vector<Candidate> candidates;
  candidates.push_back({pose_cam, cam, obj_cur, false});

  if (cfg.candidate_flips) {
    Eigen::MatrixX3d flipped = pose_cam;
    flipped.col(2) = -flipped.col(2);
    Eigen::VectorXd flipped_flat = Pose3D(dict.topology, flipped).flatten();
    try {
      const CameraParams refit = fit_camera(obs_c, flipped_flat, hip);
      const double resid = ws.objective_of(flipped_flat, refit);
      candidates.push_back({std::move(flipped), refit, resid, false});
    } catch (const FitError&) {
      // Twin unusable; gate on the base candidate alone.
    }
  }

  for (auto& c : candidates) c.valid = pose_is_valid(Pose3D(dict.topology, c.coords), limits);

  const Candidate* chosen = nullptr;
  for (const auto& c : candidates)
    if (c.valid && (!chosen || c.residual < chosen->residual)) chosen = &c;
  bool any_valid = chosen != nullptr;
  if (!chosen)
    for (const auto& c : candidates)
      if (!chosen || c.residual < chosen->residual) chosen = &c;

  const int iterations = static_cast<int>(sel.size());
  SparseCode code{std::move(sel), std::move(w)};
  return LiftResult{Pose3D(dict.topology, chosen->coords),
                    std::move(code),
                    chosen->camera,
                    chosen->residual,
                    any_valid,
                    iterations,
                    std::move(trace)};
}

// Per-frame lifting over a sequence; results keep the input order.
inline std::vector<LiftResult> lift_sequence(const PoseSequence2D& seq, const PoseDictionary& dict,
                                             const LimitsModel& limits, const LiftConfig& cfg) {
  std::vector<LiftResult> results;
  results.reserve(seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t) {
    try {
      results.push_back(lift_frame(seq.pose(t), dict, limits, cfg));
    } catch (const Error& e) {
      throw Error(e.kind(), "frame " + std::to_string(t) + ": " + e.what());
    }
  }
  return results;
}

}  // namespace poselift
