// SPDX-License-Identifier: Apache-2.0
#include "emt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "emt/error.hpp"
#include "emt/tasks.hpp"

namespace emt {

namespace {

RealVector act(Activation a, const RealVector& z) {
  return a == Activation::tanh ? RealVector(z.array().tanh()) : z;
}

RealVector act_derivative(Activation a, const RealVector& z) {
  if (a == Activation::identity) return RealVector::Ones(z.size());
  return (1.0 - z.array().tanh().square()).matrix();
}

RealVector fixed_point_residual(const RnnParams& p, const RealVector& h) {
  return act(p.activation, p.w_hh * h + p.bias) - h;
}

double circular_distance(double a, double b) { return std::abs(wrap_angle(a - b)); }

// Oblique projector onto the eigenspaces with |lambda| < threshold.
std::optional<RealMatrix> transient_projector(const RealMatrix& w, double threshold) {
  const auto spec = eig_general(w);
  if (!spec.inverse_eigenvectors) return std::nullopt;
  const auto n = w.rows();
  Eigen::MatrixXcd proj = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t k = 0; k < spec.eigenvalues.size(); ++k) {
    if (std::abs(spec.eigenvalues[k]) < threshold) {
      const auto idx = static_cast<Eigen::Index>(k);
      proj += spec.right_eigenvectors.col(idx) * spec.inverse_eigenvectors->row(idx);
    }
  }
  // The selected set is closed under conjugation, so the imaginary part is
  // rounding noise.
  return RealMatrix(proj.real());
}

}  // namespace

FixedPoint find_fixed_point(const RnnParams& p, const RealVector& start, double tol, int max_iter) {
  validate(p);
  if (start.size() != p.hidden()) throw InvalidArgument("find_fixed_point: start has wrong size");
  if (tol <= 0.0 || max_iter < 1) throw InvalidArgument("find_fixed_point: tol and max_iter must be positive");
  const auto n = p.hidden();
  FixedPoint fp{start, 0.0, 0};
  RealVector f = fixed_point_residual(p, fp.h);
  fp.residual = f.lpNorm<Eigen::Infinity>();
  while (fp.residual > tol) {
    if (fp.iterations >= max_iter) {
      throw NumericalError("find_fixed_point: no convergence after " + std::to_string(max_iter) +
                           " iterations, best residual " + std::to_string(fp.residual));
    }
    ++fp.iterations;
    const RealVector z = p.w_hh * fp.h + p.bias;
    const RealMatrix jac = act_derivative(p.activation, z).asDiagonal() * p.w_hh - RealMatrix::Identity(n, n);
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    RealVector step = lu.isInvertible() ? RealVector(lu.solve(-f)) : RealVector(-f);
    double scale = 1.0;
    bool improved = false;
    while (scale >= 1.0 / 1024.0) {
      const RealVector trial = fp.h + scale * step;
      const RealVector ft = fixed_point_residual(p, trial);
      const double rt = ft.lpNorm<Eigen::Infinity>();
      if (std::isfinite(rt) && rt < fp.residual) {
        fp.h = trial;
        f = ft;
        fp.residual = rt;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) {
      throw NumericalError("find_fixed_point: line search stalled, best residual " + std::to_string(fp.residual));
    }
  }
  return fp;
}

LinearizedRnn linearize(const RnnParams& p, const RealVector& h_star) {
  validate(p);
  if (h_star.size() != p.hidden()) throw InvalidArgument("linearize: fixed point has wrong size");
  LinearizedRnn lin;
  lin.fixed_point = h_star;
  lin.jacobian_diag = act_derivative(p.activation, p.w_hh * h_star + p.bias);
  lin.a = lin.jacobian_diag.asDiagonal() * p.w_hh;
  lin.b_in = lin.jacobian_diag.asDiagonal() * p.w_uh;
  return lin;
}

VariableMemoryBasis make_basis(const RealMatrix& psi, int s, int d) {
  if (s < 1 || d < 1 || psi.cols() != s * d) throw InvalidArgument("make_basis: psi must have s*d columns");
  VariableMemoryBasis b;
  b.s = s;
  b.d = d;
  b.psi = psi;
  b.dual = pinv(psi);
  b.complement = RealMatrix(psi.rows(), 0);
  b.condition = condition_number(psi);
  b.well_conditioned = b.condition <= 1e8;
  return b;
}

VariableMemoryBasis compute_variable_memories(const RnnParams& p, const MemoryOptions& opts,
                                              const LinearizedRnn* lin_in) {
  validate(p);
  if (opts.s < 1) throw InvalidArgument("compute_variable_memories: s must be >= 1");
  if (!(opts.alpha >= 0.0 && opts.alpha <= 1.0)) {
    throw InvalidArgument("compute_variable_memories: alpha must lie in [0, 1]");
  }
  if (opts.probe_episodes < 0) throw InvalidArgument("compute_variable_memories: negative probe count");
  LinearizedRnn lin;
  if (lin_in != nullptr) {
    lin = *lin_in;
  } else {
    const RealVector origin = RealVector::Zero(p.hidden());
    lin = linearize(p, find_fixed_point(p, origin).h);
  }
  const int s = opts.s;
  const int d = static_cast<int>(p.dim());
  const auto n = p.hidden();
  const RealMatrix& w = lin.a;
  const RealMatrix readout_dual = pinv(p.w_r);

  // fwd = W^(s-k); the transpose form uses (W^T)^k on the readout dual.
  std::vector<RealMatrix> blocks(static_cast<std::size_t>(s));
  RealMatrix fwd = RealMatrix::Identity(n, n);
  for (int k = s; k >= 1; --k) {
    RealMatrix readout_part;
    if (opts.propagation == Propagation::forward) {
      readout_part = fwd * readout_dual;
    } else {
      RealMatrix tp = RealMatrix::Identity(n, n);
      for (int i = 0; i < k; ++i) tp = w.transpose() * tp;
      readout_part = tp * readout_dual;
    }
    blocks[static_cast<std::size_t>(k - 1)] = opts.alpha * (fwd * lin.b_in) + (1.0 - opts.alpha) * readout_part;
    fwd = w * fwd;
  }

  VariableMemoryBasis b;
  b.s = s;
  b.d = d;
  b.alpha = opts.alpha;
  b.transient_threshold = opts.transient_threshold;
  const auto projector = transient_projector(w, opts.transient_threshold);
  b.transients_removed = projector.has_value();
  b.psi.resize(n, s * d);
  for (int k = 1; k <= s; ++k) {
    RealMatrix blk = blocks[static_cast<std::size_t>(k - 1)];
    if (projector) blk -= *projector * blk;
    b.psi.middleCols((k - 1) * d, d) = blk;
  }
  b.dual = pinv(b.psi);
  b.condition = condition_number(b.psi);
  b.well_conditioned = b.transients_removed && b.condition <= 1e8;

  // Complement from probe residuals of the full nonlinear network.
  const int horizon = opts.probe_horizon < 0 ? 2 * s : opts.probe_horizon;
  const TaskSpec probe = make_repeat_copy(s, d);
  Rng rng(opts.probe_seed);
  std::vector<RealVector> residuals;
  double hidden_scale = 0.0;
  double residual_scale = 0.0;
  const RealMatrix keep = b.psi * b.dual;
  for (int e = 0; e < opts.probe_episodes; ++e) {
    const Trajectory traj = forward(p, sample_inputs(probe, rng), horizon);
    for (Eigen::Index t = 0; t < traj.hidden.rows(); ++t) {
      const RealVector h = traj.hidden.row(t).transpose();
      RealVector r = h - keep * h;
      hidden_scale = std::max(hidden_scale, h.lpNorm<Eigen::Infinity>());
      residual_scale = std::max(residual_scale, r.lpNorm<Eigen::Infinity>());
      residuals.push_back(std::move(r));
    }
  }
  if (residuals.empty() || residual_scale <= 1e-10 * std::max(1.0, hidden_scale)) {
    b.complement = RealMatrix(n, 0);
  } else {
    b.complement = pca(residuals, opts.var_threshold);
  }
  return b;
}

Interaction extract_interaction(const VariableMemoryBasis& basis, const RealMatrix& w_hh) {
  if (w_hh.rows() != basis.psi.rows() || w_hh.cols() != basis.psi.rows()) {
    throw InvalidArgument("extract_interaction: W_hh does not match the basis");
  }
  Interaction out;
  out.phi_learned = basis.dual * w_hh * basis.psi;
  out.cross_in = basis.dual * w_hh * basis.complement;
  out.cross_out = basis.complement.transpose() * w_hh * basis.psi;
  const double total = w_hh.norm();
  out.off_circuit_ratio = total > 0.0 ? (w_hh - basis.psi * out.phi_learned * basis.dual).norm() / total : 0.0;
  return out;
}

SpectrumReport spectrum_mae(const RealMatrix& phi, const RealMatrix& w, double magnitude_threshold) {
  if (phi.rows() != phi.cols() || w.rows() != w.cols()) throw InvalidArgument("spectrum_mae: matrices must be square");
  SpectrumReport r;
  r.magnitude_threshold = magnitude_threshold;
  const double zero_cut = 1e-8 * std::max(1.0, operator_norm(phi));
  for (const auto& z : eig_general(phi).eigenvalues) {
    if (std::abs(z) > zero_cut) r.theoretical_args.push_back(argument(z));
  }
  for (const auto& z : eig_general(w).eigenvalues) {
    if (std::abs(z) >= magnitude_threshold) {
      r.learned_args.push_back(argument(z));
      r.learned_magnitudes.push_back(std::abs(z));
    }
  }
  // Sort magnitudes alongside arguments.
  std::vector<std::size_t> order(r.learned_args.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return r.learned_args[a] < r.learned_args[b]; });
  std::vector<double> args, mags;
  for (auto i : order) {
    args.push_back(r.learned_args[i]);
    mags.push_back(r.learned_magnitudes[i]);
  }
  r.learned_args = std::move(args);
  r.learned_magnitudes = std::move(mags);
  std::sort(r.theoretical_args.begin(), r.theoretical_args.end());

  for (double a : r.theoretical_args) {
    const bool known = std::any_of(r.centers.begin(), r.centers.end(),
                                   [&](double c) { return circular_distance(a, c) <= 1e-6; });
    if (!known) r.centers.push_back(a);
  }
  const auto nearest = [&](double a) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < r.centers.size(); ++c) {
      if (circular_distance(a, r.centers[c]) < circular_distance(a, r.centers[best])) best = c;
    }
    return best;
  };
  r.theoretical_counts.assign(r.centers.size(), 0);
  r.learned_counts.assign(r.centers.size(), 0);
  if (!r.centers.empty()) {
    for (double a : r.theoretical_args) ++r.theoretical_counts[nearest(a)];
    for (double a : r.learned_args) ++r.learned_counts[nearest(a)];
  }

  const std::size_t n = r.theoretical_args.size();
  if (n != r.learned_args.size()) return r;
  if (n == 0) {
    r.mae = 0.0;
    return r;
  }
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_shift = 0;
  for (std::size_t shift = 0; shift < n; ++shift) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += circular_distance(r.theoretical_args[i], r.learned_args[(i + shift) % n]);
    }
    if (sum < best) {
      best = sum;
      best_shift = shift;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    r.pairs.emplace_back(r.theoretical_args[i], r.learned_args[(i + best_shift) % n]);
  }
  r.mae = best / static_cast<double>(n);
  return r;
}

nlohmann::json spectrum_to_json(const SpectrumReport& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [t, l] : r.pairs) pairs.push_back({t, l});
  nlohmann::json j = {
      {"magnitude_threshold", r.magnitude_threshold},
      {"theoretical_args", r.theoretical_args},
      {"learned_args", r.learned_args},
      {"learned_magnitudes", r.learned_magnitudes},
      {"matched_pairs", pairs},
      {"pairing", r.pairing},
      {"cluster_centers", r.centers},
      {"theoretical_counts", r.theoretical_counts},
      {"learned_counts", r.learned_counts},
  };
  if (r.mae) {
    j["mae"] = *r.mae;
    j["indeterminate"] = false;
  } else {
    j["mae"] = nullptr;
    j["indeterminate"] = true;
  }
  return j;
}

RealMatrix project_hidden(const VariableMemoryBasis& basis, const RealMatrix& hidden, bool normalize) {
  if (hidden.cols() != basis.psi.rows()) throw InvalidArgument("project_hidden: hidden width does not match basis");
  RealMatrix act = basis.dual * hidden.transpose();
  if (!normalize) return act;
  // Deviations at rounding level count as zero.
  const double floor = 1e-12 * std::max(1.0, act.size() ? act.cwiseAbs().maxCoeff() : 0.0);
  for (int k = 0; k < basis.s; ++k) {
    auto blk = act.middleRows(static_cast<Eigen::Index>(k) * basis.d, basis.d);
    if (blk.size() == 0) continue;
    const double mean = blk.mean();
    const double sd = std::sqrt((blk.array() - mean).square().mean());
    if (sd > floor) blk /= sd;
  }
  return act;
}

ClusterReport eig_cluster_report(const RealMatrix& w, int s, double magnitude_threshold, double angle_tolerance) {
  if (s < 1) throw InvalidArgument("eig_cluster_report: s must be >= 1");
  if (w.rows() != w.cols()) throw InvalidArgument("eig_cluster_report: matrix must be square");
  ClusterReport r;
  r.s = s;
  r.magnitude_threshold = magnitude_threshold;
  r.angle_tolerance = angle_tolerance;
  r.counts.assign(static_cast<std::size_t>(s), 0);
  for (const auto& z : eig_general(w).eigenvalues) {
    if (std::abs(z) < magnitude_threshold) continue;
    ++r.near_circle;
    const double a = argument(z);
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int k = 0; k < s; ++k) {
      const double dist = circular_distance(a, 2.0 * std::numbers::pi * k / s);
      if (dist < best_dist) {
        best_dist = dist;
        best = k;
      }
    }
    if (best_dist <= angle_tolerance) {
      ++r.counts[static_cast<std::size_t>(best)];
    } else {
      ++r.unclustered;
    }
  }
  return r;
}

nlohmann::json clusters_to_json(const ClusterReport& r) {
  return {{"s", r.s},
          {"magnitude_threshold", r.magnitude_threshold},
          {"angle_tolerance", r.angle_tolerance},
          {"near_circle", r.near_circle},
          {"counts", r.counts},
          {"unclustered", r.unclustered}};
}

}  // namespace emt
