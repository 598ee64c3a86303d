// Copyright 2026 The HPGT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hpgt/solver.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "hpgt/errors.hpp"
#include "hpgt/parallel.hpp"

namespace hpgt {

namespace {

using Mat6x24 = Eigen::Matrix<double, 6, 24>;

std::string describe(const Problem& p, const Block& b) {
  std::ostringstream os;
  switch (b.kind) {
    case BlockKind::kMocap: os << "mocap[" << b.index << "] tau=" << p.data.mocap[b.index].tau; break;
    case BlockKind::kImu: os << "imu[" << b.index << "] tau=" << p.data.imu[b.index].tau; break;
    case BlockKind::kDut:
      os << "dut_pair[" << b.index << "] (" << p.pairs[b.index].i << "," << p.pairs[b.index].j << ")";
      break;
    case BlockKind::kBiasW: os << "gyro_bias_interval[" << b.index << "]"; break;
    case BlockKind::kBiasA: os << "accel_bias_interval[" << b.index << "]"; break;
  }
  return os.str();
}

int workers_for(const Problem& p) { return p.opt.threads > 0 ? p.opt.threads : worker_count(); }

// Normal equations split into the banded knot part, the knot/extra border
// and the dense extra part.
struct Normal {
  int K = 0, E = 0;
  std::vector<Mat6> band;  // band[4 * k + d] = H(knot k, knot k + d)
  MatX border;             // E x 6K
  MatX dense;              // E x E
  VecX g;                  // J^T r
  double cost = 0.0;

  void reset(int k, int e) {
    K = k;
    E = e;
    band.assign(std::size_t(4 * K), Mat6::Zero());
    border.setZero(E, 6 * K);
    dense.setZero(E, E);
    g.setZero(6 * K + E);
    cost = 0.0;
  }

  void add(const BlockJacobian& J) {
    const int rows = J.rows;
    const auto r = J.r.head(rows);
    cost += 0.5 * r.squaredNorm();
    if (J.first_knot >= 0) {
      const auto Jk = J.Jk.topRows(rows);
      const Eigen::Matrix<double, 24, 24> H = Jk.transpose() * Jk;
      const Eigen::Matrix<double, 24, 1> gk = Jk.transpose() * r;
      const int f = J.first_knot;
      g.segment<24>(6 * f) += gk;
      for (int a = 0; a < 4; ++a) {
        for (int b = a; b < 4; ++b) band[std::size_t(4 * (f + a) + (b - a))] += H.block<6, 6>(6 * a, 6 * b);
      }
      for (int c = 0; c < J.n_extra; ++c) {
        border.block<1, 24>(J.cols[c], 6 * f) += J.Je.col(c).head(rows).transpose() * Jk;
      }
    }
    for (int c = 0; c < J.n_extra; ++c) {
      const auto jc = J.Je.col(c).head(rows);
      g[6 * K + J.cols[c]] += jc.dot(r);
      for (int d = 0; d < J.n_extra; ++d) {
        dense(J.cols[c], J.cols[d]) += jc.dot(J.Je.col(d).head(rows));
      }
    }
  }

  void merge(const Normal& o) {
    for (std::size_t i = 0; i < band.size(); ++i) band[i] += o.band[i];
    border += o.border;
    dense += o.dense;
    g += o.g;
    cost += o.cost;
  }

  double diag(int i) const {
    if (i < 6 * K) return band[std::size_t(4 * (i / 6))](i % 6, i % 6);
    return dense(i - 6 * K, i - 6 * K);
  }
};

void check_finite(const Problem& p, const Block& b, const BlockJacobian& J, bool jac) {
  bool ok = J.r.allFinite();
  if (ok && jac) ok = J.Jk.allFinite() && J.Je.leftCols(J.n_extra).allFinite();
  if (!ok) throw Error(ErrorCode::kNumericalFailure, "non-finite residual or Jacobian in " + describe(p, b));
}

void linearize(const Problem& p, const State& s, const ParamLayout& L, Normal& out) {
  const int workers = std::max(1, std::min<int>(workers_for(p), int(p.blocks.size())));
  std::vector<Normal> parts(static_cast<std::size_t>(workers));
  for (auto& n : parts) n.reset(L.knots, L.extras);
  parallel_for(p.blocks.size(), workers, [&](std::size_t begin, std::size_t end, int w) {
    BlockJacobian J;
    Normal& acc = parts[std::size_t(w)];
    for (std::size_t i = begin; i < end; ++i) {
      evaluate_block(p, s, L, p.blocks[i], true, J);
      check_finite(p, p.blocks[i], J, true);
      acc.add(J);
    }
  });
  out = std::move(parts[0]);
  for (std::size_t i = 1; i < parts.size(); ++i) out.merge(parts[i]);
}

// Upper triangle of (H + lambda * (diag(H) + eps)) in compressed column form.
Eigen::SparseMatrix<double> assemble(const Normal& n, double lambda) {
  const int K = n.K, E = n.E, N = 6 * K + E;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(std::size_t(K) * (21 + 3 * 36) + std::size_t(E) * (6 * K) + std::size_t(E) * (E + 1) / 2);
  for (int k = 0; k < K; ++k) {
    for (int d = 0; d < 4 && k + d < K; ++d) {
      const Mat6& B = n.band[std::size_t(4 * k + d)];
      for (int c = 0; c < 6; ++c) {
        for (int r = 0; r < 6; ++r) {
          if (d == 0 && r > c) continue;
          t.emplace_back(6 * k + r, 6 * (k + d) + c, B(r, c));
        }
      }
    }
  }
  for (int e = 0; e < E; ++e) {
    for (int i = 0; i < 6 * K; ++i) {
      if (n.border(e, i) != 0.0) t.emplace_back(i, 6 * K + e, n.border(e, i));
    }
    for (int f = 0; f <= e; ++f) t.emplace_back(6 * K + f, 6 * K + e, n.dense(f, e));
  }
  for (int i = 0; i < N; ++i) t.emplace_back(i, i, lambda * (n.diag(i) + 1e-9));
  Eigen::SparseMatrix<double> H(N, N);
  H.setFromTriplets(t.begin(), t.end());
  return H;
}

double cost_only(const Problem& p, const State& s, const ParamLayout& L, ClassRms* rms) {
  const int workers = std::max(1, std::min<int>(workers_for(p), int(p.blocks.size())));
  std::vector<std::array<double, 5>> sums(static_cast<std::size_t>(workers));
  parallel_for(p.blocks.size(), workers, [&](std::size_t begin, std::size_t end, int w) {
    BlockJacobian J;
    auto& acc = sums[std::size_t(w)];
    for (std::size_t i = begin; i < end; ++i) {
      const Block& b = p.blocks[i];
      evaluate_block(p, s, L, b, false, J);
      check_finite(p, b, J, false);
      switch (b.kind) {
        case BlockKind::kMocap: acc[0] += J.r.squaredNorm(); break;
        case BlockKind::kImu:
          acc[1] += J.r.head<3>().squaredNorm();
          acc[2] += J.r.tail<3>().squaredNorm();
          break;
        case BlockKind::kDut: acc[3] += J.r.squaredNorm(); break;
        default: acc[4] += J.r.head<3>().squaredNorm(); break;
      }
    }
  });
  std::array<double, 5> tot{};
  for (const auto& a : sums) {
    for (int i = 0; i < 5; ++i) tot[i] += a[i];
  }
  if (rms) {
    auto f = [](double sum, std::size_t n) { return n ? std::sqrt(sum / double(n)) : 0.0; };
    rms->mocap = f(tot[0], 6 * p.n_mocap);
    rms->gyro = f(tot[1], 3 * p.n_imu);
    rms->accel = f(tot[2], 3 * p.n_imu);
    rms->dut = f(tot[3], 6 * p.pairs.size());
    rms->bias = f(tot[4], 3 * p.n_bias);
  }
  return 0.5 * (tot[0] + tot[1] + tot[2] + tot[3] + tot[4]);
}

struct StageResult {
  int iterations = 0;
  std::string termination;
};

StageResult run_stage(const Problem& p, State& s, const ParamLayout& L) {
  const EstimatorOptions& o = p.opt;
  StageResult res;
  Normal n;
  linearize(p, s, L, n);
  double lambda = o.lambda0;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Upper, Eigen::NaturalOrdering<int>> ldlt;
  bool analyzed = false;
  res.termination = "max_iterations";
  while (res.iterations < o.max_iterations) {
    if (n.cost <= o.cost_floor) {
      res.termination = "cost_floor";
      break;
    }
    if (n.g.lpNorm<Eigen::Infinity>() < o.grad_tol) {
      res.termination = "gradient";
      break;
    }
    const Eigen::SparseMatrix<double> H = assemble(n, lambda);
    if (!analyzed) {
      ldlt.analyzePattern(H);
      analyzed = true;
    }
    ldlt.factorize(H);
    bool accepted = false;
    if (ldlt.info() == Eigen::Success) {
      const VecX dx = ldlt.solve(-n.g);
      if (dx.allFinite()) {
        State cand = retract(s, L, dx);
        double c = 0.0;
        bool in_domain = true;
        try {
          c = cost_only(p, cand, L, nullptr);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kOutOfDomain) throw;
          in_domain = false;
        }
        const bool flat = in_domain && std::abs(n.cost - c) <= o.rel_decrease_tol * n.cost;
        if (flat && c >= n.cost) {
          ++res.iterations;
          res.termination = "relative_decrease";
          break;
        }
        if (in_domain && c < n.cost) {
          const double rel = (n.cost - c) / n.cost;
          s = std::move(cand);
          ++res.iterations;
          accepted = true;
          lambda = std::max(lambda * 0.3, 1e-12);
          if (rel < o.rel_decrease_tol) {
            res.termination = "relative_decrease";
            break;
          }
          linearize(p, s, L, n);
        }
      }
    }
    if (!accepted) {
      lambda *= 3.0;
      ++res.iterations;
      if (lambda > 1e12) {
        res.termination = "damping_limit";
        break;
      }
    }
  }
  return res;
}

}  // namespace

double total_cost(const Problem& p, const State& s, ClassRms* rms) {
  const ParamLayout L = make_layout(s, false, p.opt.fixed_offsets, p.opt.estimate_tilt);
  return cost_only(p, s, L, rms);
}

SolveResult solve(Problem& p, const State& seed) {
  if (p.blocks.empty()) throw Error(ErrorCode::kEmptyProblem, "no residual blocks");
  SolveResult out;
  out.state = seed;
  SolveReport& rep = out.report;
  update_dut_weights(p, out.state);
  rep.initial_cost = total_cost(p, out.state);
  std::vector<bool> stages;
  if (p.opt.two_stage) stages.push_back(false);
  stages.push_back(true);
  for (std::size_t k = 0; k < stages.size(); ++k) {
    if (k > 0) update_dut_weights(p, out.state);
    const ParamLayout L = make_layout(out.state, stages[k], p.opt.fixed_offsets, p.opt.estimate_tilt);
    StageResult r;
    try {
      r = run_stage(p, out.state, L);
    } catch (const Error& e) {
      throw Error(e.code(), std::string("stage ") + std::to_string(k + 1) + ": " + e.what());
    }
    rep.iterations += r.iterations;
    rep.termination = r.termination;
    ++rep.stages;
  }
  rep.final_cost = total_cost(p, out.state, &rep.rms);
  rep.dut_pairs = p.pairs.size();
  for (const DutPair& pr : p.pairs) rep.degenerate_pairs += pr.degenerate ? 1 : 0;
  if (rep.termination == "max_iterations") rep.warnings.push_back("iteration limit reached");
  if (rep.termination == "damping_limit") rep.warnings.push_back("damping limit reached");
  if (p.pairs.size() > 0 && rep.degenerate_pairs * 2 > p.pairs.size()) {
    rep.warnings.push_back("most DUT pairs have degenerate screw motion");
  }
  return out;
}

FdCheckReport fd_check(const Problem& p, const State& s, bool intrinsics_free, int max_per_class,
                       double step) {
  const ParamLayout L = make_layout(s, intrinsics_free, p.opt.fixed_offsets, p.opt.estimate_tilt);
  FdCheckReport rep;
  std::array<int, 5> seen{};
  const int N = L.total();
  BlockJacobian J, Jp, Jm;
  VecX delta = VecX::Zero(N);
  for (const Block& b : p.blocks) {
    int& count = seen[std::size_t(b.kind)];
    if (count >= max_per_class) continue;
    ++count;
    evaluate_block(p, s, L, b, true, J);
    std::vector<std::pair<int, Vec6>> cols;
    if (J.first_knot >= 0) {
      for (int c = 0; c < 24; ++c) cols.emplace_back(6 * J.first_knot + c, J.Jk.col(c));
    }
    for (int c = 0; c < J.n_extra; ++c) cols.emplace_back(6 * L.knots + J.cols[c], J.Je.col(c));
    double scale = 1e-6;
    for (const auto& [col, a] : cols) scale = std::max(scale, a.head(J.rows).lpNorm<Eigen::Infinity>());
    for (const auto& [col, a] : cols) {
      delta.setZero();
      delta[col] = step;
      evaluate_block(p, retract(s, L, delta), L, b, false, Jp);
      delta[col] = -step;
      evaluate_block(p, retract(s, L, delta), L, b, false, Jm);
      const Vec6 num = (Jp.r - Jm.r) / (2.0 * step);
      const double err = (num - a).head(J.rows).lpNorm<Eigen::Infinity>() / scale;
      if (err > rep.max_rel_error) {
        rep.max_rel_error = err;
        rep.worst = describe(p, b) + " column " + std::to_string(col);
      }
    }
    ++rep.blocks;
  }
  return rep;
}

Trajectory extract_trajectory(const State& s, double rate_hz, OutputFrame frame) {
  if (!(rate_hz > 0.0)) throw Error(ErrorCode::kBadConfig, "output rate must be positive");
  const CalibState& c = s.calib;
  const Mat3 R_PW = c.T_W_P.R().transpose();
  const Mat3 R_CP = align_to_down(R_PW * c.g_W());
  const Pose T_CW(Rotation::unchecked(R_CP * R_PW), -R_CP * R_PW * c.T_W_P.p());
  const SplineBundle& sp = s.splines;
  Trajectory out;
  double lo, hi;
  if (frame == OutputFrame::kDut) {
    lo = sp.off_D.inner().t_begin();
    hi = sp.off_D.inner().t_end();
  } else {
    lo = sp.rot.t_begin();
    hi = sp.rot.t_end();
  }
  const long k0 = long(std::ceil(lo * rate_hz - 1e-9));
  const long k1 = long(std::floor(hi * rate_hz + 1e-9));
  for (long k = k0; k <= k1; ++k) {
    const double tau = double(k) / rate_hz;
    const double t = frame == OutputFrame::kDut ? map_time(sp.off_D, tau) : tau;
    if (!sp.rot.contains(t)) {
      ++out.trimmed;
      continue;
    }
    Pose T = body_pose(sp, t);
    if (frame == OutputFrame::kDut) T = T * c.T_B_D;
    out.poses.push_back({tau, T_CW * T});
  }
  return out;
}

}  // namespace hpgt
