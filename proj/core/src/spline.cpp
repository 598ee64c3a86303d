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

#include "hpgt/spline.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <string>

namespace hpgt {

namespace {

double binom(int n, int r) {
  if (r < 0 || r > n) return 0.0;
  double out = 1.0;
  for (int i = 1; i <= r; ++i) out = out * (n - r + i) / i;
  return out;
}

double factorial(int n) {
  double out = 1.0;
  for (int i = 2; i <= n; ++i) out *= i;
  return out;
}

MatX make_blending(int k) {
  MatX m = MatX::Zero(k, k);
  for (int s = 0; s < k; ++s) {
    for (int n = 0; n < k; ++n) {
      double acc = 0.0;
      for (int l = s; l < k; ++l) {
        const double sign = ((l - s) % 2 == 0) ? 1.0 : -1.0;
        acc += sign * binom(k, l - s) * std::pow(double(k - 1 - l), k - 1 - n);
      }
      m(s, n) = binom(k - 1, n) / factorial(k - 1) * acc;
    }
  }
  MatX cum = MatX::Zero(k, k);
  for (int j = 0; j < k; ++j) {
    for (int s = j; s < k; ++s) cum.row(j) += m.row(s);
  }
  return cum;
}

const MatX& cached_blending(int k) {
  static const MatX m2 = make_blending(2);
  static const MatX m3 = make_blending(3);
  static const MatX m4 = make_blending(4);
  switch (k) {
    case 2: return m2;
    case 3: return m3;
    case 4: return m4;
    default: throw Error(ErrorCode::kUnsupportedOrder, "order " + std::to_string(k));
  }
}

}  // namespace

bool KnotGrid::contains(double t, int order) const {
  return t >= t0 - 1e-9 && t <= t_end(order) + 1e-9;
}

KnotGrid KnotGrid::covering(double t_begin, double t_end, double dt, int order) {
  if (!(dt > 0.0) || !(t_end >= t_begin)) {
    throw Error(ErrorCode::kOutOfDomain, "bad grid request");
  }
  const int segs = std::max(1, int(std::ceil((t_end - t_begin) / dt - 1e-9)));
  return KnotGrid{t_begin, dt, segs + order - 1};
}

KnotGrid KnotGrid::anchored_inside(double t_begin, double t_end, double dt, int order) {
  if (!(dt > 0.0) || !(t_end >= t_begin)) {
    throw Error(ErrorCode::kOutOfDomain, "bad grid request");
  }
  const double t0 = std::ceil(t_begin / dt - 1e-9) * dt;
  const int segs = int(std::floor((t_end - t0) / dt + 1e-9));
  if (segs < 1) throw Error(ErrorCode::kOutOfDomain, "interval shorter than one knot spacing");
  return KnotGrid{t0, dt, segs + order - 1};
}

MatX blending_matrix(int k) { return cached_blending(k); }

BasisEval eval_basis(const KnotGrid& grid, int order, double t) {
  const MatX& M = cached_blending(order);
  const int segs = grid.segments(order);
  if (segs < 1 || !grid.contains(t, order)) {
    throw Error(ErrorCode::kOutOfDomain, "t=" + std::to_string(t));
  }
  const double x = (t - grid.t0) / grid.dt;
  int s = std::clamp(int(std::floor(x)), 0, segs - 1);
  BasisEval be;
  be.first = s;
  be.order = order;
  be.u = std::clamp(x - s, 0.0, 1.0);

  // rows: derivative order, entries: d^r/dt^r u^n
  double U[4][4] = {};
  const double u = be.u;
  const double inv = 1.0 / grid.dt;
  double p[4] = {1.0, u, u * u, u * u * u};
  for (int n = 0; n < order; ++n) {
    U[0][n] = p[n];
    if (n >= 1) U[1][n] = n * p[n - 1] * inv;
    if (n >= 2) U[2][n] = n * (n - 1) * p[n - 2] * inv * inv;
    if (n >= 3) U[3][n] = n * (n - 1) * (n - 2) * p[n - 3] * inv * inv * inv;
  }
  for (int d = 0; d < 4; ++d) {
    for (int j = 0; j < order; ++j) {
      double acc = 0.0;
      for (int n = 0; n < order; ++n) acc += M(j, n) * U[d][n];
      be.cb[d][j] = acc;
    }
    for (int j = 0; j < order; ++j) {
      be.b[d][j] = be.cb[d][j] - (j + 1 < order ? be.cb[d][j + 1] : 0.0);
    }
  }
  return be;
}

Rotation So3Spline::eval(double t) const {
  const BasisEval be = eval_basis(grid_, kOrder, t);
  Mat3 R = cps_[be.first];
  for (int j = 1; j < kOrder; ++j) {
    const Vec3 d = so3_log_mat(cps_[be.first + j - 1].transpose() * cps_[be.first + j]);
    R = R * so3_exp_mat(be.cb[0][j] * d);
  }
  return Rotation::unchecked(R);
}

So3Eval So3Spline::kinematics(double t, bool with_jac) const {
  return kinematics(eval_basis(grid_, kOrder, t), with_jac);
}

So3Eval So3Spline::kinematics(const BasisEval& be, bool with_jac) const {
  So3Eval out;
  const int i = be.first;
  out.first = i;
  Vec3 d[4];
  Mat3 rel[4], A[4];
  Vec3 y[4], z[4];
  Mat3 R = cps_[i];
  Vec3 w = Vec3::Zero(), dw = Vec3::Zero(), ddw = Vec3::Zero();
  for (int j = 1; j < kOrder; ++j) {
    rel[j] = cps_[i + j - 1].transpose() * cps_[i + j];
    d[j] = so3_log_mat(rel[j]);
    const double lam = be.cb[0][j], dl = be.cb[1][j], ddl = be.cb[2][j], dddl = be.cb[3][j];
    A[j] = so3_exp_mat(lam * d[j]);
    const Mat3 At = A[j].transpose();
    y[j] = At * w;
    z[j] = At * dw;
    const Vec3 dy = d[j].cross(y[j]);
    ddw = At * ddw - 2.0 * dl * d[j].cross(z[j]) - ddl * dy + dl * dl * d[j].cross(dy) + dddl * d[j];
    dw = z[j] - dl * dy + ddl * d[j];
    w = y[j] + dl * d[j];
    R = R * A[j];
  }
  out.R = R;
  out.w = w;
  out.dw = dw;
  out.ddw = ddw;
  if (!with_jac) return out;

  out.has_jac = true;
  for (int c = 0; c < 4; ++c) {
    out.J_R[c].setZero();
    out.J_w[c].setZero();
    out.J_dw[c].setZero();
  }
  out.J_R[0] = (A[1] * A[2] * A[3]).transpose();
  for (int m = 1; m < kOrder; ++m) {
    const double lam = be.cb[0][m], dl = be.cb[1][m], ddl = be.cb[2][m];
    const Mat3 G = lam * right_jacobian(lam * d[m]);
    const Mat3 Y = skew(y[m]);
    Mat3 Om = Y * G + dl * Mat3::Identity();
    Mat3 dOm = skew(z[m]) * G + dl * Y - dl * skew(d[m]) * Y * G + ddl * Mat3::Identity();
    Mat3 P = Mat3::Identity();
    for (int j = m + 1; j < kOrder; ++j) {
      const Mat3 At = A[j].transpose();
      const Mat3 AtOm = At * Om;
      dOm = At * dOm - be.cb[1][j] * skew(d[j]) * AtOm;
      Om = AtOm;
      P = P * A[j];
    }
    const Mat3 ER = P.transpose() * G;
    const Mat3 Jinv = right_jacobian_inv(d[m]);
    const Mat3 Jprev = -Jinv * rel[m].transpose();
    out.J_R[m] += ER * Jinv;
    out.J_R[m - 1] += ER * Jprev;
    out.J_w[m] += Om * Jinv;
    out.J_w[m - 1] += Om * Jprev;
    out.J_dw[m] += dOm * Jinv;
    out.J_dw[m - 1] += dOm * Jprev;
  }
  return out;
}

BodyRates so3_body_rates(const So3Spline& s, double t) {
  const So3Eval e = s.kinematics(t, false);
  const Mat3 W = skew(e.w);
  return {e.w, e.R * W, e.R * (W * W + skew(e.dw))};
}

double map_time(const TimeOffsetSpline& off, double tau) { return tau + off.offset(tau); }

double TimeOffsetSpline::unmap_time(double t) const {
  const double lo = inner_.t_begin(), hi = inner_.t_end();
  double tau = t;
  for (int it = 0; it < 50; ++it) {
    const double next = t - inner_.eval(std::clamp(tau, lo, hi))[0];
    const bool done = std::abs(next - tau) < 1e-13;
    tau = next;
    if (done) break;
  }
  if (!inner_.contains(tau)) {
    throw Error(ErrorCode::kOutOfDomain, "unmap_time t=" + std::to_string(t));
  }
  return tau;
}

namespace {

void check_coverage(const std::vector<double>& t, const KnotGrid& grid, int order) {
  const int segs = grid.segments(order);
  if (segs < 1) throw Error(ErrorCode::kInsufficientCoverage, "empty grid");
  std::vector<int> hits(segs, 0);
  for (double ti : t) {
    if (!grid.contains(ti, order)) continue;
    hits[eval_basis(grid, order, ti).first]++;
  }
  for (int s = 0; s < segs; ++s) {
    if (hits[s] == 0) {
      throw Error(ErrorCode::kInsufficientCoverage,
                  "no samples in segment " + std::to_string(s) + " starting at t=" +
                      std::to_string(grid.t0 + s * grid.dt));
    }
  }
}

}  // namespace

template <int N>
EuclidSpline<N> fit_spline(const std::vector<double>& t,
                           const std::vector<Eigen::Matrix<double, N, 1>>& v,
                           const KnotGrid& grid, int order) {
  EuclidSpline<N> out(grid, order);
  check_coverage(t, grid, order);
  const int K = grid.count;
  std::vector<Eigen::Triplet<double>> trip;
  MatX rhs = MatX::Zero(K, N);
  for (std::size_t s = 0; s < t.size(); ++s) {
    if (!grid.contains(t[s], order)) continue;
    const BasisEval be = eval_basis(grid, order, t[s]);
    for (int a = 0; a < order; ++a) {
      rhs.row(be.first + a) += be.b[0][a] * v[s].transpose();
      for (int b = 0; b < order; ++b) {
        trip.emplace_back(be.first + a, be.first + b, be.b[0][a] * be.b[0][b]);
      }
    }
  }
  Eigen::SparseMatrix<double> H(K, K);
  H.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(H);
  if (ldlt.info() != Eigen::Success) {
    throw Error(ErrorCode::kInsufficientCoverage, "singular spline fit");
  }
  const MatX x = ldlt.solve(rhs);
  if (!x.allFinite() || (ldlt.vectorD().array() <= 1e-14 * H.diagonal().maxCoeff()).any()) {
    throw Error(ErrorCode::kInsufficientCoverage, "singular spline fit");
  }
  for (int k = 0; k < K; ++k) out.cps()[k] = x.row(k).transpose();
  return out;
}

template EuclidSpline<1> fit_spline<1>(const std::vector<double>&,
                                       const std::vector<Eigen::Matrix<double, 1, 1>>&,
                                       const KnotGrid&, int);
template EuclidSpline<3> fit_spline<3>(const std::vector<double>&, const std::vector<Vec3>&,
                                       const KnotGrid&, int);

So3Spline fit_spline(const std::vector<double>& t, const std::vector<Mat3>& R,
                     const KnotGrid& grid, int sweeps) {
  constexpr int k = So3Spline::kOrder;
  check_coverage(t, grid, k);
  So3Spline out(grid);
  const int K = grid.count;
  for (int m = 0; m < K; ++m) {
    const double tc = grid.t0 + (m - 1) * grid.dt;
    auto it = std::lower_bound(t.begin(), t.end(), tc);
    std::size_t idx = std::size_t(it - t.begin());
    if (idx >= t.size()) idx = t.size() - 1;
    if (idx > 0 && std::abs(t[idx - 1] - tc) < std::abs(t[idx] - tc)) --idx;
    out.cps()[m] = R[idx];
  }

  for (int sweep = 0; sweep < sweeps; ++sweep) {
    std::vector<Eigen::Triplet<double>> trip;
    VecX g = VecX::Zero(3 * K);
    double cost = 0.0;
    for (std::size_t s = 0; s < t.size(); ++s) {
      if (!grid.contains(t[s], k)) continue;
      const So3Eval e = out.kinematics(t[s], true);
      const Vec3 r = so3_log_mat(R[s].transpose() * e.R);
      cost += r.squaredNorm();
      const Mat3 Jl = right_jacobian_inv(r);
      Mat3 J[4];
      for (int c = 0; c < 4; ++c) J[c] = Jl * e.J_R[c];
      for (int a = 0; a < 4; ++a) {
        g.segment<3>(3 * (e.first + a)) += J[a].transpose() * r;
        for (int b = 0; b < 4; ++b) {
          const Mat3 blk = J[a].transpose() * J[b];
          for (int p = 0; p < 3; ++p) {
            for (int q = 0; q < 3; ++q) {
              trip.emplace_back(3 * (e.first + a) + p, 3 * (e.first + b) + q, blk(p, q));
            }
          }
        }
      }
    }
    Eigen::SparseMatrix<double> H(3 * K, 3 * K);
    H.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(H);
    if (ldlt.info() != Eigen::Success) {
      throw Error(ErrorCode::kInsufficientCoverage, "singular rotation spline fit");
    }
    const VecX dx = -ldlt.solve(g);
    if (!dx.allFinite()) throw Error(ErrorCode::kInsufficientCoverage, "singular rotation fit");
    for (int m = 0; m < K; ++m) {
      out.cps()[m] = orthonormalize(out.cps()[m] * so3_exp_mat(dx.segment<3>(3 * m)));
    }
    if (dx.lpNorm<Eigen::Infinity>() < 1e-12 || cost < 1e-30) break;
  }
  return out;
}

}  // namespace hpgt
