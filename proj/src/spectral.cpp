#include "rwad/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "rwad/errors.hpp"

namespace rwad {
namespace {

struct Sample {
  double tau;
  RVec values;
  CMat frame;
};

// Column k of `next` matched to each column j of `prev`.
std::vector<int> match_columns(const Eigen::MatrixXd& overlap) {
  const int n = static_cast<int>(overlap.rows());
  std::vector<int> best(n);
  for (int j = 0; j < n; ++j) overlap.row(j).maxCoeff(&best[j]);

  std::vector<int> hits(n, 0);
  for (int k : best) ++hits[k];
  std::vector<int> clashing;
  for (int j = 0; j < n; ++j)
    if (hits[best[j]] > 1) clashing.push_back(j);
  if (clashing.empty()) return best;

  std::vector<bool> taken(n, false);
  for (int j = 0; j < n; ++j)
    if (hits[best[j]] == 1) taken[best[j]] = true;
  std::vector<int> free_cols;
  for (int k = 0; k < n; ++k)
    if (!taken[k]) free_cols.push_back(k);

  if (clashing.size() <= 3) {
    // Largest permanent term over the free columns.
    std::vector<int> perm = free_cols;
    std::vector<int> chosen = perm;
    double best_score = -1.0;
    do {
      double score = 1.0;
      for (std::size_t i = 0; i < clashing.size(); ++i) score *= overlap(clashing[i], perm[i]);
      if (score > best_score) {
        best_score = score;
        chosen = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (std::size_t i = 0; i < clashing.size(); ++i) best[clashing[i]] = chosen[i];
    return best;
  }

  // Global greedy: repeatedly take the largest remaining overlap.
  std::vector<bool> row_done(n, false), col_done(n, false);
  for (int it = 0; it < n; ++it) {
    double top = -1.0;
    int bj = 0, bk = 0;
    for (int j = 0; j < n; ++j) {
      if (row_done[j]) continue;
      for (int k = 0; k < n; ++k)
        if (!col_done[k] && overlap(j, k) > top) {
          top = overlap(j, k);
          bj = j;
          bk = k;
        }
    }
    best[bj] = bk;
    row_done[bj] = col_done[bk] = true;
  }
  return best;
}

Sample decompose(const HermitianFamily& f, double tau) {
  const Eigensystem es = eigh(f(tau));
  return Sample{tau, es.values, es.vectors.matrix()};
}

// Reorders and rephases `next` to continue `prev`; returns the smallest matched overlap.
double align(const Sample& prev, Sample& next) {
  const int n = static_cast<int>(prev.values.size());
  const CMat inner = prev.frame.adjoint() * next.frame;
  const Eigen::MatrixXd overlap = inner.cwiseAbs();
  const std::vector<int> perm = match_columns(overlap);
  RVec values(n);
  CMat frame(n, n);
  double cert = 1.0;
  for (int j = 0; j < n; ++j) {
    const int k = perm[j];
    const Complex ov = inner(j, k);
    const double mag = std::abs(ov);
    cert = std::min(cert, mag);
    values[j] = next.values[k];
    frame.col(j) = next.frame.col(k) * (mag > 0.0 ? std::conj(ov) / mag : Complex(1.0));
  }
  next.values = values;
  next.frame = frame;
  return cert;
}

void track_interval(const HermitianFamily& f, const Sample& a, double tb, int depth, std::vector<Sample>& out,
                    double& certificate, int& inserted) {
  Sample b = decompose(f, tb);
  const double cert = align(a, b);
  if (cert < kCertificateRefine && depth < kMaxRefineDepth) {
    const double mid = 0.5 * (a.tau + tb);
    ++inserted;
    track_interval(f, a, mid, depth + 1, out, certificate, inserted);
    const Sample m = out.back();
    track_interval(f, m, tb, depth + 1, out, certificate, inserted);
    return;
  }
  if (cert < kCertificateRefuse)
    throw NumericRefusal(fmt::format("eigenpath matching failed on [{:.6g}, {:.6g}]: overlap {:.3f} after {} "
                                     "refinements",
                                     a.tau, tb, cert, depth));
  certificate = std::min(certificate, cert);
  out.push_back(std::move(b));
}

// Fornberg weights for the derivative of order `order` at x0 from nodes x.
std::vector<double> fd_weights(double x0, std::span<const double> x, int order) {
  const int n = static_cast<int>(x.size());
  std::vector<std::vector<double>> c(n, std::vector<double>(order + 1, 0.0));
  double c1 = 1.0;
  double c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][order];
  return w;
}

}  // namespace

EigenPaths eigen_paths(const HermitianFamily& family, std::span<const double> grid) {
  if (grid.size() < 2) throw ValidationError("eigen_paths needs at least two grid points");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw ValidationError("eigen_paths grid must be strictly increasing");

  std::vector<Sample> samples;
  samples.push_back(decompose(family, grid[0]));
  double certificate = 1.0;
  int inserted = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const Sample a = samples.back();
    track_interval(family, a, grid[i], 0, samples, certificate, inserted);
  }

  EigenPaths p;
  p.family = family;
  p.certificate = certificate;
  p.inserted = inserted;
  for (auto& s : samples) {
    p.grid.push_back(s.tau);
    p.values.push_back(std::move(s.values));
    p.frames.push_back(std::move(s.frame));
  }
  return p;
}

Eigensystem aligned_eigensystem(const EigenPaths& paths, double tau) {
  if (paths.size() == 0) throw ValidationError("empty eigenpaths");
  auto it = std::upper_bound(paths.grid.begin(), paths.grid.end(), tau);
  const std::size_t i = it == paths.grid.begin() ? 0 : static_cast<std::size_t>(it - paths.grid.begin()) - 1;
  const Sample anchor{paths.grid[i], paths.values[i], paths.frames[i]};
  Sample s = decompose(paths.family, tau);
  align(anchor, s);
  return Eigensystem{s.values, UnitaryMatrix(s.frame)};
}

GapReport gap_condition(const EigenPaths& paths, int kappa, double c_floor) {
  if (kappa < 0) throw ValidationError("kappa must be nonnegative");
  if (!(c_floor > 0.0)) throw ValidationError("c_floor must be positive");
  const int n = paths.dim();
  const int pts = static_cast<int>(paths.size());
  const int stencil = 2 * kappa + 2;
  if (kappa > 0 && pts < stencil)
    throw NumericRefusal(fmt::format("grid of {} points is too coarse for a kappa = {} stencil of {} points", pts,
                                     kappa, stencil));

  GapReport r;
  r.kappa = kappa;
  r.gap_estimate = std::numeric_limits<double>::infinity();
  double scale = 1.0;
  for (const RVec& v : paths.values) scale = std::max(scale, v.cwiseAbs().maxCoeff());

  for (int i = 0; i < pts; ++i) {
    RVec s = paths.values[i];
    std::sort(s.begin(), s.end());
    for (int j = 0; j + 1 < n; ++j)
      if (s[j + 1] - s[j] < r.gap_estimate) {
        r.gap_estimate = s[j + 1] - s[j];
        r.gap_location = paths.grid[i];
      }
  }
  r.holds_gap = r.gap_estimate >= c_floor;

  for (int j = 0; j < n; ++j)
    for (int l = j + 1; l < n; ++l) {
      auto delta = [&](int i) { return paths.values[i][l] - paths.values[i][j]; };
      for (int i = 0; i < pts; ++i) {
        const double here = std::abs(delta(i));
        if (here >= c_floor) continue;
        const bool left_ok = i == 0 || here <= std::abs(delta(i - 1));
        const bool right_ok = i + 1 == pts || here <= std::abs(delta(i + 1));
        if (!left_ok || !right_ok) continue;
        NearContact c;
        c.tau = paths.grid[i];
        c.first = j;
        c.second = l;
        c.gap = here;
        for (int p = 0; p < n; ++p) {
          if (p == j || p == l) continue;
          if (std::abs(paths.values[i][p] - paths.values[i][j]) < c_floor) c.third_party_separated = false;
        }
        for (int order = 1; order <= kappa; ++order) {
          // order + accuracy (kappa + 2) - 1 nodes, centred where the grid allows.
          const int width = std::min(pts, order + kappa + 1 + (order + kappa + 1) % 2);
          int lo = std::clamp(i - width / 2, 0, pts - width);
          std::vector<double> x(paths.grid.begin() + lo, paths.grid.begin() + lo + width);
          const std::vector<double> w = fd_weights(c.tau, x, order);
          double d = 0.0;
          for (int q = 0; q < width; ++q) d += w[q] * delta(lo + q);
          c.derivatives.push_back(d);
          if (c.witness_order == 0 && std::abs(d) > 1e-6 * scale) c.witness_order = order;
        }
        r.contacts.push_back(std::move(c));
      }
    }

  if (kappa == 0) {
    r.holds_kappa_gap = r.holds_gap;
  } else {
    r.holds_kappa_gap = std::all_of(r.contacts.begin(), r.contacts.end(), [](const NearContact& c) {
      return c.witness_order > 0 && c.third_party_separated;
    });
  }
  return r;
}

std::optional<int> minimal_kappa(const EigenPaths& paths, double c_floor, int max_kappa) {
  for (int k = 0; k <= max_kappa; ++k)
    if (gap_condition(paths, k, c_floor).holds_kappa_gap) return k;
  return std::nullopt;
}

TridiagonalReport tridiagonal_simplicity(std::span<const double> diagonal, std::span<const double> off_diagonal) {
  const int n = static_cast<int>(diagonal.size());
  if (n < 1 || static_cast<int>(off_diagonal.size()) != n - 1)
    throw ValidationError("tridiagonal matrix needs n diagonal and n-1 off-diagonal entries");
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(diagonal.data(), n);
  Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(off_diagonal.data(), n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(a, c, Eigen::EigenvaluesOnly);
  TridiagonalReport r;
  r.off_diagonals_nonzero = std::all_of(off_diagonal.begin(), off_diagonal.end(), [](double x) { return x != 0.0; });
  r.eigenvalues = solver.eigenvalues();
  r.min_eigen_gap = std::numeric_limits<double>::infinity();
  for (int j = 0; j + 1 < n; ++j) r.min_eigen_gap = std::min(r.min_eigen_gap, r.eigenvalues[j + 1] - r.eigenvalues[j]);
  const double norm = std::sqrt(a.squaredNorm() + 2.0 * c.squaredNorm());
  r.simple = r.min_eigen_gap > 1e-12 * norm;
  return r;
}

HermitianMatrix chirp_hamiltonian(int m, double rho, double w) {
  if (m < 1 || m > kMaxDim) throw ValidationError(fmt::format("chirp block size {} out of range", m));
  CMat h = CMat::Zero(m, m);
  for (int j = 0; j < m; ++j) h(j, j) = (j + 1) * rho;
  for (int j = 0; j + 1 < m; ++j) h(j, j + 1) = h(j + 1, j) = w;
  return HermitianMatrix(h);
}

HermitianMatrix stirap_hamiltonian(std::span<const double> d, double w1, double w2) {
  const int m = static_cast<int>(d.size());
  if (m < 1 || m > kMaxDim) throw ValidationError(fmt::format("STIRAP block size {} out of range", m));
  CMat h = CMat::Zero(m, m);
  for (int j = 0; j < m; ++j) h(j, j) = d[j];
  for (int j = 0; j + 1 < m; ++j) h(j, j + 1) = h(j + 1, j) = (j % 2 == 0) ? w1 : w2;
  return HermitianMatrix(h);
}

std::string_view axis_name(Axis a) { return a == Axis::w1_zero ? "w1=0" : "w2=0"; }

double default_crossing_range(std::span<const double> d) {
  if (d.size() < 2) throw ValidationError("need at least two detunings");
  return 4.0 * (d.back() - d.front());
}

namespace {

constexpr int kScanPoints = 4001;
constexpr int kIsolationSamples = 1000;

struct AxisFamily {
  std::span<const double> d;
  Axis axis;
  Eigensystem at(double w) const {
    return eigh(axis == Axis::w1_zero ? stirap_hamiltonian(d, 0.0, w) : stirap_hamiltonian(d, w, 0.0));
  }
};

int best_column(const CMat& vecs, const CVec& ref) {
  int idx = 0;
  (vecs.adjoint() * ref).cwiseAbs().maxCoeff(&idx);
  return idx;
}

struct BranchCrossing {
  int from = 0;  // 0-based sorted positions
  int to = 0;
  Crossing c;
};

// Follows the branch that starts on e_start at w = 0 and returns its crossings.
std::vector<BranchCrossing> follow_branch(const AxisFamily& fam, int start, double w_max) {
  const int m = static_cast<int>(fam.d.size());
  CVec ref = CVec::Zero(m);
  ref[start] = 1.0;
  int pos = start;
  double w_prev = 0.0;
  Eigensystem prev = fam.at(0.0);
  std::vector<BranchCrossing> out;
  for (int i = 1; i < kScanPoints; ++i) {
    const double w = w_max * i / (kScanPoints - 1);
    Eigensystem cur = fam.at(w);
    const int now = best_column(cur.vectors.matrix(), ref);
    if (now != pos) {
      if (std::abs(now - pos) != 1)
        throw NumericRefusal(fmt::format("branch jumped {} positions near w = {:.6g}; scan too coarse",
                                         now - pos, w));
      const CVec ref_track = ref;
      const CVec ref_other = prev.vectors.matrix().col(now);
      auto f = [&](double x) {
        const Eigensystem es = fam.at(x);
        const int a = best_column(es.vectors.matrix(), ref_track);
        const int b = best_column(es.vectors.matrix(), ref_other);
        if (a == b) return 0.0;
        return es.values[a] - es.values[b];
      };
      const double fa = f(w_prev);
      double root = 0.0;
      double bracket = 0.0;
      if (fa == 0.0) {
        root = w_prev;
      } else {
        std::uintmax_t iters = 200;
        auto tol = [](double a, double b) { return std::abs(b - a) <= 4e-16 * std::max(1.0, std::abs(a)); };
        const auto [lo, hi] = boost::math::tools::bisect(f, w_prev, w, tol, iters);
        root = 0.5 * (lo + hi);
        bracket = hi - lo;
      }
      BranchCrossing bc;
      bc.from = pos;
      bc.to = now;
      bc.c.k = std::min(pos, now) + 1;
      bc.c.location = root;
      bc.c.residual = std::abs(f(root));
      bc.c.bracket = bracket;
      const double h = 1e-6 * std::max(1.0, root);
      bc.c.slope = (f(root + h) - f(root - h)) / (2.0 * h);
      out.push_back(bc);
      pos = now;
    }
    CVec next = cur.vectors.matrix().col(now);
    const Complex ov = next.dot(ref);
    if (std::abs(ov) > 0.0) next *= ov / std::abs(ov);
    ref = next;
    prev = std::move(cur);
    w_prev = w;
  }
  return out;
}

// Smallest gap between sorted positions p and its listed neighbours on the open interval (a, b).
double min_sorted_gap(const AxisFamily& fam, double a, double b, int p, std::initializer_list<int> neighbours) {
  const int m = static_cast<int>(fam.d.size());
  double g = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= kIsolationSamples; ++i) {
    const double w = a + (b - a) * i / (kIsolationSamples + 1);
    const RVec v = fam.at(w).values;
    for (int q : neighbours)
      if (q >= 0 && q < m) g = std::min(g, std::abs(v[p] - v[q]));
  }
  return g;
}

}  // namespace

CrossingReport eigen_intersections(std::span<const double> d, Axis axis, double w_max) {
  const int m = static_cast<int>(d.size());
  if (m < 3) throw ValidationError("eigen_intersections needs m >= 3");
  for (int j = 0; j + 1 < m; ++j)
    if (!(d[j + 1] > d[j])) throw ValidationError("detunings d_j must be strictly increasing");
  if (w_max <= 0.0) w_max = default_crossing_range(d);

  const AxisFamily fam{d, axis};
  const bool odd = m % 2 == 1;
  CrossingReport r;
  r.axis = axis;
  r.m = m;
  r.w_max = w_max;

  int start = 0;
  if (axis == Axis::w1_zero) {
    start = 0;
    r.expected = odd ? (m - 1) / 2 : m / 2 - 1;
  } else {
    start = odd ? m - 1 : m - 2;
    r.expected = odd ? (m - 1) / 2 : m / 2 - 1;
  }
  const std::vector<BranchCrossing> main = follow_branch(fam, start, w_max);
  for (const auto& bc : main) r.crossings.push_back(bc.c);
  r.counts_match = main.size() == r.expected;
  if (main.size() < r.expected)
    r.notes.push_back(fmt::format("found {} of {} crossings on [0, {:.6g}]; extend the range", main.size(),
                                  r.expected, w_max));

  // Expected order: k increasing along w1 = 0, decreasing along w2 = 0, one step at a time.
  r.monotone = r.counts_match;
  for (std::size_t i = 0; i < main.size() && r.monotone; ++i) {
    const int want = axis == Axis::w1_zero ? static_cast<int>(i) + 1 : start - static_cast<int>(i);
    if (main[i].c.k != want) r.monotone = false;
    if (i > 0 && !(main[i].c.location > main[i - 1].c.location)) r.monotone = false;
  }

  r.min_isolation_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < main.size(); ++i) {
    const int p = main[i].to;
    r.min_isolation_gap =
        std::min(r.min_isolation_gap, min_sorted_gap(fam, main[i].c.location, main[i + 1].c.location, p, {p - 1, p + 1}));
  }

  if (!odd && axis == Axis::w1_zero) {
    const std::vector<BranchCrossing> top = follow_branch(fam, m - 1, w_max);
    if (top.empty() || top.front().c.k != m - 1) {
      r.notes.push_back("no crossing of (lambda_{m-1}, lambda_m) found on w1 = 0");
      r.counts_match = false;
    } else {
      Crossing star = top.front().c;
      star.star = true;
      r.crossings.push_back(star);
      const double ws = star.location;
      r.min_isolation_gap = std::min(r.min_isolation_gap, min_sorted_gap(fam, 0.0, ws, m - 2, {m - 3, m - 1}));
      r.min_isolation_gap = std::min(r.min_isolation_gap, min_sorted_gap(fam, ws, w_max, m - 1, {m - 2}));
    }
  }
  if (!odd && axis == Axis::w2_zero) {
    const double g = min_sorted_gap(fam, 0.0, w_max, m - 1, {m - 2});
    r.top_pair_separated = g > 1e-12;
    if (!*r.top_pair_separated) r.notes.push_back("lambda_{m-1} meets lambda_m on w2 = 0");
  }
  r.isolated = r.min_isolation_gap > 1e-12;
  return r;
}

ConicalProbe conical_probe(std::span<const double> d, Axis axis, const Crossing& c, double h) {
  const double w1c = axis == Axis::w1_zero ? 0.0 : c.location;
  const double w2c = axis == Axis::w1_zero ? c.location : 0.0;
  const int k = c.k - 1;
  auto gap = [&](double theta, double r) {
    const RVec v = eigh(stirap_hamiltonian(d, w1c + r * std::cos(theta), w2c + r * std::sin(theta))).values;
    return v[k + 1] - v[k];
  };
  ConicalProbe p;
  p.min_ratio = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 8; ++i) {
    const double theta = std::numbers::pi * i / 8.0;
    for (double s : {1.0, -1.0}) {
      const double g1 = gap(theta, s * h);
      const double g2 = gap(theta, 2.0 * s * h);
      if (g1 <= 0.0) continue;
      const double ratio = g2 / g1;
      p.min_ratio = std::min(p.min_ratio, ratio);
      p.max_ratio = std::max(p.max_ratio, ratio);
    }
  }
  p.conical = p.max_ratio < 3.0;
  return p;
}

StirapThresholds stirap_thresholds(const CrossingReport& w1_zero, const CrossingReport& w2_zero) {
  if (w1_zero.axis != Axis::w1_zero || w2_zero.axis != Axis::w2_zero)
    throw ConfigError("stirap_thresholds needs the w1 = 0 report first and the w2 = 0 report second");
  StirapThresholds t;
  for (const Crossing& c : w1_zero.crossings) {
    if (c.star)
      t.w2_star = c.location;
    else
      t.w2_entry = std::max(t.w2_entry, c.location);
  }
  for (const Crossing& c : w2_zero.crossings) t.w1_exit = std::max(t.w1_exit, c.location);
  if (t.w2_entry <= 0.0 || t.w1_exit <= 0.0)
    throw ConfigError("crossing data is missing on one of the axes");
  return t;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("slope fit needs matching lists of >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
using G7 = boost::math::quadrature::gauss<double, 7>;

struct PanelRule {
  std::vector<double> nodes;   // on [-1, 1]
  std::vector<double> kronrod;
  std::vector<double> gauss;   // zero at Kronrod-only nodes
};

const PanelRule& panel_rule() {
  static const PanelRule rule = [] {
    PanelRule r;
    const auto& xa = GK::abscissa();
    const auto& wk = GK::weights();
    const auto& wg = G7::weights();
    // Boost stores the non-negative half; even positions of the Kronrod
    // abscissae are the Gauss nodes.
    for (std::size_t i = 0; i < xa.size(); ++i) {
      const double g = (i % 2 == 0) ? wg[i / 2] : 0.0;
      r.nodes.push_back(xa[i]);
      r.kronrod.push_back(wk[i]);
      r.gauss.push_back(g);
      if (xa[i] != 0.0) {
        r.nodes.push_back(-xa[i]);
        r.kronrod.push_back(wk[i]);
        r.gauss.push_back(g);
      }
    }
    return r;
  }();
  return rule;
}

template <class F>
Complex integrate_panel(const F& f, double a, double b, double floor_density, int depth = 0) {
  const PanelRule& rule = panel_rule();
  const double c = 0.5 * (a + b);
  const double hw = 0.5 * (b - a);
  Complex k = 0.0, g = 0.0;
  double l1 = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const Complex v = f(c + hw * rule.nodes[i]);
    k += rule.kronrod[i] * v;
    g += rule.gauss[i] * v;
    l1 += rule.kronrod[i] * std::abs(v);
  }
  k *= hw;
  g *= hw;
  l1 *= std::abs(hw);
  const double err = std::abs(k - g);
  if (err <= std::max(1e-12 * l1, floor_density * std::abs(b - a)) || err < 1e-300) return k;
  if (depth >= 10)
    throw NumericRefusal(fmt::format("oscillatory quadrature did not converge on [{:.6g}, {:.6g}]", a, b));
  return integrate_panel(f, a, c, floor_density, depth + 1) + integrate_panel(f, c, b, floor_density, depth + 1);
}

}  // namespace

OscillatoryOrder oscillatory_order(const ScalarFn& a, const ScalarFn& h, double beta, double alpha,
                                   std::span<const double> epsilons) {
  if (beta == 0.0) throw ValidationError("beta must be nonzero");
  if (epsilons.size() < 2) throw ValidationError("need at least two epsilon values");
  const double lo = *std::min_element(epsilons.begin(), epsilons.end());
  const double hi = *std::max_element(epsilons.begin(), epsilons.end());
  if (!(lo > 0.0) || hi / lo < 10.0 * (1.0 - 1e-12))
    throw ValidationError("epsilon list must be positive and span at least one decade");

  OscillatoryOrder out;
  out.epsilons.assign(epsilons.begin(), epsilons.end());
  if (a.is_structurally_zero()) {
    out.sups.assign(epsilons.size(), 0.0);
    return out;
  }
  double hprime = 0.0;
  for (int i = 0; i <= 1024; ++i) hprime = std::max(hprime, std::abs(h.derivative(i / 1024.0)));
  // Absolute error allowed per unit length.
  const double floor_density = 1e-15 * sup_norm(a, 1025);

  for (double eps : epsilons) {
    const double fast = std::pow(eps, alpha + 1.0);
    auto f = [&](double s) { return a(s) * std::polar(1.0, beta * s / fast + h(s) / eps); };
    const double omega = std::abs(beta) / fast + hprime / eps;
    const double panel = 2.0 * std::numbers::pi / omega / 16.0;
    const long long panels = static_cast<long long>(std::ceil(1.0 / panel));
    const double step = 1.0 / static_cast<double>(panels);

    Complex acc = 0.0;
    double best = 0.0;
    long long best_i = 0;
    std::vector<Complex> at_start(panels + 1);
    at_start[0] = 0.0;
    for (long long i = 0; i < panels; ++i) {
      acc += integrate_panel(f, i * step, (i + 1) * step, floor_density);
      at_start[i + 1] = acc;
      if (std::abs(acc) > best) {
        best = std::abs(acc);
        best_i = i + 1;
      }
    }
    // The maximum may sit inside a panel next to the best endpoint.
    for (long long i = std::max(0LL, best_i - 1); i <= std::min(panels - 1, best_i); ++i) {
      const double x0 = i * step;
      auto neg = [&](double x) { return -std::abs(at_start[i] + integrate_panel(f, x0, x, floor_density)); };
      const auto [x, v] = boost::math::tools::brent_find_minima(neg, x0, x0 + step, 52);
      best = std::max(best, -v);
      (void)x;
    }
    out.sups.push_back(best);
  }
  out.slope = loglog_slope(out.epsilons, out.sups);
  return out;
}

}  // namespace rwad
