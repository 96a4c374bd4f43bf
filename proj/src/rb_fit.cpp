#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "xtalk/characterization.hpp"
#include "xtalk/error.hpp"

namespace xtalk {
namespace {

using Params = std::array<double, 3>;  // A, alpha, B

constexpr double kAlphaLow = 1e-12;
constexpr double kAlphaHigh = 1.0 - 1e-15;

Params project(Params p) {
  p[0] = std::clamp(p[0], 0.0, 1.0);
  p[1] = std::clamp(p[1], kAlphaLow, kAlphaHigh);
  p[2] = std::clamp(p[2], 0.0, 1.0);
  return p;
}

double cost(const Params& p, std::span<const int> m, std::span<const double> y, std::span<const double> w) {
  double total = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    double r = p[0] * std::pow(p[1], m[k]) + p[2] - y[k];
    total += w[k] * r * r;
  }
  return total;
}

// Solves the 3x3 system a x = b by Gaussian elimination with partial pivoting.
bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b, std::array<double, 3>& x) {
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int row = col + 1; row < 3; ++row) {
      if (std::abs(a[row][col]) > std::abs(a[pivot][col])) pivot = row;
    }
    if (std::abs(a[pivot][col]) < 1e-300) return false;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (int row = col + 1; row < 3; ++row) {
      double f = a[row][col] / a[col][col];
      for (int c = col; c < 3; ++c) a[row][c] -= f * a[col][c];
      b[row] -= f * b[col];
    }
  }
  for (int row = 2; row >= 0; --row) {
    double s = b[row];
    for (int c = row + 1; c < 3; ++c) s -= a[row][c] * x[c];
    x[row] = s / a[row][row];
  }
  return true;
}

struct LmResult {
  Params p;
  double cost;
  int iterations;
};

LmResult levenberg_marquardt(Params p, std::span<const int> m, std::span<const double> y,
                             std::span<const double> w) {
  p = project(p);
  double current = cost(p, m, y, w);
  double lambda = 1e-3;
  int iter = 0;
  for (; iter < 1000; ++iter) {
    std::array<std::array<double, 3>, 3> jtj{};
    std::array<double, 3> jtr{};
    for (std::size_t k = 0; k < m.size(); ++k) {
      double pw = std::pow(p[1], m[k]);
      double r = p[0] * pw + p[2] - y[k];
      std::array<double, 3> j{pw, m[k] == 0 ? 0.0 : p[0] * m[k] * std::pow(p[1], m[k] - 1), 1.0};
      for (int a = 0; a < 3; ++a) {
        jtr[a] += w[k] * j[a] * r;
        for (int b = 0; b < 3; ++b) jtj[a][b] += w[k] * j[a] * j[b];
      }
    }
    bool improved = false;
    while (lambda < 1e16) {
      auto lhs = jtj;
      for (int a = 0; a < 3; ++a) lhs[a][a] += lambda * std::max(jtj[a][a], 1e-12);
      std::array<double, 3> rhs{-jtr[0], -jtr[1], -jtr[2]};
      std::array<double, 3> step{};
      if (!solve3(lhs, rhs, step)) {
        lambda *= 10.0;
        continue;
      }
      Params trial = project({p[0] + step[0], p[1] + step[1], p[2] + step[2]});
      double c = cost(trial, m, y, w);
      if (c < current) {
        double moved = std::abs(trial[0] - p[0]) + std::abs(trial[1] - p[1]) + std::abs(trial[2] - p[2]);
        double gain = current - c;
        p = trial;
        current = c;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        if (moved < 1e-15 || gain <= 1e-30 + 1e-14 * c) return {p, current, iter + 1};
        break;
      }
      lambda *= 4.0;
    }
    if (!improved) break;
  }
  return {p, current, iter};
}

// Linear regression of log(y - offset) on m over points with y > offset.
bool log_linear_start(std::span<const int> m, std::span<const double> y, double offset, Params& out) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    double d = y[k] - offset;
    if (d <= 0.0) continue;
    double ly = std::log(d);
    sx += m[k];
    sy += ly;
    sxx += static_cast<double>(m[k]) * m[k];
    sxy += m[k] * ly;
    ++n;
  }
  if (n < 2) return false;
  double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-12) return false;
  double slope = (n * sxy - sx * sy) / denom;
  double intercept = (sy - slope * sx) / n;
  out = {std::exp(intercept), std::exp(slope), offset};
  return std::isfinite(out[0]) && std::isfinite(out[1]);
}

}  // namespace

RbFit fit_rb(std::span<const int> lengths, std::span<const double> survival) {
  if (lengths.size() != survival.size()) throw ArgumentError("lengths and survival differ in size");
  if (lengths.size() < 3) throw ArgumentError("at least three points are needed to fit a decay");
  for (std::size_t k = 0; k < lengths.size(); ++k) {
    if (lengths[k] < 0) throw ArgumentError("sequence lengths must be non-negative");
    if (k > 0 && lengths[k] <= lengths[k - 1]) throw ArgumentError("sequence lengths must be strictly increasing");
    if (!(survival[k] >= 0.0 && survival[k] <= 1.0)) throw ArgumentError("survival must lie in [0, 1]");
  }

  auto [lo_it, hi_it] = std::minmax_element(survival.begin(), survival.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (hi - lo < 1e-12) {
    if (lo >= 1.0 - 1e-12) {
      // Perfect survival at every length: no decay to measure.
      RbFit fit;
      fit.A = 0.0;
      fit.alpha = 1.0;
      fit.B = 1.0;
      return fit;
    }
    throw FitError("survival is constant; the decay rate cannot be identified");
  }

  std::vector<Params> starts;
  Params p;
  if (log_linear_start(lengths, survival, lo - 0.01 * (hi - lo), p)) starts.push_back(p);
  if (log_linear_start(lengths, survival, 0.25, p)) starts.push_back(p);
  if (log_linear_start(lengths, survival, 0.0, p)) starts.push_back(p);
  starts.push_back({hi - lo, 0.95, lo});

  // Inverse binomial variance weights; survival near 0 or 1 is floored.
  std::vector<double> weights;
  for (double y : survival) weights.push_back(1.0 / std::max(y * (1.0 - y), 1e-4));

  LmResult best{{}, std::numeric_limits<double>::infinity(), 0};
  for (const auto& start : starts) {
    auto r = levenberg_marquardt(start, lengths, survival, weights);
    if (std::isfinite(r.cost) && r.cost < best.cost) best = r;
  }
  if (!std::isfinite(best.cost)) throw FitError("least-squares iteration did not converge");
  if (best.p[0] < 1e-9) throw FitError("fitted amplitude is zero; the decay rate cannot be identified");

  RbFit fit;
  fit.A = best.p[0];
  fit.alpha = best.p[1];
  fit.B = best.p[2];
  fit.epc = epc_from_alpha(fit.alpha);
  fit.cx_error = cx_error_from_epc(fit.epc);
  fit.residual = best.cost;
  fit.iterations = best.iterations;
  return fit;
}

RbFit fit_rb(const RbDecayCurve& curve) { return fit_rb(curve.lengths, curve.survival); }

}  // namespace xtalk
