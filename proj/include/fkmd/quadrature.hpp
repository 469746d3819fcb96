#pragma once

#include "fkmd/error.hpp"
#include "fkmd/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace fkmd::quad {

// 8-point Gauss-Legendre rule on [-1, 1]; exact for polynomials of degree 15.
inline constexpr std::array<double, 8> kGLNodes{-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                                -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                                0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> kGLWeights{0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                                  0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                                  0.2223810344533745, 0.1012285362903763};

/// Segment endpoints for `panels` uniform panels on [a, b], with every
/// breakpoint inside (a, b) inserted so no Gauss panel straddles a kink.
inline std::vector<double> segments(double a, double b, int panels, const std::vector<double>& breakpoints = {}) {
  std::vector<double> pts;
  pts.reserve(static_cast<std::size_t>(panels) + breakpoints.size() + 1);
  for (int i = 0; i <= panels; ++i) pts.push_back(a + (b - a) * i / panels);
  for (double p : breakpoints)
    if (p > a && p < b) pts.push_back(p);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

/// Quadrature points and weights of the composite rule on [a, b].
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline Rule composite_rule(double a, double b, int panels, const std::vector<double>& breakpoints = {}) {
  const auto pts = segments(a, b, panels, breakpoints);
  Rule r;
  r.nodes.reserve(8 * (pts.size() - 1));
  r.weights.reserve(8 * (pts.size() - 1));
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    const double mid = 0.5 * (pts[s] + pts[s + 1]);
    const double half = 0.5 * (pts[s + 1] - pts[s]);
    for (std::size_t k = 0; k < 8; ++k) {
      r.nodes.push_back(mid + half * kGLNodes[k]);
      r.weights.push_back(half * kGLWeights[k]);
    }
  }
  return r;
}

template <typename F>
double integrate(F&& f, double a, double b, int panels, const std::vector<double>& breakpoints = {}) {
  const auto pts = segments(a, b, panels, breakpoints);
  double sum = 0.0;
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    const double mid = 0.5 * (pts[s] + pts[s + 1]);
    const double half = 0.5 * (pts[s + 1] - pts[s]);
    double seg = 0.0;
    for (std::size_t k = 0; k < 8; ++k) seg += kGLWeights[k] * f(mid + half * kGLNodes[k]);
    sum += half * seg;
  }
  return sum;
}

/// Tensor-product composite rule over the box [lo, hi]; breakpoints per axis.
template <typename F>
double integrate_box(F&& f, const Vec& lo, const Vec& hi, int panels,
                     const std::vector<std::vector<double>>& breakpoints = {}) {
  const auto d = lo.size();
  std::vector<Rule> rules;
  rules.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto& bp = static_cast<std::size_t>(i) < breakpoints.size() ? breakpoints[static_cast<std::size_t>(i)]
                                                                     : std::vector<double>{};
    rules.push_back(composite_rule(lo[i], hi[i], panels, bp));
  }
  Vec x(d);
  std::function<double(Eigen::Index)> recurse = [&](Eigen::Index axis) -> double {
    const auto& r = rules[static_cast<std::size_t>(axis)];
    double s = 0.0;
    for (std::size_t k = 0; k < r.nodes.size(); ++k) {
      x[axis] = r.nodes[k];
      s += r.weights[k] * (axis + 1 == d ? f(x) : recurse(axis + 1));
    }
    return s;
  };
  return recurse(0);
}

/// Runs `level_rule(panels)` for panels = start, 2 start, ... until two
/// successive values agree to `rel_tol`; throws quadrature_failed otherwise.
template <typename F>
double refine(F&& level_rule, double rel_tol, int start_panels, int max_panels, const std::string& what) {
  double prev = level_rule(start_panels);
  for (int p = 2 * start_panels; p <= max_panels; p *= 2) {
    const double cur = level_rule(p);
    if (!std::isfinite(cur)) break;
    if (std::abs(cur - prev) <= rel_tol * std::max(std::abs(cur), 1e-300) || (cur == 0.0 && prev == 0.0)) return cur;
    prev = cur;
  }
  throw Error(ErrorCode::quadrature_failed, what);
}

/// Probabilists' Gauss-Hermite rule: sum w_i g(z_i) approximates E g(Z),
/// Z ~ N(0, 1). Golub-Welsch on the Jacobi matrix of the Hermite recurrence.
inline Rule gauss_hermite(int n) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jac(k, k - 1) = std::sqrt(static_cast<double>(k));
    jac(k - 1, k) = jac(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  Rule r;
  for (int i = 0; i < n; ++i) {
    r.nodes.push_back(es.eigenvalues()[i]);
    const double v = es.eigenvectors()(0, i);
    r.weights.push_back(v * v);
  }
  return r;
}

/// E g(X), X ~ N(0, cov), by a tensor Gauss-Hermite rule of order n per axis.
template <typename F>
double gaussian_expectation(F&& g, const Mat& cov, int n) {
  const auto d = cov.rows();
  const Mat chol = Eigen::LLT<Eigen::MatrixXd>(Eigen::MatrixXd(cov)).matrixL().toDenseMatrix();
  const Rule r = gauss_hermite(n);
  Vec z(d);
  std::function<double(Eigen::Index)> recurse = [&](Eigen::Index axis) -> double {
    double s = 0.0;
    for (std::size_t k = 0; k < r.nodes.size(); ++k) {
      z[axis] = r.nodes[k];
      if (axis + 1 == d) {
        const Vec x = chol * z;
        s += r.weights[k] * g(x);
      } else {
        s += r.weights[k] * recurse(axis + 1);
      }
    }
    return s;
  };
  return recurse(0);
}

}  // namespace fkmd::quad
