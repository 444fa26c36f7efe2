#include "unirec/quadrature.hpp"

#include "unirec/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace unirec::quad {
namespace {

Rule build_hermite(int n) {
  // Jacobi matrix of the probabilists' Hermite recurrence.
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    j(i, i - 1) = std::sqrt(static_cast<double>(i));
    j(i - 1, i) = j(i, i - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    r.weights[i] = v0 * v0;
  }
  return r;
}

Rule build_legendre(int n) {
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes[i] = x;
    r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

const Rule& cached(std::map<int, Rule>& cache, int n, Rule (*build)(int)) {
  static std::mutex mu;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build(n)).first;
  return it->second;
}

double apply_hermite(const std::function<double(double)>& h, const Rule& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * h(r.nodes[i]);
  return s;
}

double apply_piecewise(const std::function<double(double)>& h, const std::vector<double>& cuts,
                       const Rule& r) {
  double total = 0.0;
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    const double a = cuts[p];
    const double b = cuts[p + 1];
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
      const double x = mid + half * r.nodes[i];
      s += r.weights[i] * h(x) * normal_pdf(x);
    }
    total += half * s;
  }
  return total;
}

}  // namespace

const Rule& gauss_hermite(int nodes) {
  if (nodes < 1) throw ArgumentError("gauss_hermite: nodes must be >= 1");
  static std::map<int, Rule> cache;
  return cached(cache, nodes, &build_hermite);
}

const Rule& gauss_legendre(int nodes) {
  if (nodes < 1) throw ArgumentError("gauss_legendre: nodes must be >= 1");
  static std::map<int, Rule> cache;
  return cached(cache, nodes, &build_legendre);
}

Estimate gaussian_expectation(const std::function<double(double)>& h, int nodes) {
  Estimate e;
  e.value = apply_hermite(h, gauss_hermite(nodes));
  e.error = std::abs(e.value - apply_hermite(h, gauss_hermite(std::max(1, nodes / 2))));
  e.nodes = nodes;
  return e;
}

Estimate gaussian_expectation_piecewise(const std::function<double(double)>& h,
                                        std::span<const double> breakpoints, double half_width,
                                        int nodes_per_piece) {
  std::vector<double> marks{-half_width, half_width};
  for (double b : breakpoints) {
    if (b > -half_width && b < half_width) marks.push_back(b);
  }
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
  std::vector<double> cuts;
  for (std::size_t i = 0; i + 1 < marks.size(); ++i) {
    const double a = marks[i];
    const double b = marks[i + 1];
    const int pieces = std::max(1, static_cast<int>(std::ceil(b - a)));
    for (int p = 0; p < pieces; ++p) cuts.push_back(a + (b - a) * p / pieces);
  }
  cuts.push_back(marks.back());

  Estimate e;
  e.value = apply_piecewise(h, cuts, gauss_legendre(nodes_per_piece));
  const double coarse = apply_piecewise(h, cuts, gauss_legendre(std::max(1, nodes_per_piece / 2)));
  e.error = std::abs(e.value - coarse);
  e.nodes = nodes_per_piece * static_cast<int>(cuts.size() - 1);
  return e;
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace unirec::quad
