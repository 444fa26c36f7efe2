#pragma once

#include <functional>
#include <span>
#include <vector>

namespace unirec::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Hermite rule for the standard normal measure (probabilists'
/// weights, summing to one), via Golub-Welsch. Cached per node count.
const Rule& gauss_hermite(int nodes);

/// Gauss-Legendre rule on [-1, 1]. Cached per node count.
const Rule& gauss_legendre(int nodes);

struct Estimate {
  double value = 0.0;
  double error = 0.0;  // |fine - coarse|
  int nodes = 0;
};

/// E[h(g)] for g ~ N(0,1) with a smooth integrand.
Estimate gaussian_expectation(const std::function<double(double)>& h, int nodes = 200);

/// E[h(g)] for g ~ N(0,1) when h has kinks or jumps. Integrates h * phi
/// piecewise over [-half_width, half_width], splitting at every breakpoint and
/// into subintervals of length at most one.
Estimate gaussian_expectation_piecewise(const std::function<double(double)>& h,
                                        std::span<const double> breakpoints,
                                        double half_width = 10.0, int nodes_per_piece = 24);

double normal_pdf(double x);
double normal_cdf(double x);

}  // namespace unirec::quad
