#include "unirec/core.hpp"

#include "unirec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace unirec {

void require_dense_vector(const Vec& v, const char* what) {
  if (v.size() == 0) throw ArgumentError(std::string(what) + ": empty vector");
  if (!all_finite(v)) throw ArgumentError(std::string(what) + ": non-finite entry");
}

bool all_finite(const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) return false;
  }
  return true;
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw ArgumentError("Rng::below: bound must be positive");
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r >= threshold) return r % bound;
  }
}

Vec Rng::normal_vector(Eigen::Index n) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(master);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

SensingEnsemble::SensingEnsemble(Mat matrix, std::uint64_t seed)
    : matrix_(std::move(matrix)), seed_(seed) {
  if (matrix_.rows() < 1 || matrix_.cols() < 1) {
    throw ArgumentError("SensingEnsemble: dimensions must be positive");
  }
  if (!matrix_.allFinite()) throw ArgumentError("SensingEnsemble: non-finite entry");
}

Vec SensingEnsemble::apply(const Vec& u) const {
  if (u.size() != cols()) throw ArgumentError("SensingEnsemble::apply: dimension mismatch");
  Eigen::Index nnz = 0;
  for (Eigen::Index j = 0; j < u.size(); ++j) nnz += (u[j] != 0.0);
  if (4 * nnz >= u.size()) return matrix_ * u;
  Vec out = Vec::Zero(rows());
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    if (u[j] != 0.0) out.noalias() += u[j] * matrix_.col(j);
  }
  return out;
}

Vec SensingEnsemble::apply_transpose(const Vec& r) const {
  if (r.size() != rows()) {
    throw ArgumentError("SensingEnsemble::apply_transpose: dimension mismatch");
  }
  return matrix_.transpose() * r;
}

SensingEnsemble gaussian_ensemble(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
  if (m < 1 || n < 1) throw ArgumentError("gaussian_ensemble: m and n must be >= 1");
  Rng rng(seed);
  Mat a(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.normal();
  }
  return SensingEnsemble(std::move(a), seed);
}

std::vector<Eigen::Index> top_k_indices(const Vec& v, Eigen::Index k) {
  const Eigen::Index n = v.size();
  k = std::clamp<Eigen::Index>(k, 0, n);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  auto before = [&v](Eigen::Index a, Eigen::Index b) {
    const double fa = std::abs(v[a]);
    const double fb = std::abs(v[b]);
    if (fa != fb) return fa > fb;
    return a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), before);
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

double top_k_norm(const Vec& v, Eigen::Index k) {
  if (k >= v.size()) return v.norm();
  double s = 0.0;
  for (Eigen::Index i : top_k_indices(v, k)) s += v[i] * v[i];
  return std::sqrt(s);
}

WidthEstimate gaussian_width_sparse(Eigen::Index n, Eigen::Index k, std::size_t samples,
                                    std::uint64_t seed) {
  if (n < 1 || k < 1) throw ArgumentError("gaussian_width_sparse: n, k must be >= 1");
  if (k > n) throw ArgumentError("gaussian_width_sparse: k > n");
  if (samples < 1) throw ArgumentError("gaussian_width_sparse: samples must be >= 1");
  Rng rng(seed);
  // Welford accumulation.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const double x = top_k_norm(rng.normal_vector(n), k);
    const double delta = x - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (x - mean);
  }
  WidthEstimate est;
  est.value = mean;
  est.samples = samples;
  est.std_error =
      samples > 1 ? std::sqrt(m2 / static_cast<double>(samples - 1) / static_cast<double>(samples))
                  : 0.0;
  return est;
}

double entropy_bound_sparse(Eigen::Index n, Eigen::Index k, double eps) {
  if (k < 1 || k > n) throw ArgumentError("entropy_bound_sparse: need 1 <= k <= n");
  if (!(eps > 0.0)) throw ArgumentError("entropy_bound_sparse: eps must be positive");
  const double kk = static_cast<double>(k);
  const double h = kk * (std::log(std::numbers::e * static_cast<double>(n) / kk) + std::log(3.0 / eps));
  // A covering number is at least one.
  return std::max(0.0, h);
}

}  // namespace unirec
