#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace unirec {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Throws ArgumentError unless v is nonempty and every entry is finite.
void require_dense_vector(const Vec& v, const char* what);

bool all_finite(const Vec& v);

// ---------------------------------------------------------------------------
// Random numbers
// ---------------------------------------------------------------------------

/// Reproducible random stream, generator version 1.
///
/// Bits come from std::mt19937_64 (fully specified by the C++ standard).
/// Uniforms take the top 53 bits. Normals use the basic Box-Muller transform
/// and return the cosine and sine variates in that order. The standard
/// library distributions are not used because their algorithms are
/// implementation defined.
class Rng {
 public:
  static constexpr const char* kGeneratorName = "mt19937_64+box-muller/v1";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform();
  /// Standard normal.
  double normal();
  /// Uniform integer on [0, bound).
  std::uint64_t below(std::uint64_t bound);

  Vec normal_vector(Eigen::Index n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// splitmix64 finaliser.
std::uint64_t mix64(std::uint64_t z);

/// Child seed derived from a master seed and a path of indices. Independent of
/// scheduling: the result depends only on the arguments.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

// ---------------------------------------------------------------------------
// Sensing ensembles
// ---------------------------------------------------------------------------

/// m x n matrix with i.i.d. N(0,1) entries, plus the seed that produced it.
/// Immutable after construction.
class SensingEnsemble {
 public:
  SensingEnsemble(Mat matrix, std::uint64_t seed);

  Eigen::Index rows() const noexcept { return matrix_.rows(); }
  Eigen::Index cols() const noexcept { return matrix_.cols(); }
  const Mat& matrix() const noexcept { return matrix_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// A * u, using only the nonzero columns when u is sparse.
  Vec apply(const Vec& u) const;
  /// A^T * r.
  Vec apply_transpose(const Vec& r) const;

 private:
  Mat matrix_;
  std::uint64_t seed_;
};

/// Entries are drawn row by row (a_1 first) from Rng(seed).
SensingEnsemble gaussian_ensemble(Eigen::Index m, Eigen::Index n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Complexity measures
// ---------------------------------------------------------------------------

/// Indices of the k largest |v_i|, ties broken by lowest index, in that order.
std::vector<Eigen::Index> top_k_indices(const Vec& v, Eigen::Index k);

/// l2 norm of the k largest-magnitude entries of v. Equals
/// sup { <v,u> : u k-sparse, ||u||_2 <= 1 }.
double top_k_norm(const Vec& v, Eigen::Index k);

struct WidthEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Monte Carlo estimate of the Gaussian width of the k-sparse unit ball.
WidthEstimate gaussian_width_sparse(Eigen::Index n, Eigen::Index k, std::size_t samples,
                                    std::uint64_t seed);

/// Upper bound on the log covering number of the k-sparse unit sphere,
/// k * (log(e n / k) + log(3 / eps)). The constant 3 is the volumetric net
/// constant.
double entropy_bound_sparse(Eigen::Index n, Eigen::Index k, double eps);

}  // namespace unirec
