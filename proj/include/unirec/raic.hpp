#pragma once

#include "unirec/constraints.hpp"
#include "unirec/core.hpp"
#include "unirec/links.hpp"
#include "unirec/solvers.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace unirec {

/// R = ||u - x - eta h(u)|| in the dual norm of K_1 (cones) or
/// (1/phi) times the dual norm of (K - x) cap phi B_2 (convex sets), with h
/// built from the given observations.
double raic_residual(const SensingEnsemble& a, const Vec& y, const GradientOp& op, const Vec& x,
                     const Vec& u, const ConstraintSet& set, double eta,
                     std::optional<double> phi = std::nullopt,
                     const DualNormOptions& dual = {});

/// Same, generating y = f(Ax) with link randomness from rng_seed and the
/// scaled l2 gradient at mu.
double raic_residual(const SensingEnsemble& a, const Link& link, const Vec& x, const Vec& u,
                     double mu, const ConstraintSet& set, double eta,
                     std::optional<double> phi, std::uint64_t rng_seed);

enum class ProbeSampler { RandomRandom, Trajectory };

std::string sampler_name(ProbeSampler s);
ProbeSampler sampler_from_name(const std::string& name);

struct CertifyOptions {
  ProbeSampler sampler = ProbeSampler::Trajectory;
  int n_pairs = 500;
  /// Pairs per signal: one diagonal pair plus pairs_per_signal - 1 others.
  /// For the trajectory sampler the others are the PGD iterates x_0, x_1, ...
  int pairs_per_signal = 10;
  std::optional<double> eta;  // default mu^-2
  double mu = 1.0;
  std::optional<double> phi;  // convex sets only
  std::uint64_t seed = 0;
  /// Signal sparsity for the default sampler (unit k-sparse vectors).
  Eigen::Index signal_k = 1;
  /// Overrides the default signal sampler.
  std::function<Vec(Rng&)> signal_sampler;
  DualNormOptions dual;
};

struct ResidualRecord {
  int signal = 0;
  int step = -1;        // trajectory index of u, or -1
  double distance = 0;  // ||u - x||
  double residual = 0;  // R
};

struct ProbedTrajectory {
  int signal = 0;
  std::vector<double> errors;  // ||x_t - x||, t = 0..pairs_per_signal - 1
};

/// Envelope fitted on sampled pairs. This is a statement about the probe set
/// only, an empirical lower bound on what uniform RAIC over K x X needs.
struct RaicCertificate {
  double mu1_hat = 0.0;
  double mu2_hat = 0.0;
  double eta = 0.0;
  std::optional<double> phi;
  int n_pairs = 0;
  std::string sampler;
  std::uint64_t seed = 0;
  std::vector<ResidualRecord> residuals;
  std::vector<ProbedTrajectory> trajectories;
};

/// mu2_hat = max R over pairs with u = x; mu1_hat = max(0, max over the other
/// pairs of (R - mu2_hat)/||u - x||). Throws when either class is empty.
RaicCertificate fit_certificate(std::vector<ResidualRecord> records, double eta,
                                std::optional<double> phi);

RaicCertificate certify_raic(const SensingEnsemble& a, const Link& link, const ConstraintSet& set,
                             const CertifyOptions& options);

/// {mu1_hat, mu2_hat, eta, phi, n_pairs, sampler, seed}, plus residuals when
/// with_records is set.
std::string certificate_to_json(const RaicCertificate& cert, bool with_records = false);
RaicCertificate certificate_from_json(const std::string& text);

/// max over the net of || (1/m) sum f~(a_i^T x) a_i || in the cone dual norm,
/// f~ = Id - f/mu.
double multiplier_process_sup(const SensingEnsemble& a, const Link& link, double mu,
                              const std::vector<Vec>& signal_net, Eigen::Index k,
                              std::uint64_t rng_seed);

/// eta || (c/m) sum (y_i - y~_i) a_i || in the cone dual norm, with c = mu for
/// the scaled l2 family and c = 1/2 for the relu family.
double gradient_mismatch_sup(const SensingEnsemble& a, const Vec& clean_y, const Vec& corrupt_y,
                             double mu, double eta, Eigen::Index k,
                             GradientKind family = GradientKind::ScaledL2);

struct TheoryBoundParams {
  double m = 0;
  double n = 0;
  double k = 0;
  double eps = 0.1;
  double zeta = 0.1;
  std::optional<double> phi;
  double phi1 = 1.0;
  double phi2 = std::numeric_limits<double>::infinity();
  double phi3 = 0.0;
  double phi4 = 0.0;
  double phi5 = 0.0;
  double mu = 1.0;
  /// omega(K_1) for cones; omega(K_{X,phi} / phi) for convex sets.
  double width_K1 = 0.0;
  /// omega(X_eps).
  double width_X_eps = 0.0;
  /// H(X, eps).
  double entropy = 0.0;
};

enum class BoundMode { ConeXi, ConvexUpsilon };

struct TheoryBound {
  double bar = 0.0;    // Xi-bar or Upsilon-bar
  double bound = 0.0;  // Xi or Upsilon
  double discontinuity_cost = 0.0;  // (phi3 / mu) * bound
};

TheoryBound theory_bound(const TheoryBoundParams& params, BoundMode mode);

}  // namespace unirec
