#pragma once

#include "unirec/constraints.hpp"
#include "unirec/core.hpp"
#include "unirec/errors.hpp"

#include <optional>
#include <string>
#include <vector>

namespace unirec {

enum class GradientKind { ScaledL2, ReluSubgrad, AmplitudeSubgrad };

class GradientOp {
 public:
  /// h(u) = (1/m) sum (mu a_i^T u - y_i) mu a_i.
  static GradientOp scaled_l2(double mu);
  /// h(u) = (1/2m) sum (sign(a_i^T u) - y_i) a_i, for y in {-1,+1}^m.
  static GradientOp relu();
  /// h(u) = (1/m) sum (|a_i^T u| - y_i) sign(a_i^T u) a_i.
  static GradientOp amplitude();
  /// "scaled-l2", "relu", "amplitude".
  static GradientOp from_name(const std::string& name, double mu);

  GradientKind kind() const noexcept { return kind_; }
  double mu() const noexcept { return mu_; }
  std::string name() const;
  /// mu^-2, sqrt(2 pi) and 1 respectively.
  double default_eta() const;

 private:
  GradientOp(GradientKind kind, double mu) : kind_(kind), mu_(mu) {}
  GradientKind kind_;
  double mu_;
};

Vec gradient(const GradientOp& op, const Vec& u, const SensingEnsemble& a, const Vec& y);

/// Same formula with a^T u already computed.
Vec gradient_from_margins(const GradientOp& op, const Vec& margins, const SensingEnsemble& a,
                          const Vec& y);

struct InitPolicy {
  enum class Kind { Zero, Given, NearTruth };
  Kind kind = Kind::Zero;
  Vec given;            // Given
  double delta = 0.1;   // NearTruth: ||x0 - x|| <= delta

  static InitPolicy zero() { return {}; }
  static InitPolicy from(Vec x0) { return {Kind::Given, std::move(x0), 0.0}; }
  /// Oracle initialization; for tests and phase retrieval only.
  static InitPolicy near_truth(double delta = 0.1) { return {Kind::NearTruth, Vec(), delta}; }
};

struct SolverConfig {
  std::optional<double> eta;   // default from the gradient op
  int max_iters = 100;
  bool normalize = false;
  double target_norm = 1.0;
  InitPolicy x0;
  double stop_tol = 0.0;       // stop when ||x_{t+1} - x_t|| < stop_tol
  bool keep_iterates = true;
  int thin = 1;                // keep every thin-th iterate (and the last)
  std::uint64_t init_seed = 0; // near-truth perturbation
};

struct Trajectory {
  std::vector<Vec> iterates;
  std::vector<int> iterate_steps;  // step index of each kept iterate
  std::vector<double> errors;      // empty without a truth vector
  int iters_run = 0;
  double wall_ms = 0.0;
  bool oracle_init = false;
  bool phaseless = false;
  Vec final_iterate;
};

/// Raised when an iterate is non-finite or its norm exceeds 1e6 times the
/// target scale. Carries the trajectory up to the last finite state.
class DivergedError : public NumericalError {
 public:
  DivergedError(const std::string& what, Trajectory partial)
      : NumericalError(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const noexcept { return partial_; }

 private:
  Trajectory partial_;
};

/// min(||u - x||, ||u + x||).
double phaseless_distance(const Vec& u, const Vec& x);

/// x_{t+1} = P_K(x_t - eta h(x_t)), renormalized to target_norm when asked.
Trajectory pgd_run(const SolverConfig& config, const SensingEnsemble& a, const Vec& y,
                   const ConstraintSet& set, const GradientOp& op,
                   const std::optional<Vec>& truth = std::nullopt);

/// f_t = (2 mu1)^t init + (2 mu2 + phi)(1 - (2 mu1)^t)/(1 - 2 mu1).
double predict_envelope(double mu1, double mu2, double phi, double init_error, int t);

}  // namespace unirec
