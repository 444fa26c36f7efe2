#pragma once

#include "unirec/constraints.hpp"
#include "unirec/core.hpp"
#include "unirec/links.hpp"
#include "unirec/solvers.hpp"

#include <optional>
#include <string>
#include <vector>

namespace unirec {

// ---------------------------------------------------------------------------
// Corruption
// ---------------------------------------------------------------------------

struct CorruptionSpec {
  enum class Kind { None, Gaussian, L2Budget, BitFlips };
  enum class Heuristic { None, RandomDirection, TopMargin, Random, LargestMargin };
  Kind kind = Kind::None;
  double param = 0.0;  // sigma, beta or the flip fraction
  Heuristic heuristic = Heuristic::None;

  static CorruptionSpec none() { return {}; }
  static CorruptionSpec gaussian(double sigma);
  static CorruptionSpec l2_budget(double beta, Heuristic h = Heuristic::RandomDirection);
  static CorruptionSpec bit_flips(double fraction, Heuristic h = Heuristic::LargestMargin);
  /// "none", "gaussian", "l2-budget", "bit-flips"; heuristic names
  /// "random-direction", "top-margin", "random", "largest-margin" (empty for
  /// the default).
  static CorruptionSpec from_name(const std::string& name, double param,
                                  const std::string& heuristic = "");

  std::string name() const;
  std::string heuristic_name() const;
  /// e.g. "bit-flips/largest-margin".
  std::string label() const;
};

/// Corrupted copy of y. Bit flips negate exactly floor(fraction * m) entries.
Vec inject_corruption(const CorruptionSpec& spec, const SensingEnsemble& a, const Vec& x,
                      const Vec& y, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Signal classes
// ---------------------------------------------------------------------------

enum class Setting {
  A,  // k-sparse unit vectors, K = Sigma_k
  B,  // k-sparse unit vectors with ||x||_1 = c sqrt(k), K = B_1(c sqrt(k))
  C,  // B_1(sqrt(k)) cap S^{n-1}, K = B_1(sqrt(k))
};

std::string setting_name(Setting s);
Setting setting_from_name(const std::string& name);

class SignalClass {
 public:
  SignalClass(Setting setting, Eigen::Index n, Eigen::Index k, double c_star = 0.8);

  Setting setting() const noexcept { return setting_; }
  Eigen::Index n() const noexcept { return n_; }
  Eigen::Index k() const noexcept { return k_; }
  /// The constraint set paired with this class.
  ConstraintSet constraint() const;

  Vec sample(Rng& rng) const;
  /// Random move of size about step that stays in the class.
  Vec perturb(const Vec& x, double step, Rng& rng) const;
  bool contains(const Vec& x, double tol = 1e-9) const;

 private:
  Vec to_class(const Vec& z, Rng& rng) const;

  Setting setting_;
  Eigen::Index n_;
  Eigen::Index k_;
  double c_star_;
};

/// Unit vector supported on a uniformly random k-subset.
Vec sample_sparse_sphere(Rng& rng, Eigen::Index n, Eigen::Index k);

// ---------------------------------------------------------------------------
// Recovery runs
// ---------------------------------------------------------------------------

struct RecoveryModel {
  Link link = Link::identity();
  double mu = 1.0;
  GradientOp op = GradientOp::scaled_l2(1.0);
  SolverConfig solver;
  ConstraintSet set = ConstraintSet::sparsity_cone(1);
  CorruptionSpec corruption;
};

struct SignalRun {
  int signal_id = 0;
  Vec x;
  double final_error = 0.0;
  int iters = 0;
  bool diverged = false;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
};

/// One signal: observe, corrupt, run PGD from the model's initial point.
SignalRun recover_signal(const SensingEnsemble& a, const RecoveryModel& model, const Vec& x,
                         std::uint64_t seed);

struct AdversarialSearch {
  int restarts = 1;
  int steps = 10;
  double step_size = 0.1;
};

struct UniformErrorResult {
  /// Empirical worst case over the probed signals, a lower bound on the sup.
  double max_error = 0.0;
  int argmax = -1;  // signal_id
  Vec argmax_signal;
  std::vector<SignalRun> runs;  // sampled signals, then accepted search moves
};

/// Worst recovery error over n_signals sampled signals with one fixed A,
/// optionally refined by hill climbing around the incumbent. Signal i uses
/// seed derive_seed(seed, {i}). Diverged runs are recorded and skipped.
UniformErrorResult estimate_uniform_error(const SensingEnsemble& a, const RecoveryModel& model,
                                          const SignalClass& signals, int n_signals,
                                          const std::optional<AdversarialSearch>& search,
                                          std::uint64_t seed);

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct GridPoint {
  Eigen::Index n = 0;
  Eigen::Index k = 0;
  Eigen::Index m = 0;
};

struct ExperimentSpec {
  std::string experiment_id = "experiment";
  Setting setting = Setting::A;
  double c_star = 0.8;
  Link link = Link::identity();
  std::optional<double> mu;  // empty: computed from the link
  /// Empty: the setting's constraint.
  std::optional<std::string> constraint_name;
  double constraint_param = 0.0;
  std::string gradient = "scaled-l2";
  SolverConfig solver;
  std::vector<GridPoint> grid;
  int trials = 1;
  int signals_per_trial = 1;
  std::optional<AdversarialSearch> search;
  CorruptionSpec corruption;
  std::uint64_t master_seed = 0;
  int threads = 1;
  bool timing = false;
};

struct TrialRecord {
  std::string experiment_id;
  std::string setting;
  std::string link;
  Eigen::Index n = 0;
  Eigen::Index k = 0;
  Eigen::Index m = 0;
  int trial = 0;
  int signal_id = 0;
  std::string corruption;
  double corruption_param = 0.0;
  int iters = 0;
  double final_error = 0.0;
  bool diverged = false;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
};

/// Resolved model for one grid point.
RecoveryModel build_model(const ExperimentSpec& spec, const GridPoint& point);

/// Ensemble seed of (grid index, trial).
std::uint64_t trial_seed(std::uint64_t master, std::size_t grid_index, int trial);

/// Records in grid-major, trial-minor, signal order, independent of threads.
std::vector<TrialRecord> run_sweep(const ExperimentSpec& spec);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least squares of log(error) on log(m).
SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

/// Per m: the median over trials of the per-trial worst error. Diverged
/// records are skipped. Sorted by m.
std::vector<std::pair<double, double>> median_worst_error(const std::vector<TrialRecord>& records);

}  // namespace unirec
