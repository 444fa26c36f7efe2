#include "unirec/experiments.hpp"

#include "unirec/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

namespace unirec {

// ---------------------------------------------------------------------------
// Corruption
// ---------------------------------------------------------------------------

CorruptionSpec CorruptionSpec::gaussian(double sigma) {
  if (!(sigma >= 0.0)) throw ArgumentError("gaussian corruption needs sigma >= 0");
  return {Kind::Gaussian, sigma, Heuristic::None};
}

CorruptionSpec CorruptionSpec::l2_budget(double beta, Heuristic h) {
  if (!(beta >= 0.0)) throw ArgumentError("l2-budget corruption needs beta >= 0");
  if (h != Heuristic::RandomDirection && h != Heuristic::TopMargin) {
    throw ArgumentError("l2-budget heuristic must be random-direction or top-margin");
  }
  return {Kind::L2Budget, beta, h};
}

CorruptionSpec CorruptionSpec::bit_flips(double fraction, Heuristic h) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw ArgumentError("bit-flip fraction must lie in [0, 1)");
  }
  if (h != Heuristic::Random && h != Heuristic::LargestMargin) {
    throw ArgumentError("bit-flip heuristic must be random or largest-margin");
  }
  return {Kind::BitFlips, fraction, h};
}

CorruptionSpec CorruptionSpec::from_name(const std::string& name, double param,
                                         const std::string& heuristic) {
  auto parse = [&](Heuristic fallback) {
    if (heuristic.empty()) return fallback;
    if (heuristic == "random-direction") return Heuristic::RandomDirection;
    if (heuristic == "top-margin") return Heuristic::TopMargin;
    if (heuristic == "random") return Heuristic::Random;
    if (heuristic == "largest-margin") return Heuristic::LargestMargin;
    throw ArgumentError("unknown corruption heuristic '" + heuristic + "'");
  };
  if (name == "none") {
    if (!heuristic.empty()) throw ArgumentError("corruption 'none' takes no heuristic");
    return none();
  }
  if (name == "gaussian") {
    if (!heuristic.empty()) throw ArgumentError("gaussian corruption takes no heuristic");
    return gaussian(param);
  }
  if (name == "l2-budget") return l2_budget(param, parse(Heuristic::RandomDirection));
  if (name == "bit-flips") return bit_flips(param, parse(Heuristic::LargestMargin));
  throw ArgumentError("unknown corruption '" + name + "'");
}

std::string CorruptionSpec::name() const {
  switch (kind) {
    case Kind::None: return "none";
    case Kind::Gaussian: return "gaussian";
    case Kind::L2Budget: return "l2-budget";
    case Kind::BitFlips: return "bit-flips";
  }
  return "?";
}

std::string CorruptionSpec::heuristic_name() const {
  switch (heuristic) {
    case Heuristic::None: return "";
    case Heuristic::RandomDirection: return "random-direction";
    case Heuristic::TopMargin: return "top-margin";
    case Heuristic::Random: return "random";
    case Heuristic::LargestMargin: return "largest-margin";
  }
  return "";
}

std::string CorruptionSpec::label() const {
  const std::string h = heuristic_name();
  return h.empty() ? name() : name() + "/" + h;
}

Vec inject_corruption(const CorruptionSpec& spec, const SensingEnsemble& a, const Vec& x,
                      const Vec& y, std::uint64_t seed) {
  const Eigen::Index m = y.size();
  if (m != a.rows()) throw ArgumentError("inject_corruption: y has the wrong length");
  Rng rng(seed);
  Vec out = y;
  switch (spec.kind) {
    case CorruptionSpec::Kind::None:
      break;
    case CorruptionSpec::Kind::Gaussian:
      for (Eigen::Index i = 0; i < m; ++i) out[i] += spec.param * rng.normal();
      break;
    case CorruptionSpec::Kind::L2Budget: {
      Vec dir = spec.heuristic == CorruptionSpec::Heuristic::TopMargin ? a.apply(x)
                                                                       : rng.normal_vector(m);
      if (dir.norm() == 0.0) {
        dir = Vec::Zero(m);
        dir[0] = 1.0;
      }
      out += spec.param * dir / dir.norm();
      break;
    }
    case CorruptionSpec::Kind::BitFlips: {
      for (Eigen::Index i = 0; i < m; ++i) {
        if (y[i] != 1.0 && y[i] != -1.0) {
          throw ArgumentError("inject_corruption: bit flips need observations in {-1, +1}");
        }
      }
      const auto count = static_cast<Eigen::Index>(
          std::floor(spec.param * static_cast<double>(m) + 1e-9));
      std::vector<Eigen::Index> chosen;
      if (spec.heuristic == CorruptionSpec::Heuristic::LargestMargin) {
        chosen = top_k_indices(a.apply(x), count);
      } else {
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(m));
        std::iota(idx.begin(), idx.end(), Eigen::Index{0});
        for (Eigen::Index i = 0; i < count; ++i) {
          const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m - i)));
          std::swap(idx[i], idx[j]);
        }
        chosen.assign(idx.begin(), idx.begin() + count);
      }
      for (Eigen::Index i : chosen) out[i] = -out[i];
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Signal classes
// ---------------------------------------------------------------------------

std::string setting_name(Setting s) {
  switch (s) {
    case Setting::A: return "a";
    case Setting::B: return "b";
    case Setting::C: return "c";
  }
  return "?";
}

Setting setting_from_name(const std::string& name) {
  if (name == "a") return Setting::A;
  if (name == "b") return Setting::B;
  if (name == "c") return Setting::C;
  throw ArgumentError("unknown setting '" + name + "' (expected a, b or c)");
}

Vec sample_sparse_sphere(Rng& rng, Eigen::Index n, Eigen::Index k) {
  if (k < 1 || k > n) throw ArgumentError("sample_sparse_sphere: need 1 <= k <= n");
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  Vec x = Vec::Zero(n);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[i], idx[j]);
    x[idx[i]] = rng.normal();
  }
  const double nrm = x.norm();
  if (nrm == 0.0) {
    x[idx[0]] = 1.0;
    return x;
  }
  return x / nrm;
}

namespace {

/// sign(z) |z|^p / || |z|^p ||_2 with ||.||_1 = target, p found by bisection.
/// Returns nothing when the target is out of reach.
std::optional<Vec> fit_l1(const Vec& z, double target) {
  double zmax = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) zmax = std::max(zmax, std::abs(z[i]));
  if (zmax == 0.0) return std::nullopt;
  auto shape = [&](double p) {
    Vec v = Vec::Zero(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      if (z[i] != 0.0) {
        const double mag = std::exp(p * (std::log(std::abs(z[i])) - std::log(zmax)));
        v[i] = z[i] > 0.0 ? mag : -mag;
      }
    }
    return Vec(v / v.norm());
  };
  double lo = 0.0;
  double hi = 1.0;
  if (shape(lo).lpNorm<1>() < target - 1e-12) return std::nullopt;
  while (shape(hi).lpNorm<1>() > target && hi < 1e6) hi *= 2.0;
  if (shape(hi).lpNorm<1>() > target + 1e-9) return std::nullopt;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (shape(mid).lpNorm<1>() > target) lo = mid;
    else hi = mid;
  }
  return shape(0.5 * (lo + hi));
}

Vec normalized_top_k(const Vec& z, Eigen::Index k) {
  Vec v = project(ConstraintSet::sparsity_cone(k), z);
  const double nrm = v.norm();
  if (nrm == 0.0) {
    v = Vec::Zero(z.size());
    v[0] = 1.0;
    return v;
  }
  return v / nrm;
}

}  // namespace

SignalClass::SignalClass(Setting setting, Eigen::Index n, Eigen::Index k, double c_star)
    : setting_(setting), n_(n), k_(k), c_star_(c_star) {
  if (k < 1 || k > n) throw ArgumentError("signal class needs 1 <= k <= n");
  if (setting == Setting::B) {
    if (!(c_star > 0.0 && c_star <= 1.0)) throw ArgumentError("setting b needs 0 < c_star <= 1");
    if (c_star * std::sqrt(static_cast<double>(k)) < 1.0) {
      throw ArgumentError("setting b needs c_star * sqrt(k) >= 1");
    }
  }
}

ConstraintSet SignalClass::constraint() const {
  const double sk = std::sqrt(static_cast<double>(k_));
  switch (setting_) {
    case Setting::A: return ConstraintSet::sparsity_cone(k_);
    case Setting::B: return ConstraintSet::l1_ball(c_star_ * sk);
    case Setting::C: return ConstraintSet::l1_ball(sk);
  }
  return ConstraintSet::sparsity_cone(k_);
}

Vec SignalClass::to_class(const Vec& z, Rng& rng) const {
  const double sk = std::sqrt(static_cast<double>(k_));
  switch (setting_) {
    case Setting::A:
      return normalized_top_k(z, k_);
    case Setting::B: {
      const Vec t = project(ConstraintSet::sparsity_cone(k_), z);
      if (auto v = fit_l1(t, c_star_ * sk)) return *v;
      // Degenerate support: draw fresh magnitudes on a fresh support.
      for (int attempt = 0; attempt < 100; ++attempt) {
        Vec fresh = sample_sparse_sphere(rng, n_, k_);
        if (auto v = fit_l1(fresh, c_star_ * sk)) return *v;
      }
      throw NumericalError("setting b: could not reach the l1 target");
    }
    case Setting::C: {
      const ConstraintSet ball = ConstraintSet::l1_ball(sk);
      Vec v = z;
      for (int it = 0; it < 500; ++it) {
        v = project(ball, v);
        const double nrm = v.norm();
        if (nrm == 0.0) break;
        v /= nrm;
        if (v.lpNorm<1>() <= sk * (1.0 + 1e-10)) return v;
      }
      return normalized_top_k(z, k_);
    }
  }
  return z;
}

Vec SignalClass::sample(Rng& rng) const {
  switch (setting_) {
    case Setting::A:
      return sample_sparse_sphere(rng, n_, k_);
    case Setting::B:
      return to_class(sample_sparse_sphere(rng, n_, k_), rng);
    case Setting::C: {
      const Vec s = sample_sparse_sphere(rng, n_, k_);
      const Vec g = rng.normal_vector(n_);
      return to_class(s + 0.1 * g / g.norm(), rng);
    }
  }
  return Vec();
}

Vec SignalClass::perturb(const Vec& x, double step, Rng& rng) const {
  if (x.size() != n_) throw ArgumentError("perturb: dimension mismatch");
  Vec z = x;
  if (setting_ == Setting::C) {
    z += step * rng.normal_vector(n_);
  } else {
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (x[i] != 0.0) z[i] += step * rng.normal();
    }
  }
  return to_class(z, rng);
}

bool SignalClass::contains(const Vec& x, double tol) const {
  if (x.size() != n_) return false;
  if (std::abs(x.norm() - 1.0) > tol) return false;
  const double sk = std::sqrt(static_cast<double>(k_));
  const auto nnz = (x.array() != 0.0).count();
  switch (setting_) {
    case Setting::A: return nnz <= k_;
    case Setting::B: return nnz <= k_ && std::abs(x.lpNorm<1>() - c_star_ * sk) <= tol * sk;
    case Setting::C: return x.lpNorm<1>() <= sk * (1.0 + tol);
  }
  return false;
}

// ---------------------------------------------------------------------------
// Recovery
// ---------------------------------------------------------------------------

SignalRun recover_signal(const SensingEnsemble& a, const RecoveryModel& model, const Vec& x,
                         std::uint64_t seed) {
  SignalRun run;
  run.x = x;
  run.seed = seed;
  const Vec y = observe(model.link, a, x, derive_seed(seed, {1}));
  const Vec yc = inject_corruption(model.corruption, a, x, y, derive_seed(seed, {2}));
  SolverConfig cfg = model.solver;
  cfg.keep_iterates = false;
  cfg.init_seed = derive_seed(seed, {3});
  try {
    const Trajectory tr = pgd_run(cfg, a, yc, model.set, model.op, x);
    run.final_error = tr.errors.back();
    run.iters = tr.iters_run;
    run.wall_ms = tr.wall_ms;
  } catch (const DivergedError& e) {
    const Trajectory& tr = e.partial();
    run.diverged = true;
    run.final_error = tr.errors.empty() ? std::numeric_limits<double>::quiet_NaN() : tr.errors.back();
    run.iters = tr.iters_run;
    run.wall_ms = tr.wall_ms;
  }
  return run;
}

UniformErrorResult estimate_uniform_error(const SensingEnsemble& a, const RecoveryModel& model,
                                          const SignalClass& signals, int n_signals,
                                          const std::optional<AdversarialSearch>& search,
                                          std::uint64_t seed) {
  if (n_signals < 1) throw ArgumentError("estimate_uniform_error: n_signals must be >= 1");
  if (signals.n() != a.cols()) throw ArgumentError("estimate_uniform_error: dimension mismatch");
  UniformErrorResult res;
  res.max_error = -std::numeric_limits<double>::infinity();
  auto consider = [&](SignalRun run) {
    const bool better = !run.diverged && run.final_error > res.max_error;
    if (better) {
      res.max_error = run.final_error;
      res.argmax = run.signal_id;
      res.argmax_signal = run.x;
    }
    res.runs.push_back(std::move(run));
    return better;
  };
  for (int i = 0; i < n_signals; ++i) {
    const std::uint64_t s = derive_seed(seed, {static_cast<std::uint64_t>(i)});
    Rng rng(derive_seed(s, {0}));
    SignalRun run = recover_signal(a, model, signals.sample(rng), s);
    run.signal_id = i;
    consider(std::move(run));
  }
  if (search && res.argmax >= 0) {
    if (search->restarts < 0 || search->steps < 0 || !(search->step_size > 0.0)) {
      throw ArgumentError("adversarial search parameters must be nonnegative");
    }
    Rng rng(derive_seed(seed, {0xad7e5ULL}));
    int id = n_signals;
    for (int r = 0; r < search->restarts; ++r) {
      for (int st = 0; st < search->steps; ++st, ++id) {
        const Vec cand = signals.perturb(res.argmax_signal, search->step_size, rng);
        SignalRun run = recover_signal(a, model, cand,
                                       derive_seed(seed, {static_cast<std::uint64_t>(id)}));
        run.signal_id = id;
        if (run.diverged || run.final_error <= res.max_error) continue;
        consider(std::move(run));
      }
    }
  }
  if (res.argmax < 0) res.max_error = std::numeric_limits<double>::quiet_NaN();
  return res;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

RecoveryModel build_model(const ExperimentSpec& spec, const GridPoint& point) {
  RecoveryModel model;
  model.link = spec.link;
  if (spec.mu) {
    model.mu = *spec.mu;
  } else if (spec.gradient == "scaled-l2") {
    model.mu = compute_mu(spec.link).mu;
  }
  model.op = GradientOp::from_name(spec.gradient, model.mu);
  model.solver = spec.solver;
  model.set = spec.constraint_name
                  ? ConstraintSet::from_name(*spec.constraint_name, spec.constraint_param)
                  : SignalClass(spec.setting, point.n, point.k, spec.c_star).constraint();
  model.corruption = spec.corruption;
  return model;
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t grid_index, int trial) {
  return derive_seed(master, {static_cast<std::uint64_t>(grid_index),
                              static_cast<std::uint64_t>(trial)});
}

std::vector<TrialRecord> run_sweep(const ExperimentSpec& spec) {
  if (spec.grid.empty()) throw ArgumentError("run_sweep: empty grid");
  if (spec.trials < 1) throw ArgumentError("run_sweep: trials must be >= 1");
  if (spec.signals_per_trial < 1) throw ArgumentError("run_sweep: signals_per_trial must be >= 1");

  // Resolve everything up front so configuration problems surface immediately.
  std::vector<RecoveryModel> models;
  std::vector<SignalClass> classes;
  for (const GridPoint& p : spec.grid) {
    if (p.n < 1 || p.k < 1 || p.m < 1 || p.k > p.n) {
      throw ArgumentError("run_sweep: grid point needs n, m >= 1 and 1 <= k <= n");
    }
    models.push_back(build_model(spec, p));
    classes.emplace_back(spec.setting, p.n, p.k, spec.c_star);
  }

  const std::size_t tasks = spec.grid.size() * static_cast<std::size_t>(spec.trials);
  std::vector<std::vector<TrialRecord>> slots(tasks);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      const std::size_t g = t / static_cast<std::size_t>(spec.trials);
      const int trial = static_cast<int>(t % static_cast<std::size_t>(spec.trials));
      const GridPoint& p = spec.grid[g];
      TrialRecord base;
      base.experiment_id = spec.experiment_id;
      base.setting = setting_name(spec.setting);
      base.link = spec.link.name();
      base.n = p.n;
      base.k = p.k;
      base.m = p.m;
      base.trial = trial;
      base.corruption = spec.corruption.label();
      base.corruption_param = spec.corruption.param;
      const std::uint64_t seed = trial_seed(spec.master_seed, g, trial);
      try {
        const SensingEnsemble a = gaussian_ensemble(p.m, p.n, seed);
        const UniformErrorResult res = estimate_uniform_error(
            a, models[g], classes[g], spec.signals_per_trial, spec.search, seed);
        for (const SignalRun& run : res.runs) {
          TrialRecord r = base;
          r.signal_id = run.signal_id;
          r.iters = run.iters;
          r.final_error = run.final_error;
          r.diverged = run.diverged;
          r.seed = run.seed;
          r.wall_ms = spec.timing ? run.wall_ms : 0.0;
          slots[t].push_back(std::move(r));
        }
      } catch (const Error&) {
        TrialRecord r = base;
        r.signal_id = -1;
        r.final_error = std::numeric_limits<double>::quiet_NaN();
        r.diverged = true;
        r.seed = seed;
        slots[t].push_back(std::move(r));
      }
    }
  };

  const int threads = std::max(1, std::min<int>(spec.threads, static_cast<int>(tasks)));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  std::vector<TrialRecord> out;
  for (auto& s : slots) {
    for (auto& r : s) out.push_back(std::move(r));
  }
  return out;
}

SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw ArgumentError("fit_loglog_slope: need at least 3 points");
  double sx = 0.0;
  double sy = 0.0;
  for (const auto& [m, e] : points) {
    if (!(m > 0.0) || !(e > 0.0)) throw ArgumentError("fit_loglog_slope: values must be positive");
    sx += std::log(m);
    sy += std::log(e);
  }
  const double cnt = static_cast<double>(points.size());
  const double mx = sx / cnt;
  const double my = sy / cnt;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const auto& [m, e] : points) {
    const double dx = std::log(m) - mx;
    const double dy = std::log(e) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw ArgumentError("fit_loglog_slope: all m values are equal");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double ssres = syy - f.slope * sxy;
  f.r2 = syy == 0.0 ? 1.0 : std::clamp(1.0 - ssres / syy, 0.0, 1.0);
  return f;
}

std::vector<std::pair<double, double>> median_worst_error(const std::vector<TrialRecord>& records) {
  std::map<Eigen::Index, std::map<int, double>> worst;
  for (const auto& r : records) {
    if (r.diverged || !std::isfinite(r.final_error)) continue;
    auto& slot = worst[r.m];
    auto it = slot.find(r.trial);
    if (it == slot.end()) slot.emplace(r.trial, r.final_error);
    else it->second = std::max(it->second, r.final_error);
  }
  std::vector<std::pair<double, double>> out;
  for (const auto& [m, trials] : worst) {
    std::vector<double> v;
    for (const auto& [t, e] : trials) v.push_back(e);
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    const double med = v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    out.emplace_back(static_cast<double>(m), med);
  }
  return out;
}

}  // namespace unirec
