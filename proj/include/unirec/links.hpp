#pragma once

#include "unirec/core.hpp"

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace unirec {

enum class LinkKind {
  Identity,
  IdentityPlusGaussianNoise,
  Sign,
  DitheredSign,
  Modulo,
  LogisticBernoulli,
  AmplitudeAbs,
};

/// Link function y = f(t) applied to each measurement a_i^T x.
///
/// Random variants consume one scalar draw per observation:
///   - IdentityPlusGaussianNoise: a standard normal, y = t + sigma * draw;
///   - DitheredSign: a uniform on [0,1), dither tau = lambda * (2 draw - 1);
///   - LogisticBernoulli: a uniform on [0,1), y = +1 iff draw < 1/(1+e^{-beta t}).
class Link {
 public:
  static Link identity();
  static Link noisy_identity(double sigma);
  static Link sign();
  static Link dithered_sign(double lambda);
  static Link modulo(double lambda);
  static Link logistic(double beta);
  static Link amplitude_abs();

  /// Config names: "identity", "identity+noise", "sign", "dithered-sign",
  /// "modulo", "logistic", "abs". The parameter is ignored by variants that
  /// have none.
  static Link from_name(std::string_view name, double parameter = 0.0);

  LinkKind kind() const noexcept { return kind_; }
  double parameter() const noexcept { return param_; }
  bool is_random() const noexcept;
  /// True when the realized f has at least one jump.
  bool is_discontinuous() const noexcept;
  std::string name() const;

 private:
  Link(LinkKind kind, double param) : kind_(kind), param_(param) {}
  LinkKind kind_;
  double param_;
};

/// sign with sign(0) := +1.
inline double sign_of(double t) { return t >= 0.0 ? 1.0 : -1.0; }

/// m_lambda(t) = t - 2 lambda floor((t + lambda) / (2 lambda)), in [-lambda, lambda).
double modulo_fold(double t, double lambda);

/// f(t) for one observation. Random variants require a draw.
double apply_link(const Link& link, double t, std::optional<double> noise_draw = std::nullopt);

/// Draw of the right distribution for link (0 for deterministic links).
double draw_link_noise(const Link& link, Rng& rng);

/// y_i = f_i(a_i^T x), with link randomness from Rng(seed).
Vec observe(const Link& link, const SensingEnsemble& a, const Vec& x, std::uint64_t seed);

/// E over link randomness of f(t).
double mean_response(const Link& link, double t);

/// Points where mean_response(link, scale * g) is not smooth in g.
std::vector<double> response_breakpoints(const Link& link, double scale, double half_width = 10.0);

enum class ScalingMethod { ClosedForm, Quadrature };
enum class MuMethod { Auto, ClosedForm, Quadrature };

struct ScalingReport {
  double mu = 0.0;
  double rho = 0.0;
  ScalingMethod method = ScalingMethod::ClosedForm;
  int nodes = 0;             // quadrature only
  double error_estimate = 0.0;  // quadrature only
};

/// mu = E[f(g) g], g ~ N(0,1), averaged over link randomness.
/// Throws UnsupportedError for AmplitudeAbs (even link, mu = 0).
ScalingReport compute_mu(const Link& link, MuMethod method = MuMethod::Auto);

/// E[f(s g) g] at signal norm s.
ScalingReport correlation_at_norm(const Link& link, double signal_norm,
                                  MuMethod method = MuMethod::Auto);

/// rho = |E[f(s g) g] / mu - s|.
double compute_rho(const Link& link, double signal_norm, double mu);

// ---------------------------------------------------------------------------
// Regularity audit
// ---------------------------------------------------------------------------

/// Set of discontinuities of f.
struct DiscontinuitySet {
  enum class Kind { None, Points, Progression, RandomSingle };
  Kind kind = Kind::None;
  std::vector<double> points;  // Points
  double offset = 0.0;         // Progression: offset + period * j, j in Z
  double period = 0.0;

  static DiscontinuitySet none() { return {}; }
  static DiscontinuitySet at(std::vector<double> pts);
  static DiscontinuitySet progression(double offset, double period);
  /// One discontinuity per realization, at a draw-dependent location.
  static DiscontinuitySet random_single();

  std::vector<double> within(double lo, double hi) const;
  /// Number of points, or -1 when infinite.
  long count() const;
};

struct LinkRegularity {
  double phi1 = 1.0;
  double phi2 = std::numeric_limits<double>::infinity();
  double phi3 = 0.0;
  double phi4 = 0.0;
  double phi5 = 0.0;
  DiscontinuitySet discontinuities;
};

struct ConditionCheck {
  std::string name;  // "C1".."C5", "declaration", "composite"
  bool passed = true;
  double measured = 0.0;
  double declared = 0.0;
  std::string detail;
};

struct RegularityReport {
  bool passed = true;
  std::vector<ConditionCheck> checks;
  /// Names of the failed conditions, in check order.
  std::vector<std::string> violations() const;
};

/// Numeric audit of the declared regularity constants. f~ = Id - f/mu uses
/// the supplied mu, or compute_mu(link) when absent.
RegularityReport verify_regularity(const Link& link, const LinkRegularity& declared,
                                   double tolerance, std::optional<double> mu = std::nullopt,
                                   double signal_norm = 1.0, std::uint64_t seed = 0);

/// Documented constants for each link at scaling mu.
LinkRegularity default_regularity(const Link& link, double mu);

/// Small-ball constant for modulo links, 2 sqrt(8/pi) e^{-l^2/8} / (1 - e^{-l^2/8}).
double modulo_small_ball_constant(double lambda);

}  // namespace unirec
