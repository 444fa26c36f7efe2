#include "unirec/links.hpp"

#include "unirec/errors.hpp"
#include "unirec/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

namespace unirec {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError(std::string(what) + " must be positive");
}

double logistic_threshold(double draw, double beta) {
  // y = +1 iff draw < 1/(1+e^{-beta t})  <=>  t > logit(draw) / beta.
  const double u = std::clamp(draw, 1e-300, 1.0 - 1e-16);
  return std::log(u / (1.0 - u)) / beta;
}

/// Location of the single discontinuity of a random step link for one draw.
double realized_jump(const Link& link, double draw) {
  switch (link.kind()) {
    case LinkKind::DitheredSign:
      return -link.parameter() * (2.0 * draw - 1.0);
    case LinkKind::LogisticBernoulli:
      return logistic_threshold(draw, link.parameter());
    default:
      return 0.0;
  }
}

double modulo_mu(double lambda) {
  // E[g m_lambda(g)] = 1 - 4 lambda sum_{k>=1} phi((2k-1) lambda).
  double s = 0.0;
  for (int k = 1;; ++k) {
    const double x = (2.0 * k - 1.0) * lambda;
    if (x > 40.0) break;
    s += quad::normal_pdf(x);
  }
  return 1.0 - 4.0 * lambda * s;
}

std::optional<double> closed_form_correlation(const Link& link, double s) {
  const double lam = link.parameter();
  switch (link.kind()) {
    case LinkKind::Identity:
    case LinkKind::IdentityPlusGaussianNoise:
      return s;
    case LinkKind::Sign:
      return std::sqrt(2.0 / std::numbers::pi);
    case LinkKind::DitheredSign: {
      const double c = lam / s;
      return std::erf(c / std::numbers::sqrt2) / c;
    }
    case LinkKind::Modulo:
      return s * modulo_mu(lam / s);
    case LinkKind::AmplitudeAbs:
      return 0.0;
    case LinkKind::LogisticBernoulli:
      return std::nullopt;
  }
  return std::nullopt;
}

ScalingReport quadrature_correlation(const Link& link, double s) {
  auto h = [&](double g) { return mean_response(link, s * g) * g; };
  const auto breaks = response_breakpoints(link, s);
  const quad::Estimate e = breaks.empty() ? quad::gaussian_expectation(h, 200)
                                          : quad::gaussian_expectation_piecewise(h, breaks);
  ScalingReport r;
  r.mu = e.value;
  r.method = ScalingMethod::Quadrature;
  r.nodes = e.nodes;
  r.error_estimate = e.error;
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Link
// ---------------------------------------------------------------------------

Link Link::identity() { return {LinkKind::Identity, 0.0}; }

Link Link::noisy_identity(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ArgumentError("sigma must be >= 0");
  return {LinkKind::IdentityPlusGaussianNoise, sigma};
}

Link Link::sign() { return {LinkKind::Sign, 0.0}; }

Link Link::dithered_sign(double lambda) {
  require_positive(lambda, "dither lambda");
  return {LinkKind::DitheredSign, lambda};
}

Link Link::modulo(double lambda) {
  if (!(lambda >= 0.25) || !std::isfinite(lambda)) {
    throw ArgumentError("modulo link requires lambda >= 1/4");
  }
  return {LinkKind::Modulo, lambda};
}

Link Link::logistic(double beta) {
  require_positive(beta, "logistic beta");
  return {LinkKind::LogisticBernoulli, beta};
}

Link Link::amplitude_abs() { return {LinkKind::AmplitudeAbs, 0.0}; }

Link Link::from_name(std::string_view name, double parameter) {
  if (name == "identity") return identity();
  if (name == "identity+noise") return noisy_identity(parameter);
  if (name == "sign") return sign();
  if (name == "dithered-sign") return dithered_sign(parameter);
  if (name == "modulo") return modulo(parameter);
  if (name == "logistic") return logistic(parameter);
  if (name == "abs") return amplitude_abs();
  throw ArgumentError("unknown link '" + std::string(name) + "'");
}

bool Link::is_random() const noexcept {
  return kind_ == LinkKind::IdentityPlusGaussianNoise || kind_ == LinkKind::DitheredSign ||
         kind_ == LinkKind::LogisticBernoulli;
}

bool Link::is_discontinuous() const noexcept {
  return kind_ == LinkKind::Sign || kind_ == LinkKind::DitheredSign ||
         kind_ == LinkKind::Modulo || kind_ == LinkKind::LogisticBernoulli;
}

std::string Link::name() const {
  switch (kind_) {
    case LinkKind::Identity: return "identity";
    case LinkKind::IdentityPlusGaussianNoise: return "identity+noise";
    case LinkKind::Sign: return "sign";
    case LinkKind::DitheredSign: return "dithered-sign";
    case LinkKind::Modulo: return "modulo";
    case LinkKind::LogisticBernoulli: return "logistic";
    case LinkKind::AmplitudeAbs: return "abs";
  }
  return "?";
}

double modulo_fold(double t, double lambda) {
  return t - 2.0 * lambda * std::floor((t + lambda) / (2.0 * lambda));
}

double apply_link(const Link& link, double t, std::optional<double> noise_draw) {
  if (link.is_random() && !noise_draw) {
    throw ArgumentError("apply_link: random link '" + link.name() + "' needs a noise draw");
  }
  switch (link.kind()) {
    case LinkKind::Identity:
      return t;
    case LinkKind::IdentityPlusGaussianNoise:
      return t + link.parameter() * *noise_draw;
    case LinkKind::Sign:
      return sign_of(t);
    case LinkKind::DitheredSign:
      return sign_of(t + link.parameter() * (2.0 * *noise_draw - 1.0));
    case LinkKind::Modulo:
      return modulo_fold(t, link.parameter());
    case LinkKind::LogisticBernoulli: {
      const double p = 1.0 / (1.0 + std::exp(-link.parameter() * t));
      return *noise_draw < p ? 1.0 : -1.0;
    }
    case LinkKind::AmplitudeAbs:
      return std::abs(t);
  }
  return t;
}

double draw_link_noise(const Link& link, Rng& rng) {
  switch (link.kind()) {
    case LinkKind::IdentityPlusGaussianNoise:
      return rng.normal();
    case LinkKind::DitheredSign:
    case LinkKind::LogisticBernoulli:
      return rng.uniform();
    default:
      return 0.0;
  }
}

Vec observe(const Link& link, const SensingEnsemble& a, const Vec& x, std::uint64_t seed) {
  const Vec t = a.apply(x);
  Vec y(t.size());
  Rng rng(seed);
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    y[i] = link.is_random() ? apply_link(link, t[i], draw_link_noise(link, rng))
                            : apply_link(link, t[i]);
  }
  return y;
}

double mean_response(const Link& link, double t) {
  switch (link.kind()) {
    case LinkKind::IdentityPlusGaussianNoise:
      return t;
    case LinkKind::DitheredSign:
      return std::clamp(t / link.parameter(), -1.0, 1.0);
    case LinkKind::LogisticBernoulli:
      return std::tanh(0.5 * link.parameter() * t);
    default:
      return apply_link(link, t);
  }
}

std::vector<double> response_breakpoints(const Link& link, double scale, double half_width) {
  std::vector<double> out;
  const double lam = link.parameter();
  switch (link.kind()) {
    case LinkKind::Sign:
    case LinkKind::AmplitudeAbs:
    case LinkKind::LogisticBernoulli:  // steep at zero for large beta
      out.push_back(0.0);
      break;
    case LinkKind::DitheredSign:
      out = {-lam / scale, lam / scale};
      break;
    case LinkKind::Modulo:
      for (long j = -static_cast<long>(half_width * scale / (2.0 * lam)) - 2;; ++j) {
        const double xi = ((2.0 * j - 1.0) * lam) / scale;
        if (xi > half_width) break;
        if (xi >= -half_width) out.push_back(xi);
      }
      break;
    default:
      break;
  }
  return out;
}

ScalingReport correlation_at_norm(const Link& link, double signal_norm, MuMethod method) {
  require_positive(signal_norm, "signal norm");
  if (method != MuMethod::Quadrature) {
    if (auto c = closed_form_correlation(link, signal_norm)) {
      ScalingReport r;
      r.mu = *c;
      r.method = ScalingMethod::ClosedForm;
      return r;
    }
    if (method == MuMethod::ClosedForm) {
      throw UnsupportedError("no closed form for link '" + link.name() + "'");
    }
  }
  return quadrature_correlation(link, signal_norm);
}

ScalingReport compute_mu(const Link& link, MuMethod method) {
  if (link.kind() == LinkKind::AmplitudeAbs) {
    throw UnsupportedError(
        "compute_mu: the amplitude link is even, so E[f(g) g] = 0 and the scaled l2 gradient "
        "cannot recover the signal");
  }
  ScalingReport r = correlation_at_norm(link, 1.0, method);
  r.rho = 0.0;
  return r;
}

double compute_rho(const Link& link, double signal_norm, double mu) {
  if (mu == 0.0 || !std::isfinite(mu)) throw ArgumentError("compute_rho: mu must be nonzero");
  const double c = correlation_at_norm(link, signal_norm).mu;
  return std::abs(c / mu - signal_norm);
}

// ---------------------------------------------------------------------------
// Discontinuities
// ---------------------------------------------------------------------------

DiscontinuitySet DiscontinuitySet::at(std::vector<double> pts) {
  DiscontinuitySet d;
  d.kind = pts.empty() ? Kind::None : Kind::Points;
  std::sort(pts.begin(), pts.end());
  d.points = std::move(pts);
  return d;
}

DiscontinuitySet DiscontinuitySet::progression(double offset, double period) {
  require_positive(period, "progression period");
  DiscontinuitySet d;
  d.kind = Kind::Progression;
  d.offset = offset;
  d.period = period;
  return d;
}

DiscontinuitySet DiscontinuitySet::random_single() {
  DiscontinuitySet d;
  d.kind = Kind::RandomSingle;
  return d;
}

std::vector<double> DiscontinuitySet::within(double lo, double hi) const {
  std::vector<double> out;
  switch (kind) {
    case Kind::Points:
      for (double p : points) {
        if (p >= lo && p <= hi) out.push_back(p);
      }
      break;
    case Kind::Progression: {
      const long j0 = static_cast<long>(std::floor((lo - offset) / period));
      for (long j = j0;; ++j) {
        const double p = offset + period * static_cast<double>(j);
        if (p > hi) break;
        if (p >= lo) out.push_back(p);
      }
      break;
    }
    default:
      break;
  }
  return out;
}

long DiscontinuitySet::count() const {
  switch (kind) {
    case Kind::None: return 0;
    case Kind::Points: return static_cast<long>(points.size());
    case Kind::Progression: return -1;
    case Kind::RandomSingle: return 1;
  }
  return 0;
}

std::vector<std::string> RegularityReport::violations() const {
  std::vector<std::string> out;
  for (const auto& c : checks) {
    if (!c.passed) out.push_back(c.name);
  }
  return out;
}

double modulo_small_ball_constant(double lambda) {
  const double q = std::exp(-lambda * lambda / 8.0);
  return 2.0 * std::sqrt(8.0 / std::numbers::pi) * q / (1.0 - q);
}

LinkRegularity default_regularity(const Link& link, double mu) {
  if (mu == 0.0) throw ArgumentError("default_regularity: mu must be nonzero");
  const double amu = std::abs(mu);
  const double slope = std::abs(1.0 - 1.0 / mu);
  const double small_ball_single = std::sqrt(2.0 / std::numbers::pi);
  LinkRegularity r;
  switch (link.kind()) {
    case LinkKind::Identity:
      r.phi1 = 0.75 * slope;
      r.phi4 = slope;
      break;
    case LinkKind::IdentityPlusGaussianNoise: {
      const double sigma = link.parameter();
      r.phi1 = 0.75 * std::sqrt(slope * slope + sigma * sigma / (mu * mu));
      r.phi4 = slope;
      break;
    }
    case LinkKind::Sign:
      r.phi1 = 0.75 * (1.0 + 1.0 / amu);
      r.phi3 = 2.0;
      r.phi4 = 1.0;
      r.phi5 = small_ball_single;
      r.discontinuities = DiscontinuitySet::at({0.0});
      break;
    case LinkKind::DitheredSign:
    case LinkKind::LogisticBernoulli:
      r.phi1 = 0.75 * (1.0 + 1.0 / amu);
      r.phi3 = 2.0;
      r.phi4 = 1.0;
      r.phi5 = small_ball_single;
      r.discontinuities = DiscontinuitySet::random_single();
      break;
    case LinkKind::Modulo: {
      const double lam = link.parameter();
      r.phi1 = 0.75 * (1.0 + 1.0 / amu);
      r.phi2 = 2.0 * lam;
      r.phi3 = 2.0 * lam;
      r.phi4 = slope;
      r.phi5 = modulo_small_ball_constant(lam);
      r.discontinuities = DiscontinuitySet::progression(lam, 2.0 * lam);
      break;
    }
    case LinkKind::AmplitudeAbs:
      throw UnsupportedError("default_regularity: amplitude link has no scaling mu");
  }
  return r;
}

// ---------------------------------------------------------------------------
// verify_regularity
// ---------------------------------------------------------------------------

namespace {

struct Audit {
  const Link& link;
  const LinkRegularity& decl;
  double tol;
  double mu;
  double s;
  std::uint64_t seed;

  double f(double t, double draw) const {
    return link.is_random() ? apply_link(link, t, draw) : apply_link(link, t);
  }
  double ftilde(double t, double draw) const { return t - f(t, draw) / mu; }

  /// Realized discontinuities in [lo, hi] for one draw.
  std::vector<double> jumps(double lo, double hi, double draw) const {
    if (decl.discontinuities.kind == DiscontinuitySet::Kind::RandomSingle) {
      const double xi = realized_jump(link, draw);
      if (xi >= lo && xi <= hi) return {xi};
      return {};
    }
    return decl.discontinuities.within(lo, hi);
  }

  ConditionCheck declaration() const {
    ConditionCheck c{"declaration", true, 0.0, 0.0, ""};
    const long cnt = decl.discontinuities.count();
    std::ostringstream why;
    if (cnt >= 0 && cnt <= 1 && !std::isinf(decl.phi2)) {
      c.passed = false;
      why << "at most one discontinuity requires phi2 = inf; ";
    }
    const bool declared_jumps = decl.discontinuities.kind != DiscontinuitySet::Kind::None;
    if (declared_jumps != (decl.phi3 > 0.0)) {
      c.passed = false;
      why << "phi3 must be zero exactly when no discontinuity is declared; ";
    }
    if (link.is_discontinuous() && !declared_jumps) {
      c.passed = false;
      why << "link is discontinuous but no discontinuity is declared; ";
    }
    c.detail = why.str();
    return c;
  }

  ConditionCheck c1() const {
    ConditionCheck c{"C1", true, 0.0, decl.phi1, "max_p (E|f~|^p)^(1/p)/sqrt(p)"};
    std::array<double, 5> moments{};
    constexpr std::array<int, 5> ps{2, 4, 6, 8, 10};
    if (link.is_random()) {
      Rng rng(derive_seed(seed, {1}));
      constexpr int samples = 200000;
      for (int i = 0; i < samples; ++i) {
        const double g = rng.normal();
        const double v = std::abs(ftilde(s * g, draw_link_noise(link, rng)));
        for (std::size_t j = 0; j < ps.size(); ++j) moments[j] += std::pow(v, ps[j]);
      }
      for (double& mo : moments) mo /= samples;
    } else {
      const auto breaks = response_breakpoints(link, s);
      for (std::size_t j = 0; j < ps.size(); ++j) {
        const int p = ps[j];
        auto h = [&](double g) { return std::pow(std::abs(ftilde(s * g, 0.0)), p); };
        moments[j] = breaks.empty() ? quad::gaussian_expectation(h).value
                                    : quad::gaussian_expectation_piecewise(h, breaks).value;
      }
    }
    for (std::size_t j = 0; j < ps.size(); ++j) {
      c.measured = std::max(c.measured, std::pow(moments[j], 1.0 / ps[j]) / std::sqrt(ps[j]));
    }
    c.passed = c.measured <= decl.phi1 + tol;
    return c;
  }

  ConditionCheck c2() const {
    ConditionCheck c{"C2", true, kInf, decl.phi2, ""};
    const auto& d = decl.discontinuities;
    if (d.kind == DiscontinuitySet::Kind::Points && d.points.size() >= 2) {
      for (std::size_t i = 1; i < d.points.size(); ++i) {
        c.measured = std::min(c.measured, d.points[i] - d.points[i - 1]);
      }
    } else if (d.kind == DiscontinuitySet::Kind::Progression) {
      c.measured = d.period;
    }
    c.passed = std::isinf(decl.phi2) ? std::isinf(c.measured) : c.measured >= decl.phi2 - tol;
    if (!c.passed) c.detail = "declared discontinuities closer than phi2";

    if (!link.is_random()) {
      // Scan for jumps that were not declared.
      const double h = 1e-3;
      const double lf = std::abs(mu) * (1.0 + decl.phi4);
      const double thresh = 2.0 * lf * h + 1e-3;
      const double lo = -8.0 * s;
      const double hi = 8.0 * s;
      for (double t = lo; t < hi; t += h) {
        if (std::abs(f(t + h, 0.0) - f(t, 0.0)) > thresh && jumps(t - h, t + 2.0 * h, 0.0).empty()) {
          c.passed = false;
          std::ostringstream why;
          why << "undeclared discontinuity near " << t;
          c.detail = why.str();
          break;
        }
      }
    }
    return c;
  }

  ConditionCheck c3() const {
    ConditionCheck c{"C3", true, 0.0, decl.phi3, "max jump height at declared points"};
    constexpr double e = 1e-9;
    const double lo = -8.0 * s - 1.0;
    const double hi = 8.0 * s + 1.0;
    if (link.is_random()) {
      Rng rng(derive_seed(seed, {3}));
      for (int i = 0; i < 64; ++i) {
        const double draw = draw_link_noise(link, rng);
        for (double xi : jumps(lo, hi, draw)) {
          c.measured = std::max(c.measured, std::abs(f(xi + e, draw) - f(xi - e, draw)));
        }
      }
    } else {
      for (double xi : jumps(lo, hi, 0.0)) {
        const double step = e * std::max(1.0, std::abs(xi));
        c.measured = std::max(c.measured, std::abs(f(xi + step, 0.0) - f(xi - step, 0.0)));
      }
    }
    c.passed = c.measured <= decl.phi3 + tol;
    return c;
  }

  ConditionCheck c4() const {
    ConditionCheck c{"C4", true, 0.0, decl.phi4, "max difference quotient of f~ within pieces"};
    Rng rng(derive_seed(seed, {4}));
    const double span = std::isinf(decl.phi2) ? 0.5 : std::min(0.5, 0.25 * decl.phi2);
    for (int i = 0; i < 4000; ++i) {
      const double draw = draw_link_noise(link, rng);
      const double t1 = s * 8.0 * (2.0 * rng.uniform() - 1.0);
      const double t2 = t1 + span * (2.0 * rng.uniform() - 1.0);
      if (t1 == t2) continue;
      const double lo = std::min(t1, t2) - 1e-7;
      const double hi = std::max(t1, t2) + 1e-7;
      if (!jumps(lo, hi, draw).empty()) continue;
      const double q = std::abs(ftilde(t1, draw) - ftilde(t2, draw)) / std::abs(t1 - t2);
      c.measured = std::max(c.measured, q);
    }
    c.passed = c.measured <= decl.phi4 + tol;
    return c;
  }

  double small_ball_probability(double t, double draw) const {
    double p = 0.0;
    for (double xi : jumps(-12.0 * s - t, 12.0 * s + t, draw)) {
      p += quad::normal_cdf((xi + t) / s) - quad::normal_cdf((xi - t) / s);
    }
    return p;
  }

  ConditionCheck c5() const {
    ConditionCheck c{"C5", true, 0.0, decl.phi5, "max_t P(dist(s g, D) <= t) / t"};
    if (decl.discontinuities.kind == DiscontinuitySet::Kind::None) return c;
    const double tmax = std::min(std::isinf(decl.phi2) ? 1.0 : decl.phi2 / 4.0, 1.0);
    std::vector<double> draws{0.0};
    if (decl.discontinuities.kind == DiscontinuitySet::Kind::RandomSingle) {
      Rng rng(derive_seed(seed, {5}));
      draws.clear();
      for (int i = 0; i < 256; ++i) draws.push_back(draw_link_noise(link, rng));
    }
    constexpr int grid = 50;
    for (int j = 1; j <= grid; ++j) {
      const double t = tmax * j / grid * (1.0 - 1e-9);
      double p = 0.0;
      for (double d : draws) p += small_ball_probability(t, d);
      p /= static_cast<double>(draws.size());
      c.measured = std::max(c.measured, p / t);
    }
    c.passed = c.measured <= decl.phi5 + tol;
    return c;
  }

  ConditionCheck composite() const {
    ConditionCheck c{"composite", true, 0.0, 0.0,
                     "max of |f~(b1)-f~(b2)| minus the piecewise bound"};
    Rng rng(derive_seed(seed, {6}));
    const double jump_cost = decl.phi3 / std::abs(mu);
    c.measured = -kInf;
    for (int i = 0; i < 10000; ++i) {
      const double draw = draw_link_noise(link, rng);
      const double b1 = 2.0 * s * rng.normal();
      const double delta = (i % 2 == 0 ? s : 0.05 * s) * rng.normal();
      const double b2 = b1 + delta;
      const double lhs = std::abs(ftilde(b1, draw) - ftilde(b2, draw));
      const double gaps = std::isinf(decl.phi2) ? 0.0 : std::abs(delta) / decl.phi2;
      const double rhs = decl.phi4 * std::abs(delta) + (gaps + 1.0) * jump_cost;
      c.measured = std::max(c.measured, lhs - rhs);
    }
    c.passed = c.measured <= tol;
    return c;
  }
};

}  // namespace

RegularityReport verify_regularity(const Link& link, const LinkRegularity& declared,
                                   double tolerance, std::optional<double> mu,
                                   double signal_norm, std::uint64_t seed) {
  require_positive(tolerance, "tolerance");
  require_positive(signal_norm, "signal norm");
  const double scale = mu ? *mu : compute_mu(link).mu;
  if (scale == 0.0) throw ArgumentError("verify_regularity: mu must be nonzero");
  if (link.kind() == LinkKind::AmplitudeAbs) {
    throw UnsupportedError("verify_regularity: amplitude link is outside the single-index model");
  }
  const Audit audit{link, declared, tolerance, scale, signal_norm, seed};
  RegularityReport report;
  report.checks = {audit.declaration(), audit.c1(), audit.c2(), audit.c3(),
                   audit.c4(),          audit.c5(), audit.composite()};
  report.passed = std::all_of(report.checks.begin(), report.checks.end(),
                              [](const ConditionCheck& c) { return c.passed; });
  return report;
}

}  // namespace unirec
