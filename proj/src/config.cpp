#include "unirec/config.hpp"

#include "unirec/errors.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace unirec {
namespace {

using nlohmann::json;

/// Reads keys from one JSON object and rejects anything left unread.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("must be an object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) fail("missing required key '" + key + "'");
    return j_.at(key);
  }

  double real(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    return real(key);
  }
  double real(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) fail("'" + key + "' must be a number");
    return v.get<double>();
  }
  std::optional<double> optional_real(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return real(key);
  }

  long long integer(const std::string& key, long long fallback) {
    if (!has(key)) return fallback;
    return integer_of(raw(key), key);
  }
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      fail("'" + key + "' must be a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) fail("'" + key + "' must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    return string(key);
  }
  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) fail("'" + key + "' must be a string");
    return v.get<std::string>();
  }

  std::vector<long long> integer_list(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array() || v.empty()) fail("'" + key + "' must be a nonempty array of integers");
    std::vector<long long> out;
    for (const auto& e : v) out.push_back(integer_of(e, key));
    return out;
  }

  std::optional<Section> child(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return Section(j_.at(key), path_ + key + ".");
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) fail("unknown key '" + it.key() + "'");
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("config" + (path_.empty() ? std::string() : " '" + path_.substr(0, path_.size() - 1) + "'") +
                      ": " + msg);
  }

 private:
  long long integer_of(const json& v, const std::string& key) const {
    if (!v.is_number_integer()) fail("'" + key + "' must be an integer");
    return v.get<long long>();
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

void apply_override(json& doc, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + kv + "' must look like KEY=VALUE");
  }
  const std::string key = kv.substr(0, eq);
  const std::string text = kv.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override '" + kv + "' has an empty key segment");
    if (!node->is_object()) throw ConfigError("override '" + kv + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part)) (*node)[part] = json::object();
    node = &(*node)[part];
    start = dot + 1;
  }
}

Link parse_link(Section s) {
  const std::string name = s.string("name");
  double param = 0.0;
  if (name == "identity+noise") param = s.real("sigma");
  else if (name == "dithered-sign" || name == "modulo") param = s.real("lambda");
  else if (name == "logistic") param = s.real("beta");
  s.finish();
  return Link::from_name(name, param);
}

CorruptionSpec parse_corruption(Section s) {
  const std::string name = s.string("name");
  double param = 0.0;
  std::string heuristic;
  if (name == "gaussian") {
    param = s.real("sigma");
  } else if (name == "l2-budget") {
    param = s.real("beta");
    heuristic = s.string("heuristic", "");
  } else if (name == "bit-flips") {
    param = s.real("eta");
    heuristic = s.string("heuristic", "");
  }
  s.finish();
  return CorruptionSpec::from_name(name, param, heuristic);
}

void parse_solver(Section s, ExperimentSpec& spec) {
  spec.gradient = s.string("gradient", "scaled-l2");
  spec.solver.eta = s.optional_real("eta");
  spec.solver.max_iters = static_cast<int>(s.integer("max_iters", 100));
  spec.solver.normalize = s.boolean("normalize", false);
  spec.solver.target_norm = s.real("target_norm", 1.0);
  const std::string x0 = s.string("x0", "zero");
  const double delta = s.real("delta", 0.1);
  if (x0 == "zero") spec.solver.x0 = InitPolicy::zero();
  else if (x0 == "near-truth") spec.solver.x0 = InitPolicy::near_truth(delta);
  else s.fail("'x0' must be \"zero\" or \"near-truth\"");
  spec.solver.stop_tol = s.real("stop_tol", 0.0);
  if (spec.solver.max_iters < 0) s.fail("'max_iters' must be >= 0");
  if (spec.solver.stop_tol < 0.0) s.fail("'stop_tol' must be >= 0");
  s.finish();
}

Config build(const json& doc) {
  Config cfg;
  Section top(doc, "");
  const json& version = top.raw("schema_version");
  if (!version.is_number_integer() || version.get<long long>() != kSchemaVersion) {
    top.fail("'schema_version' must be " + std::to_string(kSchemaVersion));
  }
  ExperimentSpec& spec = cfg.spec;
  spec.experiment_id = top.string("experiment_id", "experiment");
  spec.setting = setting_from_name(top.string("setting", "a"));
  spec.c_star = top.real("c_star", 0.8);
  auto link = top.child("link");
  if (!link) top.fail("missing required key 'link'");
  spec.link = parse_link(*link);
  if (top.has("mu")) {
    const json& mu = top.raw("mu");
    if (mu.is_string() && mu.get<std::string>() == "computed") spec.mu.reset();
    else if (mu.is_number()) spec.mu = mu.get<double>();
    else top.fail("'mu' must be \"computed\" or a number");
  }
  if (auto c = top.child("constraint")) {
    spec.constraint_name = c->string("name");
    spec.constraint_param = c->real("param");
    c->finish();
    ConstraintSet::from_name(*spec.constraint_name, spec.constraint_param);
  }
  if (auto s = top.child("solver")) parse_solver(*s, spec);

  {
    Section g(top.raw("grid"), "grid.");
    const auto ns = g.integer_list("n");
    const auto ks = g.integer_list("k");
    const auto ms = g.integer_list("m");
    g.finish();
    for (long long n : ns) {
      for (long long k : ks) {
        for (long long m : ms) {
          if (n < 1 || k < 1 || m < 1 || k > n) g.fail("needs n, m >= 1 and 1 <= k <= n");
          spec.grid.push_back({n, k, m});
        }
      }
    }
  }
  spec.trials = static_cast<int>(top.integer("trials", 1));
  spec.signals_per_trial = static_cast<int>(top.integer("signals_per_trial", 1));
  if (spec.trials < 1) top.fail("'trials' must be >= 1");
  if (spec.signals_per_trial < 1) top.fail("'signals_per_trial' must be >= 1");
  if (auto p = top.child("signal_policy")) {
    const std::string name = p->string("name");
    if (name == "adversarial-search") {
      AdversarialSearch a;
      a.restarts = static_cast<int>(p->integer("restarts", 1));
      a.steps = static_cast<int>(p->integer("steps", 10));
      a.step_size = p->real("step_size", 0.1);
      if (a.restarts < 0 || a.steps < 0 || !(a.step_size > 0.0)) {
        p->fail("restarts and steps must be >= 0 and step_size > 0");
      }
      spec.search = a;
    } else if (name != "uniform-sparse-sphere") {
      p->fail("'name' must be \"uniform-sparse-sphere\" or \"adversarial-search\"");
    }
    p->finish();
  }
  if (auto c = top.child("corruption")) spec.corruption = parse_corruption(*c);
  spec.master_seed = top.unsigned_integer("master_seed", 0);
  spec.timing = top.boolean("timing", false);
  spec.threads = static_cast<int>(top.integer("threads", 1));
  if (spec.threads < 0) top.fail("'threads' must be >= 0");

  if (auto r = top.child("raic")) {
    cfg.raic.n_pairs = static_cast<int>(r->integer("n_pairs", 500));
    cfg.raic.pairs_per_signal = static_cast<int>(r->integer("pairs_per_signal", 10));
    cfg.raic.sampler = sampler_from_name(r->string("sampler", "trajectory"));
    cfg.raic.phi = r->optional_real("phi");
    cfg.raic.eta = r->optional_real("eta");
    r->finish();
  }
  if (auto b = top.child("bounds")) {
    const std::string mode = b->string("mode", "cone-xi");
    if (mode == "cone-xi") cfg.bounds.mode = BoundMode::ConeXi;
    else if (mode == "convex-upsilon") cfg.bounds.mode = BoundMode::ConvexUpsilon;
    else b->fail("'mode' must be \"cone-xi\" or \"convex-upsilon\"");
    cfg.bounds.eps = b->real("eps", 0.1);
    cfg.bounds.zeta = b->real("zeta", 0.01);
    cfg.bounds.phi = b->optional_real("phi");
    if (b->has("m")) {
      for (long long m : b->integer_list("m")) cfg.bounds.m.push_back(static_cast<double>(m));
    }
    cfg.bounds.width_samples = static_cast<int>(b->integer("width_samples", 2000));
    if (cfg.bounds.width_samples < 1) b->fail("'width_samples' must be >= 1");
    b->finish();
  }
  if (auto r = top.child("report")) {
    if (r->has("inputs")) {
      const json& in = r->raw("inputs");
      if (!in.is_array()) r->fail("'inputs' must be an array of paths");
      for (const auto& p : in) {
        if (!p.is_string()) r->fail("'inputs' must be an array of paths");
        cfg.report.inputs.push_back(p.get<std::string>());
      }
    }
    if (r->has("overlay")) cfg.report.overlay = r->string("overlay");
    cfg.report.output = r->string("output", "report.csv");
    r->finish();
  }
  top.finish();
  // Resolve each grid point once so bad combinations fail here, not mid-run.
  for (const GridPoint& p : spec.grid) {
    build_model(spec, p);
    SignalClass(spec.setting, p.n, p.k, spec.c_star);
  }
  return cfg;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Config parse_config(const std::string& text, const std::vector<std::string>& overrides,
                    const char* env_seed) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: malformed JSON at " + line_column(text, e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  if (env_seed && *env_seed) {
    try {
      std::size_t used = 0;
      const unsigned long long seed = std::stoull(env_seed, &used);
      if (used != std::string(env_seed).size()) throw std::invalid_argument(env_seed);
      doc["master_seed"] = seed;
    } catch (const std::exception&) {
      throw ConfigError(std::string("RAIC_SEED must be a nonnegative integer, got '") + env_seed + "'");
    }
  }
  for (const auto& kv : overrides) apply_override(doc, kv);
  Config cfg;
  try {
    cfg = build(doc);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.overrides = overrides;
  cfg.canonical = doc.dump();
  cfg.hash = fnv1a64(cfg.canonical);
  return cfg;
}

Config load_config(const std::string& path, const std::vector<std::string>& overrides,
                   const char* env_seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides, env_seed);
}

}  // namespace unirec
