#include "unirec/cli.hpp"

#include "unirec/config.hpp"
#include "unirec/csv.hpp"
#include "unirec/errors.hpp"
#include "unirec/experiments.hpp"
#include "unirec/raic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

namespace unirec {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

enum class Level { Error = 0, Info = 1, Debug = 2 };

struct Options {
  std::string config_path;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  std::optional<int> threads;
  std::string log = "info";
};

class Logger {
 public:
  Logger(std::ostream& err, Level level) : err_(err), level_(level) {}
  void info(const std::string& msg) const { emit(Level::Info, msg); }
  void debug(const std::string& msg) const { emit(Level::Debug, msg); }
  void error(const std::string& msg) const { emit(Level::Error, msg); }

 private:
  void emit(Level l, const std::string& msg) const {
    if (static_cast<int>(l) <= static_cast<int>(level_)) err_ << "unirec: " << msg << '\n';
  }
  std::ostream& err_;
  Level level_;
};

Level parse_level(const std::string& s) {
  if (s == "error") return Level::Error;
  if (s == "debug") return Level::Debug;
  return Level::Info;
}

Provenance provenance(const Config& cfg, const std::string& command) {
  Provenance p;
  p.add("tool", kToolVersion);
  p.add("command", command);
  p.add("schema_version", std::to_string(kSchemaVersion));
  p.add("master_seed", std::to_string(cfg.spec.master_seed));
  p.add("config_hash", hex64(cfg.hash));
  for (const auto& o : cfg.overrides) p.add("override", o);
  return p;
}

ordered_json provenance_json(const Config& cfg, const std::string& command) {
  ordered_json j;
  j["tool"] = kToolVersion;
  j["command"] = command;
  j["schema_version"] = kSchemaVersion;
  j["master_seed"] = cfg.spec.master_seed;
  j["config_hash"] = hex64(cfg.hash);
  j["overrides"] = cfg.overrides;
  return j;
}

std::ofstream open_output(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  return f;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read " + path);
  return f;
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

// The single instance used by gen, recover and certify-raic: grid point 0,
// trial 0, signal 0.
struct Instance {
  GridPoint point;
  std::uint64_t ensemble_seed = 0;
  std::uint64_t signal_seed = 0;
  SensingEnsemble a;
  Vec x;
  Vec y;
  Vec y_corrupt;
  RecoveryModel model;
};

Instance make_instance(const Config& cfg) {
  const ExperimentSpec& spec = cfg.spec;
  const GridPoint p = spec.grid.front();
  const std::uint64_t es = trial_seed(spec.master_seed, 0, 0);
  const std::uint64_t ss = derive_seed(es, {0});
  SensingEnsemble a = gaussian_ensemble(p.m, p.n, es);
  RecoveryModel model = build_model(spec, p);
  const SignalClass signals(spec.setting, p.n, p.k, spec.c_star);
  Rng rng(derive_seed(ss, {0}));
  Vec x = signals.sample(rng);
  Vec y = observe(model.link, a, x, derive_seed(ss, {1}));
  Vec yc = inject_corruption(model.corruption, a, x, y, derive_seed(ss, {2}));
  return {p, es, ss, std::move(a), std::move(x), std::move(y), std::move(yc), std::move(model)};
}

int cmd_gen(const Config& cfg, const Options& opt, std::ostream& out, const Logger& log) {
  const Instance inst = make_instance(cfg);
  const fs::path dir(opt.out_dir);

  {
    std::ofstream f = open_output(dir / "ensemble.csv");
    Provenance prov = provenance(cfg, "gen");
    prov.add("ensemble_seed", std::to_string(inst.ensemble_seed));
    std::vector<std::string> header;
    for (Eigen::Index j = 0; j < inst.point.n; ++j) header.push_back("a" + std::to_string(j));
    std::vector<std::vector<std::string>> rows;
    rows.reserve(static_cast<std::size_t>(inst.point.m));
    for (Eigen::Index i = 0; i < inst.point.m; ++i) {
      std::vector<std::string> row;
      row.reserve(static_cast<std::size_t>(inst.point.n));
      for (Eigen::Index j = 0; j < inst.point.n; ++j) row.push_back(format_real(inst.a.matrix()(i, j)));
      rows.push_back(std::move(row));
    }
    write_table(f, header, rows, prov);
  }

  ordered_json j = provenance_json(cfg, "gen");
  j["setting"] = setting_name(cfg.spec.setting);
  j["link"] = inst.model.link.name();
  j["corruption"] = inst.model.corruption.label();
  j["n"] = inst.point.n;
  j["k"] = inst.point.k;
  j["m"] = inst.point.m;
  j["ensemble_seed"] = inst.ensemble_seed;
  j["signal_seed"] = inst.signal_seed;
  j["signal"] = to_std(inst.x);
  j["observations"] = to_std(inst.y);
  j["corrupted_observations"] = to_std(inst.y_corrupt);
  {
    std::ofstream f = open_output(dir / "instance.json");
    f << j.dump(2) << '\n';
  }
  log.info("gen: wrote " + (dir / "ensemble.csv").string() + " and " +
           (dir / "instance.json").string());
  out << "m=" << inst.point.m << " n=" << inst.point.n << " k=" << inst.point.k
      << " ensemble_seed=" << inst.ensemble_seed << '\n';
  return kExitOk;
}

void write_trajectory(const Config& cfg, const fs::path& path, const Trajectory& tr) {
  std::ofstream f = open_output(path);
  Provenance prov = provenance(cfg, "recover");
  prov.add("error_metric", tr.phaseless ? "phaseless" : "euclidean");
  std::vector<std::vector<std::string>> rows;
  for (std::size_t t = 0; t < tr.errors.size(); ++t) {
    rows.push_back({std::to_string(t), format_real(tr.errors[t])});
  }
  write_table(f, {"t", "error"}, rows, prov);
}

int cmd_recover(const Config& cfg, const Options& opt, std::ostream& out, const Logger& log) {
  const Instance inst = make_instance(cfg);
  SolverConfig sc = inst.model.solver;
  sc.keep_iterates = false;
  sc.init_seed = derive_seed(inst.signal_seed, {3});
  const fs::path path = fs::path(opt.out_dir) / "trajectory.csv";
  Trajectory tr;
  try {
    tr = pgd_run(sc, inst.a, inst.y_corrupt, inst.model.set, inst.model.op, inst.x);
  } catch (const DivergedError& e) {
    write_trajectory(cfg, path, e.partial());
    throw;
  }
  write_trajectory(cfg, path, tr);
  log.info("recover: wrote " + path.string());

  out << "initial_error " << format_real(tr.errors.front()) << '\n';
  if (tr.iters_run == 0) return kExitOk;
  out << "iters_run " << tr.iters_run << '\n';
  out << "final_error " << format_real(tr.errors.back()) << '\n';
  out << "min_error " << format_real(*std::min_element(tr.errors.begin(), tr.errors.end()))
      << '\n';
  if (tr.oracle_init) out << "oracle_init 1\n";
  return kExitOk;
}

int cmd_certify(const Config& cfg, const Options& opt, std::ostream& out, const Logger& log) {
  const ExperimentSpec& spec = cfg.spec;
  const GridPoint p = spec.grid.front();
  const std::uint64_t es = trial_seed(spec.master_seed, 0, 0);
  const SensingEnsemble a = gaussian_ensemble(p.m, p.n, es);
  const RecoveryModel model = build_model(spec, p);
  const SignalClass signals(spec.setting, p.n, p.k, spec.c_star);

  CertifyOptions co;
  co.sampler = cfg.raic.sampler;
  co.n_pairs = cfg.raic.n_pairs;
  co.pairs_per_signal = cfg.raic.pairs_per_signal;
  co.eta = cfg.raic.eta;
  co.mu = model.mu;
  co.phi = cfg.raic.phi;
  co.seed = derive_seed(spec.master_seed, {0xce27ULL});
  co.signal_k = p.k;
  co.signal_sampler = [&signals](Rng& rng) { return signals.sample(rng); };
  log.debug("certify-raic: " + std::to_string(co.n_pairs) + " pairs, sampler " +
            sampler_name(co.sampler));
  const RaicCertificate cert = certify_raic(a, model.link, model.set, co);

  ordered_json j = provenance_json(cfg, "certify-raic");
  j["ensemble_seed"] = es;
  j["link"] = model.link.name();
  j["constraint"] = model.set.name();
  j["n"] = p.n;
  j["k"] = p.k;
  j["m"] = p.m;
  j["mu"] = model.mu;
  j["contracting"] = cert.mu1_hat < 0.5;
  j["certificate"] = ordered_json::parse(certificate_to_json(cert));
  const std::string text = j.dump(2);
  const fs::path path = fs::path(opt.out_dir) / "certificate.json";
  {
    std::ofstream f = open_output(path);
    f << text << '\n';
  }
  log.info("certify-raic: wrote " + path.string());
  out << text << '\n';
  return kExitOk;
}

int cmd_sweep(const Config& cfg, const Options& opt, std::ostream& out, const Logger& log) {
  ExperimentSpec spec = cfg.spec;
  if (opt.threads) spec.threads = *opt.threads;
  if (spec.threads == 0) spec.threads = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  log.debug("sweep: " + std::to_string(spec.grid.size()) + " grid points, " +
            std::to_string(spec.threads) + " threads");
  const std::vector<TrialRecord> records = run_sweep(spec);

  const fs::path path = fs::path(opt.out_dir) / (spec.experiment_id + ".csv");
  {
    std::ofstream f = open_output(path);
    Provenance prov = provenance(cfg, "sweep");
    prov.add("generator", "run_sweep");
    prov.add("value", "empirical worst case (lower bound)");
    write_trial_csv(f, records, prov);
  }
  log.info("sweep: wrote " + std::to_string(records.size()) + " rows to " + path.string());

  const auto pts = median_worst_error(records);
  for (const auto& [m, e] : pts) out << "m=" << m << " median_worst=" << format_real(e) << '\n';
  if (pts.size() >= 3) {
    const SlopeFit fit = fit_loglog_slope(pts);
    out << "slope " << format_real(fit.slope) << " r2 " << format_real(fit.r2) << '\n';
  }
  return kExitOk;
}

int cmd_bounds(const Config& cfg, const Options& opt, std::ostream& out, const Logger& log) {
  const ExperimentSpec& spec = cfg.spec;
  const BoundsSettings& bs = cfg.bounds;

  // (n, k) pairs in grid order, each with its m values.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes;
  std::map<std::pair<Eigen::Index, Eigen::Index>, std::vector<double>> ms;
  for (const GridPoint& p : spec.grid) {
    const auto key = std::make_pair(p.n, p.k);
    if (!ms.count(key)) shapes.push_back(key);
    auto& v = ms[key];
    if (std::find(v.begin(), v.end(), double(p.m)) == v.end()) v.push_back(double(p.m));
  }

  std::vector<std::vector<std::string>> rows;
  int domain_errors = 0;
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    const auto [n, k] = shapes[s];
    const GridPoint p{n, k, 1};
    const RecoveryModel model = build_model(spec, p);
    const LinkRegularity reg = default_regularity(model.link, model.mu);
    const WidthEstimate w = gaussian_width_sparse(
        n, std::min<Eigen::Index>(2 * k, n), static_cast<std::size_t>(bs.width_samples),
        derive_seed(spec.master_seed, {0xb0dULL, s}));
    TheoryBoundParams tp;
    tp.n = double(n);
    tp.k = double(k);
    tp.eps = bs.eps;
    tp.zeta = bs.zeta;
    tp.phi = bs.phi;
    tp.phi1 = reg.phi1;
    tp.phi2 = reg.phi2;
    tp.phi3 = reg.phi3;
    tp.phi4 = reg.phi4;
    tp.phi5 = reg.phi5;
    tp.mu = model.mu;
    tp.width_K1 = w.value;
    tp.width_X_eps = bs.eps * w.value;
    tp.entropy = entropy_bound_sparse(n, k, bs.eps);

    const std::vector<double>& mlist = bs.m.empty() ? ms[shapes[s]] : bs.m;
    for (const double m : mlist) {
      tp.m = m;
      std::vector<std::string> row{
          bs.mode == BoundMode::ConeXi ? "cone-xi" : "convex-upsilon",
          std::to_string(n), std::to_string(k), format_real(m), format_real(bs.eps),
          format_real(bs.zeta), format_real(tp.width_K1), format_real(tp.width_X_eps),
          format_real(tp.entropy)};
      try {
        const TheoryBound b = theory_bound(tp, bs.mode);
        row.insert(row.end(), {format_real(b.bar), format_real(b.bound),
                               format_real(b.discontinuity_cost), "ok"});
      } catch (const DomainError&) {
        ++domain_errors;
        row.insert(row.end(), {"nan", "nan", "nan", "domain-error"});
      }
      rows.push_back(std::move(row));
    }
  }

  const fs::path path = fs::path(opt.out_dir) / "bounds.csv";
  {
    std::ofstream f = open_output(path);
    Provenance prov = provenance(cfg, "bounds");
    prov.add("width", "monte carlo width of the 2k-sparse unit ball");
    write_table(f,
                {"mode", "n", "k", "m", "eps", "zeta", "width_K1", "width_X_eps", "entropy",
                 "bar", "bound", "discontinuity_cost", "status"},
                rows, prov);
  }
  log.info("bounds: wrote " + path.string());
  if (domain_errors) {
    log.info("bounds: " + std::to_string(domain_errors) + " grid points outside the bound's domain");
  }
  out << rows.size() << " rows, " << domain_errors << " outside domain\n";
  return kExitOk;
}

struct GroupKey {
  std::string experiment_id, setting, link;
  Eigen::Index n, k;
  std::string corruption;
  double corruption_param;
  auto tie() const {
    return std::tie(experiment_id, setting, link, n, k, corruption, corruption_param);
  }
  bool operator<(const GroupKey& o) const { return tie() < o.tie(); }
};

int cmd_report(const Config& cfg, const Options& opt, std::ostream& out, const Logger& log) {
  const ReportSettings& rs = cfg.report;
  if (rs.inputs.empty()) throw ConfigError("report.inputs is empty");

  // group -> m -> trial -> worst error
  std::map<GroupKey, std::map<Eigen::Index, std::map<int, double>>> data;
  for (const auto& path : rs.inputs) {
    std::ifstream f = open_input(path);
    const auto records = read_trial_csv(f);
    log.debug("report-data: " + std::to_string(records.size()) + " rows from " + path);
    for (const TrialRecord& r : records) {
      if (r.diverged || !std::isfinite(r.final_error)) continue;
      const GroupKey key{r.experiment_id, r.setting, r.link, r.n, r.k, r.corruption,
                         r.corruption_param};
      auto& trials = data[key][r.m];
      auto it = trials.find(r.trial);
      if (it == trials.end()) {
        trials.emplace(r.trial, r.final_error);
      } else {
        it->second = std::max(it->second, r.final_error);
      }
    }
  }

  std::map<std::tuple<Eigen::Index, Eigen::Index, double>, std::pair<double, double>> overlay;
  if (rs.overlay) {
    std::ifstream f = open_input(*rs.overlay);
    const CsvTable t = read_csv(f);
    const auto cn = t.column("n"), ck = t.column("k"), cm = t.column("m"), cb = t.column("bound"),
               cd = t.column("discontinuity_cost"), cs = t.column("status");
    for (const auto& row : t.rows) {
      if (row[cs] != "ok") continue;
      overlay[{std::stol(row[cn]), std::stol(row[ck]), std::stod(row[cm])}] = {
          std::stod(row[cb]), std::stod(row[cd])};
    }
  }

  std::vector<std::vector<std::string>> rows;
  for (const auto& [key, by_m] : data) {
    std::vector<std::pair<double, double>> pts;
    std::vector<std::vector<std::string>> group_rows;
    for (const auto& [m, trials] : by_m) {
      std::vector<double> w;
      for (const auto& [t, e] : trials) w.push_back(e);
      std::sort(w.begin(), w.end());
      const std::size_t c = w.size();
      const double median = c % 2 ? w[c / 2] : 0.5 * (w[c / 2 - 1] + w[c / 2]);
      double mean = 0.0;
      for (double v : w) mean += v;
      mean /= double(c);
      pts.emplace_back(double(m), median);
      std::string bound = "nan", cost = "nan";
      if (auto it = overlay.find({key.n, key.k, double(m)}); it != overlay.end()) {
        bound = format_real(it->second.first);
        cost = format_real(it->second.second);
      }
      group_rows.push_back({key.experiment_id, key.setting, key.link, std::to_string(key.n),
                            std::to_string(key.k), std::to_string(m), key.corruption,
                            format_real(key.corruption_param), std::to_string(c),
                            format_real(median), format_real(mean), format_real(w.back()), "",
                            bound, cost});
    }
    std::string slope = "nan";
    bool positive = true;
    for (const auto& pt : pts) positive = positive && pt.second > 0.0;
    if (pts.size() >= 3 && positive) slope = format_real(fit_loglog_slope(pts).slope);
    for (auto& r : group_rows) {
      r[12] = slope;
      rows.push_back(std::move(r));
    }
  }

  const fs::path path = fs::path(opt.out_dir) / rs.output;
  {
    std::ofstream f = open_output(path);
    Provenance prov = provenance(cfg, "report-data");
    for (const auto& in : rs.inputs) prov.add("input", in);
    if (rs.overlay) prov.add("overlay", *rs.overlay);
    prov.add("value", "empirical worst case (lower bound)");
    write_table(f,
                {"experiment_id", "setting", "link", "n", "k", "m", "corruption",
                 "corruption_param", "trials", "worst_median", "worst_mean", "worst_max",
                 "slope", "bound", "discontinuity_cost"},
                rows, prov);
  }
  log.info("report-data: wrote " + path.string());
  out << rows.size() << " rows\n";
  return kExitOk;
}

void add_common(CLI::App* sub, Options& opt) {
  sub->add_option("--config", opt.config_path, "JSON config file")->required();
  sub->add_option("--out", opt.out_dir, "output directory");
  sub->add_option("--set", opt.overrides, "KEY=VALUE override (repeatable)")
      ->allow_extra_args(false)
      ->take_all();
  sub->add_option("--threads", opt.threads, "worker cap, 0 = all cores")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--log", opt.log, "log level")->check(CLI::IsMember({"error", "info", "debug"}));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"uniform recovery from nonlinear observations", "unirec"};
  app.require_subcommand(1);
  Options opt;
  using Handler = int (*)(const Config&, const Options&, std::ostream&, const Logger&);
  const std::vector<std::tuple<std::string, std::string, Handler>> commands{
      {"gen", "write a seeded ensemble and observations", cmd_gen},
      {"recover", "run one PGD instance", cmd_recover},
      {"certify-raic", "fit an empirical RAIC certificate", cmd_certify},
      {"sweep", "run the configured experiment grid", cmd_sweep},
      {"bounds", "evaluate the theory bound over the grid", cmd_bounds},
      {"report-data", "merge sweep CSVs with a bound overlay", cmd_report},
  };
  for (const auto& [name, desc, fn] : commands) add_common(app.add_subcommand(name, desc), opt);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const Logger log(err, parse_level(opt.log));
  try {
    Config cfg = load_config(opt.config_path, opt.overrides, std::getenv("RAIC_SEED"));
    log.debug("config hash " + hex64(cfg.hash));
    for (const auto& [name, desc, fn] : commands) {
      if (app.got_subcommand(name)) return fn(cfg, opt, out, log);
    }
    return kExitConfig;
  } catch (const NumericalError& e) {
    log.error(std::string("numerical failure: ") + e.what());
    return kExitNumerical;
  } catch (const ConfigError& e) {
    log.error(std::string("config error: ") + e.what());
    return kExitConfig;
  } catch (const ArgumentError& e) {
    log.error(std::string("invalid argument: ") + e.what());
    return kExitConfig;
  } catch (const UnsupportedError& e) {
    log.error(std::string("unsupported: ") + e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    log.error(e.what());
    return 1;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace unirec
