#pragma once

#include "unirec/experiments.hpp"
#include "unirec/raic.hpp"

#include <optional>
#include <string>
#include <vector>

namespace unirec {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "unirec 1.0.0";

struct CertifySettings {
  int n_pairs = 500;
  int pairs_per_signal = 10;
  ProbeSampler sampler = ProbeSampler::Trajectory;
  std::optional<double> phi;
  std::optional<double> eta;
};

struct BoundsSettings {
  BoundMode mode = BoundMode::ConeXi;
  double eps = 0.1;
  double zeta = 0.01;
  std::optional<double> phi;
  std::vector<double> m;  // empty: the grid's m values
  int width_samples = 2000;
};

struct ReportSettings {
  std::vector<std::string> inputs;
  std::optional<std::string> overlay;
  std::string output = "report.csv";
};

/// Validated configuration. Unknown keys anywhere are rejected.
struct Config {
  ExperimentSpec spec;
  CertifySettings raic;
  BoundsSettings bounds;
  ReportSettings report;
  std::vector<std::string> overrides;  // verbatim KEY=VALUE
  std::string canonical;               // sorted-key JSON after overrides
  std::uint64_t hash = 0;              // FNV-1a of canonical
};

std::uint64_t fnv1a64(const std::string& text);

/// Parses text, applies RAIC_SEED (when env_seed is set) and then the
/// overrides, and validates the result. Throws ConfigError.
Config parse_config(const std::string& text, const std::vector<std::string>& overrides = {},
                    const char* env_seed = nullptr);

/// Reads the file and calls parse_config. Missing files are a ConfigError.
Config load_config(const std::string& path, const std::vector<std::string>& overrides = {},
                   const char* env_seed = nullptr);

/// Hex form used in provenance headers.
std::string hex64(std::uint64_t v);

}  // namespace unirec
