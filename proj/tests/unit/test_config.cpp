#include "unirec/config.hpp"
#include "unirec/errors.hpp"

#include <doctest.h>

#include <filesystem>
#include <string>

using namespace unirec;

namespace {

const char* kMinimal = R"({
  "schema_version": 1,
  "link": {"name": "sign"},
  "grid": {"n": [32], "k": [2], "m": [100, 200]}
})";

std::string error_of(const std::string& text, const std::vector<std::string>& ov = {}) {
  try {
    parse_config(text, ov);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("every preset parses") {
    int count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(UNIREC_CONFIG_DIR)) {
      if (entry.path().extension() != ".json") continue;
      CAPTURE(entry.path().string());
      CHECK_NOTHROW(load_config(entry.path().string()));
      ++count;
    }
    CHECK(count >= 8);
  }

  TEST_CASE("defaults") {
    const Config c = parse_config(kMinimal);
    CHECK(c.spec.experiment_id == "experiment");
    CHECK(c.spec.setting == Setting::A);
    CHECK_FALSE(c.spec.mu.has_value());
    CHECK(c.spec.gradient == "scaled-l2");
    CHECK(c.spec.trials == 1);
    CHECK(c.spec.master_seed == 0u);
    CHECK_FALSE(c.spec.search.has_value());
    CHECK(c.raic.n_pairs == 500);
    CHECK(c.bounds.mode == BoundMode::ConeXi);
  }

  TEST_CASE("grid is the cartesian product, n-major and m-minor") {
    const Config c = parse_config(R"({"schema_version": 1, "link": {"name": "sign"},
      "grid": {"n": [10, 20], "k": [1, 2], "m": [5, 6, 7]}})");
    REQUIRE(c.spec.grid.size() == 12u);
    CHECK(c.spec.grid[0].n == 10);
    CHECK(c.spec.grid[0].k == 1);
    CHECK(c.spec.grid[0].m == 5);
    CHECK(c.spec.grid[2].m == 7);
    CHECK(c.spec.grid[3].k == 2);
    CHECK(c.spec.grid[6].n == 20);
  }

  TEST_CASE("unknown keys are rejected at any depth") {
    CHECK(error_of(R"({"schema_version": 1, "link": {"name": "sign"}, "grid": {"n": [8], "k": [1], "m": [9]}, "trails": 3})")
              .find("trails") != std::string::npos);
    CHECK(error_of(R"({"schema_version": 1, "link": {"name": "sign", "lambda": 1}, "grid": {"n": [8], "k": [1], "m": [9]}})")
              .find("lambda") != std::string::npos);
    CHECK(error_of(R"({"schema_version": 1, "link": {"name": "sign"}, "grid": {"n": [8], "k": [1], "m": [9], "t": [1]}})")
              .find("unknown key 't'") != std::string::npos);
    CHECK_FALSE(error_of(kMinimal, {"solver.step=1"}).empty());
  }

  TEST_CASE("malformed JSON reports line and column") {
    const std::string msg = error_of("{\n  \"schema_version\": 1,\n  \"link\": {\"name\": \"sign\"\n}");
    CHECK(msg.find("line 4") != std::string::npos);
    CHECK(msg.find("column") != std::string::npos);
    CHECK(error_of("[1, 2]").find("object") != std::string::npos);
  }

  TEST_CASE("schema version is mandatory") {
    CHECK(error_of(R"({"link": {"name": "sign"}, "grid": {"n": [8], "k": [1], "m": [9]}})")
              .find("schema_version") != std::string::npos);
    CHECK_FALSE(error_of(R"({"schema_version": 2, "link": {"name": "sign"}, "grid": {"n": [8], "k": [1], "m": [9]}})")
                    .empty());
  }

  TEST_CASE("invalid values") {
    CHECK_FALSE(error_of(kMinimal, {"trials=0"}).empty());
    CHECK_FALSE(error_of(kMinimal, {"link.name=cubic"}).empty());
    CHECK_FALSE(error_of(kMinimal, {"grid.k=[40]"}).empty());
    CHECK_FALSE(error_of(kMinimal, {"solver.x0=spectral"}).empty());
    CHECK_FALSE(error_of(kMinimal, {"mu=\"auto\""}).empty());
    CHECK_FALSE(error_of(kMinimal, {"setting=b", "c_star=0.1"}).empty());
    CHECK_FALSE(error_of(kMinimal, {"link.name=abs"}).empty());  // scaled l2 needs mu != 0
    CHECK_FALSE(error_of(kMinimal, {"corruption={\"name\": \"bit-flips\", \"eta\": 1.5}"}).empty());
    CHECK_FALSE(error_of(kMinimal, {"noequals"}).empty());
    CHECK_FALSE(error_of(kMinimal, {"trials.x=1"}).empty());
  }

  TEST_CASE("overrides apply after parsing and are kept verbatim") {
    const Config c = parse_config(kMinimal, {"trials=7", "link={\"name\": \"modulo\", \"lambda\": 2}",
                                             "experiment_id=hello", "solver.max_iters=3"});
    CHECK(c.spec.trials == 7);
    CHECK(c.spec.link.kind() == LinkKind::Modulo);
    CHECK(c.spec.link.parameter() == 2.0);
    CHECK(c.spec.experiment_id == "hello");
    CHECK(c.spec.solver.max_iters == 3);
    CHECK(c.overrides == std::vector<std::string>{"trials=7", "link={\"name\": \"modulo\", \"lambda\": 2}",
                                                  "experiment_id=hello", "solver.max_iters=3"});
  }

  TEST_CASE("RAIC_SEED sets the master seed, overrides still win") {
    CHECK(parse_config(kMinimal, {}, "1234").spec.master_seed == 1234u);
    CHECK(parse_config(kMinimal, {"master_seed=9"}, "1234").spec.master_seed == 9u);
    CHECK(parse_config(kMinimal, {}, "").spec.master_seed == 0u);
    CHECK_THROWS_AS(parse_config(kMinimal, {}, "12x"), ConfigError);
  }

  TEST_CASE("config hash follows content, not layout") {
    const Config a = parse_config(kMinimal);
    const Config b = parse_config(R"({"grid": {"m": [100, 200], "k": [2], "n": [32]},
                                      "link": {"name": "sign"}, "schema_version": 1})");
    CHECK(a.hash == b.hash);
    CHECK(a.canonical == b.canonical);
    CHECK(a.hash == fnv1a64(a.canonical));
    CHECK(parse_config(kMinimal, {"trials=2"}).hash != a.hash);
    CHECK(hex64(a.hash).size() == 16u);
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  }

  TEST_CASE("sections") {
    const Config c = parse_config(R"({
      "schema_version": 1,
      "link": {"name": "identity+noise", "sigma": 0.5},
      "mu": 1.0,
      "constraint": {"name": "l2-ball", "param": 2.0},
      "solver": {"gradient": "scaled-l2", "eta": 0.5, "max_iters": 12, "stop_tol": 1e-6},
      "grid": {"n": [16], "k": [2], "m": [40]},
      "signal_policy": {"name": "adversarial-search", "restarts": 2, "steps": 3, "step_size": 0.05},
      "corruption": {"name": "l2-budget", "beta": 2, "heuristic": "top-margin"},
      "raic": {"n_pairs": 50, "pairs_per_signal": 5, "sampler": "random-random", "phi": 0.2},
      "bounds": {"mode": "convex-upsilon", "eps": 0.02, "zeta": 0.05, "phi": 0.2, "m": [10, 20]},
      "report": {"inputs": ["a.csv", "b.csv"], "overlay": "o.csv", "output": "r.csv"}
    })");
    CHECK(c.spec.mu == 1.0);
    REQUIRE(c.spec.constraint_name.has_value());
    CHECK(*c.spec.constraint_name == "l2-ball");
    CHECK(c.spec.solver.eta == 0.5);
    REQUIRE(c.spec.search.has_value());
    CHECK(c.spec.search->steps == 3);
    CHECK(c.spec.corruption.kind == CorruptionSpec::Kind::L2Budget);
    CHECK(c.raic.sampler == ProbeSampler::RandomRandom);
    CHECK(c.raic.phi == 0.2);
    CHECK(c.bounds.mode == BoundMode::ConvexUpsilon);
    CHECK(c.bounds.m == std::vector<double>{10, 20});
    CHECK(c.report.inputs.size() == 2u);
    CHECK(c.report.overlay == "o.csv");
  }

  TEST_CASE("missing files") {
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
  }
}
