#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "mddra/harness.hpp"

using namespace mddra;
using namespace mddra::harness;

namespace {

const std::filesystem::path kData = MDDRA_TEST_DATA;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error(std::string_view yaml) {
  try {
    parse_config(yaml);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("mddra_test_" + name);
  std::filesystem::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("unit-tagged quantities") {
  CHECK(parse_quantity("30 dBm", Dimension::kPower, "k") == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(parse_quantity("500 mW", Dimension::kPower, "k") == doctest::Approx(0.5));
  CHECK(parse_quantity("360 MHz", Dimension::kFrequency, "k") == doctest::Approx(3.6e8));
  CHECK(parse_quantity("-174 dBm/Hz", Dimension::kNoiseDensity, "k") == doctest::Approx(std::pow(10.0, -20.4)).epsilon(1e-12));
  CHECK(parse_quantity("1.5e2 m", Dimension::kLength, "k") == doctest::Approx(150.0));
  CHECK(parse_quantity("10 dB", Dimension::kDecibel, "k") == doctest::Approx(10.0));
  CHECK_THROWS_WITH_AS(parse_quantity("30", Dimension::kPower, "network.p_max"),
                       doctest::Contains("network.p_max"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_quantity("30 furlongs", Dimension::kLength, "x"), doctest::Contains("not one of"), ConfigError);
}

TEST_CASE("config parsing") {
  const auto empty = parse_config("");
  CHECK(canonical_json(empty) == canonical_json(ExperimentConfig{}));
  CHECK(empty.world.n_bs == 25);
  CHECK(empty.mddra.rho == 10.0);

  const auto c = parse_config("network:\n  p_max: 30 dBm\n  b_max: 100 MHz\nmddra:\n  zeta_min: 0.6\n");
  CHECK(c.world.limits.p_max == doctest::Approx(1.0));
  CHECK(c.world.limits.b_max == doctest::Approx(1e8));
  CHECK(c.mddra.zeta_min == 0.6);

  CHECK(config_error("mddra:\n  zeta_min: 1.5\n").find("zeta_min") != std::string::npos);
  CHECK(config_error("mddra:\n  bogus: 1\n").find("mddra.bogus") != std::string::npos);
  CHECK(config_error("network:\n  b_max: 360\n").find("network.b_max") != std::string::npos);
  CHECK(config_error("nonsense_section: {}\n").find("nonsense_section") != std::string::npos);
  CHECK(config_error("scenario:\n  downstream: sideways\n").find("scenario.downstream") != std::string::npos);
  CHECK(!config_error("scenario: [unbalanced\n").empty());

  const auto ring = parse_config("scenario:\n  downstream: periodic\n");
  CHECK(ring.world.scenario.downstream == scenario::Boundary::kPeriodic);
  CHECK(canonical_json(ring).find("\"periodic\"") != std::string::npos);

  const auto ov = load_config(std::nullopt, {"mddra.window=3", "network.n_bs=9", "mddra.pretrain_each_iteration=true"});
  CHECK(ov.mddra.window == 3);
  CHECK(ov.world.n_bs == 9);
  CHECK(ov.mddra.pretrain_each_iteration);
  CHECK_THROWS_AS(load_config(std::nullopt, {"noequals"}), ConfigError);
  CHECK_THROWS_AS(ingest_config(kData / "does_not_exist.yaml"), ConfigError);
}

TEST_CASE("config hash") {
  const ExperimentConfig a;
  const std::string h = config_hash(a);
  CHECK(h.size() == 16);
  CHECK(h.find_first_not_of("0123456789abcdef") == std::string::npos);
  CHECK(config_hash(ExperimentConfig{}) == h);
  ExperimentConfig b;
  b.mddra.rho = 11.0;
  CHECK(config_hash(b) != h);
  const auto j = nlohmann::json::parse(canonical_json(a));
  CHECK(j.is_object());
}

TEST_CASE("sweep axes") {
  const auto a = parse_axis("Ve=0.1:0.9:5");
  CHECK(a.name == "Ve");
  REQUIRE(a.values.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(a.values[i] == doctest::Approx(0.1 + 0.2 * static_cast<double>(i)));
  CHECK(parse_axis("T_a=0.05,0.5").values == std::vector<double>{0.05, 0.5});
  CHECK(parse_axis("users_ratio=1:0.25:4").values.back() == doctest::Approx(0.25));
  CHECK_THROWS_AS(parse_axis("speed=1:2:3"), ConfigError);
  CHECK_THROWS_AS(parse_axis("Ve=0.1:0.9:0"), ConfigError);
  CHECK_THROWS_AS(parse_axis("Ve"), ConfigError);
  WorldConfig w;
  MddraConfig m;
  apply_axis("Pmax", 0.5, w, m);
  apply_axis("zeta_min", 0.7, w, m);
  CHECK(w.limits.p_max == 0.5);
  CHECK(m.zeta_min == 0.7);
  ExperimentConfig bad;
  bad.axes.push_back(parse_axis("Ve=0.5,1.5"));
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("scheme names") {
  const MddraConfig m;
  CHECK(resolve_scheme("mddra", m).name == "mddra");
  CHECK(resolve_scheme("1", m).name == "offline-admm-complete");
  CHECK(resolve_scheme("baseline4", m).name == "greedy-history-avg");
  CHECK_THROWS_AS(resolve_scheme("oracle", m), ConfigError);
}

TEST_CASE("CSV emission") {
  std::ostringstream os;
  write_csv(os, {});
  std::string header;
  for (const auto& c : csv_columns()) header += (header.empty() ? "" : ",") + c;
  CHECK(os.str() == header + "\n");
  CHECK(csv_columns().size() == 17);

  TraceRow r;
  r.scheme = "mddra";
  r.seed = 3;
  r.eta_tau = 0.1;
  r.p_t = 12.5;
  std::ostringstream one;
  write_csv_row(one, r);
  CHECK(one.str() == "mddra,3,0,0,0.1,0,0,0,0,0,0,0,0,0,12.5,0,0\n");

  TraceRow nan = r;
  nan.xi = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(check_row(nan), doctest::Contains("xi"), NumericError);
  TraceRow neg = r;
  neg.p_t = -1.0;
  CHECK_THROWS_WITH_AS(check_row(neg), doctest::Contains("p_t"), NumericError);

  for (double v : {0.1, 1.0 / 3.0, 1e300, -2.5e-12, 123456789.0}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(0.0) == "0");
}

TEST_CASE("golden toy CSV") {
  const auto cfg = ingest_config(kData / "toy.yaml");
  const auto dir = scratch_dir("golden");
  const auto result = run_experiment(cfg);
  emit_results(result, cfg, dir);
  for (const std::string scheme : {"mddra", "greedy-history-avg"}) {
    const auto got = slurp(dir / (scheme + ".csv"));
    CHECK(!got.empty());
    CHECK(got == slurp(kData / ("golden_toy_" + scheme + ".csv")));
  }
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(summary["config_hash"] == config_hash(cfg));
  CHECK(summary["columns"].get<std::vector<std::string>>() == csv_columns());
  CHECK(summary["schemes"].size() == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("seeds give distinct traces and reruns are identical") {
  auto cfg = ingest_config(kData / "toy.yaml");
  cfg.schemes = {"mddra"};
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  REQUIRE(a.runs.size() == 2);
  std::ostringstream s1, s2, again;
  write_csv(s1, a.runs[0].rows);
  write_csv(s2, a.runs[1].rows);
  write_csv(again, b.runs[0].rows);
  CHECK(s1.str() != s2.str());
  CHECK(s1.str() == again.str());
  CHECK(a.summary.size() == 2);
  CHECK(seed_mean(a, "mddra") == doctest::Approx(0.5 * (a.summary[0].final_eta_T + a.summary[1].final_eta_T)));
}

TEST_CASE("traffic emission") {
  const auto cfg = ingest_config(kData / "toy.yaml");
  WorldConfig wc = cfg.world;
  const World w = make_world(wc);
  std::ostringstream os;
  emit_traffic(w, os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "tau,cell,x,y,density,demand");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == w.grid().size() * static_cast<std::size_t>(w.horizon()));
}

TEST_CASE("command line exit codes") {
  const std::string toy = (kData / "toy.yaml").string();
  const char* version[] = {"mddra", "version"};
  CHECK(cli(2, version) == 0);
  const char* missing[] = {"mddra", "optimize", "-c", "/nonexistent/cfg.yaml"};
  CHECK(cli(4, missing) == 2);
  const char* bad_zeta[] = {"mddra", "optimize", "--set", "mddra.zeta_min=1.5"};
  CHECK(cli(4, bad_zeta) == 2);
  const char* bad_flag[] = {"mddra", "optimize", "--frobnicate"};
  CHECK(cli(3, bad_flag) == 2);
  const auto dir = scratch_dir("cli");
  const std::string out = dir.string();
  const char* run[] = {"mddra", "optimize", "-c", toy.c_str(), "--schemes", "mddra", "--seeds", "1", "--out", out.c_str()};
  CHECK(cli(10, run) == 0);
  CHECK(std::filesystem::exists(dir / "mddra.csv"));
  CHECK(std::filesystem::exists(dir / "summary.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("worker count") {
  ::setenv("MDDRA_THREADS", "3", 1);
  CHECK(thread_count() == 3);
  ::unsetenv("MDDRA_THREADS");
  CHECK(thread_count() >= 1);
}
