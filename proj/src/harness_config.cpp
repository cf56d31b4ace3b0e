#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mddra/harness.hpp"
#include "json.hpp"

namespace mddra::harness {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

bool parse_number(std::string_view s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

struct UnitEntry {
  std::string_view unit;
  double scale;
  bool decibel;  // value is 10 log10(x / scale)
};

const std::vector<UnitEntry>& units_for(Dimension dim) {
  static const std::map<Dimension, std::vector<UnitEntry>> table{
      {Dimension::kLength, {{"m", 1.0, false}, {"km", 1e3, false}}},
      {Dimension::kFrequency,
       {{"Hz", 1.0, false}, {"kHz", 1e3, false}, {"MHz", 1e6, false}, {"GHz", 1e9, false}}},
      {Dimension::kPower,
       {{"W", 1.0, false}, {"mW", 1e-3, false}, {"kW", 1e3, false}, {"dBm", 1e-3, true},
        {"dBW", 1.0, true}}},
      {Dimension::kNoiseDensity,
       {{"W/Hz", 1.0, false}, {"dBm/Hz", 1e-3, true}, {"dBW/Hz", 1.0, true}}},
      {Dimension::kDecibel, {{"dB", 1.0, false}}},
      {Dimension::kRate,
       {{"bit/s", 1.0, false}, {"bps", 1.0, false}, {"kbit/s", 1e3, false}, {"kbps", 1e3, false},
        {"Mbit/s", 1e6, false}, {"Mbps", 1e6, false}, {"Gbit/s", 1e9, false}, {"Gbps", 1e9, false}}},
  };
  return table.at(dim);
}

[[noreturn]] void fail(std::string_view key, const std::string& what) {
  throw ConfigError(std::string(key) + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// A mapping node whose keys must all be consumed.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) fail(path_, "expected a mapping");
  }
  ~Section() = default;

  [[nodiscard]] bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

  // Undefined node when absent or null.
  YAML::Node take(const std::string& key) {
    seen_.insert(key);
    if (!has(key) || node_[key].IsNull()) return YAML::Node(YAML::NodeType::Undefined);
    return node_[key];
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    const YAML::Node n = take(key);
    if (!n.IsDefined()) return;
    if (!n.IsScalar()) fail(join(path_, key), "expected a scalar");
    try {
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      fail(join(path_, key), "cannot parse '" + n.Scalar() + "'");
    }
  }

  void quantity(const std::string& key, Dimension dim, double& out) {
    const YAML::Node n = take(key);
    if (!n.IsDefined()) return;
    if (!n.IsScalar()) fail(join(path_, key), "expected a scalar with a unit");
    out = parse_quantity(n.Scalar(), dim, join(path_, key));
  }

  Section child(const std::string& key) { return Section(take(key), join(path_, key)); }

  [[nodiscard]] std::string key_path(const std::string& key) const { return join(path_, key); }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto k = kv.first.as<std::string>();
      if (!seen_.count(k)) fail(join(path_, k), "unknown key");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> quantity_list(const YAML::Node& n, Dimension dim, const std::string& key) {
  std::vector<double> out;
  if (!n.IsSequence()) fail(key, "expected a list");
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!n[i].IsScalar()) fail(key, "expected scalars");
    out.push_back(parse_quantity(n[i].Scalar(), dim, key + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void read_scenario(Section s, WorldConfig& w) {
  auto& sc = w.scenario;
  s.get("nx", sc.grid.nx);
  s.get("ny", sc.grid.ny);
  s.quantity("cell_size", Dimension::kLength, sc.grid.cell_size);
  s.get("n_roads", sc.n_roads);
  s.get("lanes_per_road", sc.lanes_per_road);
  if (auto n = s.take("light_positions"); n.IsDefined()) {
    sc.light_positions = quantity_list(n, Dimension::kLength, s.key_path("light_positions"));
  }
  s.get("red_until", sc.red_until);
  s.get("horizon", sc.horizon);
  s.get("peak_density", sc.peak_density);
  std::string boundary;
  s.get("downstream", boundary);
  if (!boundary.empty()) {
    if (boundary == "outflow") sc.downstream = scenario::Boundary::kOutflow;
    else if (boundary == "closed") sc.downstream = scenario::Boundary::kClosed;
    else if (boundary == "periodic") sc.downstream = scenario::Boundary::kPeriodic;
    else fail(s.key_path("downstream"), "expected 'outflow', 'closed' or 'periodic'");
  }
  s.get("users_ratio", w.users_ratio);
  s.get("substeps", w.substeps);
  if (auto n = s.take("demand"); n.IsDefined()) {
    if (!n.IsSequence()) fail(s.key_path("demand"), "expected a list of components");
    sc.demand.clear();
    for (std::size_t i = 0; i < n.size(); ++i) {
      Section c(n[i], s.key_path("demand") + "[" + std::to_string(i) + "]");
      scenario::DemandComponent d;
      c.quantity("amplitude", Dimension::kRate, d.amplitude);
      c.get("frequency", d.frequency);
      c.get("phase", d.phase);
      c.finish();
      sc.demand.push_back(d);
    }
  }
  s.finish();
}

void read_traffic(Section s, scenario::TrafficParams& t) {
  s.get("ve", t.ve);
  s.get("ta", t.ta);
  s.get("mu1", t.mu1);
  s.get("mu2", t.mu2);
  s.get("theta1", t.theta1);
  s.get("theta2", t.theta2);
  s.finish();
}

void read_network(Section s, WorldConfig& w) {
  s.get("n_bs", w.n_bs);
  s.quantity("b_max", Dimension::kFrequency, w.limits.b_max);
  s.quantity("p_max", Dimension::kPower, w.limits.p_max);
  s.quantity("b_min", Dimension::kFrequency, w.limits.b_min);
  s.quantity("min_separation", Dimension::kLength, w.deploy.min_separation);
  s.get("max_attempts_per_bs", w.deploy.max_attempts_per_bs);
  s.quantity("adjacency_threshold", Dimension::kLength, w.deploy.adjacency_threshold);
  s.finish();
}

void read_channel(Section s, network::ChannelParams& c) {
  if (s.has("pathloss")) {
    Section p = s.child("pathloss");
    double intercept = 35.0, slope = 38.0;
    p.quantity("intercept", Dimension::kDecibel, intercept);
    p.quantity("slope", Dimension::kDecibel, slope);
    p.finish();
    const auto m = network::ChannelParams::from_db_model(intercept, slope);
    c.alpha = m.alpha;
    c.gamma = m.gamma;
    c.beta = m.beta;
  }
  s.get("alpha", c.alpha);
  s.get("gamma", c.gamma);
  s.get("beta", c.beta);
  s.quantity("noise_density", Dimension::kNoiseDensity, c.sigma2);
  s.quantity("shadowing_std", Dimension::kDecibel, c.chi_db);
  if (s.has("amplifier_efficiency")) {
    double efficiency = 0.0;
    s.get("amplifier_efficiency", efficiency);
    if (!(efficiency > 0.0 && efficiency <= 1.0)) fail(s.key_path("amplifier_efficiency"), "must lie in (0, 1]");
    c.lambda = 1.0 / efficiency;
  }
  s.quantity("circuit_power", Dimension::kPower, c.p_circuit);
  s.finish();
}

void read_mddra(Section s, MddraConfig& m) {
  s.get("epsilon", m.epsilon);
  s.get("max_inner_iters", m.max_inner_iters);
  s.get("window", m.window);
  s.get("zeta_min", m.zeta_min);
  s.get("rho", m.rho);
  s.get("fgo_layers", m.fgo_layers);
  s.get("warm_start_epochs", m.warm_start_epochs);
  s.get("pretrain_epochs_first", m.pretrain_epochs_first);
  s.get("pretrain_epochs", m.pretrain_epochs);
  s.get("finetune_epochs", m.finetune_epochs);
  s.get("pretrain_each_iteration", m.pretrain_each_iteration);
  s.get("pretrain_lr", m.pretrain_lr);
  s.get("finetune_lr", m.finetune_lr);
  s.get("kappa_divisor", m.kappa_divisor);
  s.get("record_timing", m.record_timing);
  if (auto n = s.take("residual_eps"); n.IsDefined()) {
    const std::string key = s.key_path("residual_eps");
    try {
      if (n.IsScalar()) {
        m.residual_eps.fill(n.as<double>());
      } else if (n.IsSequence() && n.size() == m.residual_eps.size()) {
        for (std::size_t i = 0; i < n.size(); ++i) m.residual_eps[i] = n[i].as<double>();
      } else {
        fail(key, "expected a number or a list of 6 numbers");
      }
    } catch (const YAML::Exception&) {
      fail(key, "cannot parse");
    }
    for (double e : m.residual_eps) {
      if (!(e > 0.0)) fail(key, "must be > 0");
    }
  }
  s.finish();
}

void read_experiment(Section s, ExperimentConfig& cfg) {
  if (auto n = s.take("schemes"); n.IsDefined()) {
    if (!n.IsSequence()) fail(s.key_path("schemes"), "expected a list");
    cfg.schemes.clear();
    for (const auto& e : n) cfg.schemes.push_back(e.as<std::string>());
  }
  if (auto n = s.take("seeds"); n.IsDefined()) {
    if (!n.IsSequence()) fail(s.key_path("seeds"), "expected a list");
    cfg.seeds.clear();
    try {
      for (const auto& e : n) cfg.seeds.push_back(e.as<std::uint64_t>());
    } catch (const YAML::Exception&) {
      fail(s.key_path("seeds"), "expected non-negative integers");
    }
  }
  std::string out;
  s.get("output_dir", out);
  if (!out.empty()) cfg.output_dir = out;
  if (auto n = s.take("sweep"); n.IsDefined()) {
    if (!n.IsSequence()) fail(s.key_path("sweep"), "expected a list of axis strings");
    for (const auto& e : n) cfg.axes.push_back(parse_axis(e.as<std::string>()));
  }
  s.finish();
}

constexpr std::string_view kAxisNames[] = {"Ve", "Ta", "zeta_min", "Pmax", "users_ratio"};

std::string canonical_axis(std::string_view name) {
  std::string n(name);
  if (n == "ve" || n == "V_e") return "Ve";
  if (n == "ta" || n == "T_a") return "Ta";
  if (n == "zeta" || n == "zeta_min") return "zeta_min";
  if (n == "pmax" || n == "p_max" || n == "P_max") return "Pmax";
  if (n == "NU_M" || n == "nu_m" || n == "users") return "users_ratio";
  return n;
}

}  // namespace

double parse_quantity(std::string_view text, Dimension dim, std::string_view key) {
  const std::string t = trim(text);
  std::size_t split = t.size();
  // The unit starts at the first letter that is not an exponent marker.
  for (std::size_t i = 0; i < t.size(); ++i) {
    const char c = t[i];
    if (std::isalpha(static_cast<unsigned char>(c)) &&
        !((c == 'e' || c == 'E') && i > 0 && i + 1 < t.size() &&
          (std::isdigit(static_cast<unsigned char>(t[i + 1])) || t[i + 1] == '-' || t[i + 1] == '+') &&
          std::isdigit(static_cast<unsigned char>(t[i - 1])))) {
      split = i;
      break;
    }
  }
  double value = 0.0;
  if (!parse_number(std::string_view(t).substr(0, split), value)) {
    fail(key, "cannot parse a number from '" + t + "'");
  }
  const std::string unit = trim(std::string_view(t).substr(split));
  if (unit.empty()) fail(key, "missing unit in '" + t + "'");
  for (const auto& u : units_for(dim)) {
    if (unit == u.unit) {
      return u.decibel ? u.scale * std::pow(10.0, value / 10.0) : value * u.scale;
    }
  }
  std::string allowed;
  for (const auto& u : units_for(dim)) allowed += (allowed.empty() ? "" : ", ") + std::string(u.unit);
  fail(key, "unit '" + unit + "' not one of {" + allowed + "}");
}

SweepAxis parse_axis(std::string_view text) {
  const std::string t = trim(text);
  const auto eq = t.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("sweep axis '" + t + "': expected name=lo:hi:n or name=v1,v2");
  SweepAxis a;
  a.name = canonical_axis(trim(std::string_view(t).substr(0, eq)));
  if (std::find(std::begin(kAxisNames), std::end(kAxisNames), a.name) == std::end(kAxisNames)) {
    throw ConfigError("sweep axis '" + a.name + "': unknown (Ve, Ta, zeta_min, Pmax, users_ratio)");
  }
  const std::string spec = t.substr(eq + 1);
  auto bad = [&] { return ConfigError("sweep axis '" + t + "': cannot parse the values"); };
  if (std::count(spec.begin(), spec.end(), ':') == 2) {
    const auto c1 = spec.find(':');
    const auto c2 = spec.find(':', c1 + 1);
    double lo = 0.0, hi = 0.0, nd = 0.0;
    if (!parse_number(spec.substr(0, c1), lo) || !parse_number(spec.substr(c1 + 1, c2 - c1 - 1), hi) ||
        !parse_number(spec.substr(c2 + 1), nd)) {
      throw bad();
    }
    const auto n = static_cast<long>(nd);
    if (n < 1 || static_cast<double>(n) != nd) throw ConfigError("sweep axis '" + t + "': point count must be a positive integer");
    for (long i = 0; i < n; ++i) {
      a.values.push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
  } else {
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
      double v = 0.0;
      if (!parse_number(item, v)) throw bad();
      a.values.push_back(v);
    }
  }
  if (a.values.empty()) throw ConfigError("sweep axis '" + t + "': no points");
  return a;
}

void apply_axis(const std::string& name, double value, WorldConfig& world, MddraConfig& mddra) {
  const std::string n = canonical_axis(name);
  if (n == "Ve") world.traffic.ve = value;
  else if (n == "Ta") world.traffic.ta = value;
  else if (n == "zeta_min") mddra.zeta_min = value;
  else if (n == "Pmax") world.limits.p_max = value;
  else if (n == "users_ratio") world.users_ratio = value;
  else throw ConfigError("sweep axis '" + name + "': unknown");
}

void ExperimentConfig::validate() const {
  world.validate();
  mddra.validate();
  if (mddra.horizon != world.scenario.horizon) throw ConfigError("mddra.horizon must equal scenario.horizon");
  if (schemes.empty()) throw ConfigError("experiment.schemes must not be empty");
  for (const auto& s : schemes) (void)resolve_scheme(s, mddra);
  if (seeds.empty()) throw ConfigError("experiment.seeds must not be empty");
  for (const auto& a : axes) {
    if (a.values.empty()) throw ConfigError("sweep axis " + a.name + ": no points");
    for (double v : a.values) {
      WorldConfig w = world;
      MddraConfig m = mddra;
      apply_axis(a.name, v, w, m);
      w.validate();
      m.validate();
    }
  }
}

ExperimentConfig parse_config(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: YAML parse error: ") + e.what());
  }
  ExperimentConfig cfg;
  if (root && !root.IsNull()) {
    Section top(root, "");
    read_scenario(top.child("scenario"), cfg.world);
    read_traffic(top.child("traffic"), cfg.world.traffic);
    read_network(top.child("network"), cfg.world);
    read_channel(top.child("channel"), cfg.world.channel);
    read_mddra(top.child("mddra"), cfg.mddra);
    read_experiment(top.child("experiment"), cfg);
    top.finish();
  }
  cfg.mddra.horizon = cfg.world.scenario.horizon;
  cfg.validate();
  return cfg;
}

namespace {
std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
}  // namespace

ExperimentConfig ingest_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

ExperimentConfig load_config(const std::optional<std::filesystem::path>& path,
                             const std::vector<std::string>& overrides) {
  YAML::Node root;
  try {
    root = path ? YAML::Load(read_file(*path)) : YAML::Node(YAML::NodeType::Map);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: YAML parse error: ") + e.what());
  }
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set '" + o + "': expected section.key=value");
    std::vector<std::string> parts;
    std::stringstream ks(o.substr(0, eq));
    for (std::string part; std::getline(ks, part, '.');) parts.push_back(trim(part));
    YAML::Node value;
    try {
      value = YAML::Load(o.substr(eq + 1));
    } catch (const YAML::Exception&) {
      throw ConfigError("--set '" + o + "': cannot parse the value");
    }
    std::vector<YAML::Node> chain{root};
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      YAML::Node next = chain.back()[parts[i]];
      if (!next.IsMap()) next = YAML::Node(YAML::NodeType::Map);
      chain.back()[parts[i]] = next;
      chain.push_back(next);
    }
    chain.back()[parts.back()] = value;
  }
  YAML::Emitter out;
  out << root;
  return parse_config(out.c_str());
}

namespace {

const char* boundary_name(scenario::Boundary b) {
  switch (b) {
    case scenario::Boundary::kClosed: return "closed";
    case scenario::Boundary::kOutflow: return "outflow";
    case scenario::Boundary::kPeriodic: return "periodic";
  }
  return "outflow";
}

}  // namespace

std::string canonical_json(const ExperimentConfig& c) {
  using nlohmann::json;
  const auto& sc = c.world.scenario;
  json demand = json::array();
  for (const auto& d : sc.demand) demand.push_back({{"amplitude", d.amplitude}, {"frequency", d.frequency}, {"phase", d.phase}});
  json axes = json::array();
  for (const auto& a : c.axes) axes.push_back({{"name", a.name}, {"values", a.values}});
  const auto& m = c.mddra;
  json j = {
      {"scenario",
       {{"nx", sc.grid.nx}, {"ny", sc.grid.ny}, {"cell_size", sc.grid.cell_size}, {"n_roads", sc.n_roads},
        {"lanes_per_road", sc.lanes_per_road}, {"light_positions", sc.light_positions},
        {"red_until", sc.red_until}, {"horizon", sc.horizon}, {"peak_density", sc.peak_density},
        {"downstream", boundary_name(sc.downstream)},
        {"users_ratio", c.world.users_ratio}, {"substeps", c.world.substeps}, {"demand", demand}}},
      {"traffic",
       {{"ve", c.world.traffic.ve}, {"ta", c.world.traffic.ta}, {"mu1", c.world.traffic.mu1},
        {"mu2", c.world.traffic.mu2}, {"theta1", c.world.traffic.theta1}, {"theta2", c.world.traffic.theta2}}},
      {"network",
       {{"n_bs", c.world.n_bs}, {"b_max", c.world.limits.b_max}, {"p_max", c.world.limits.p_max},
        {"b_min", c.world.limits.b_min}, {"min_separation", c.world.deploy.min_separation},
        {"max_attempts_per_bs", c.world.deploy.max_attempts_per_bs},
        {"adjacency_threshold", c.world.deploy.adjacency_threshold}}},
      {"channel",
       {{"alpha", c.world.channel.alpha}, {"gamma", c.world.channel.gamma}, {"beta", c.world.channel.beta},
        {"sigma2", c.world.channel.sigma2}, {"chi_db", c.world.channel.chi_db},
        {"lambda", c.world.channel.lambda}, {"p_circuit", c.world.channel.p_circuit}}},
      {"mddra",
       {{"epsilon", m.epsilon}, {"max_inner_iters", m.max_inner_iters}, {"window", m.window},
        {"horizon", m.horizon}, {"zeta_min", m.zeta_min}, {"rho", m.rho}, {"fgo_layers", m.fgo_layers},
        {"warm_start_epochs", m.warm_start_epochs}, {"pretrain_epochs_first", m.pretrain_epochs_first},
        {"pretrain_epochs", m.pretrain_epochs}, {"finetune_epochs", m.finetune_epochs},
        {"pretrain_each_iteration", m.pretrain_each_iteration},
        {"pretrain_lr", m.pretrain_lr}, {"finetune_lr", m.finetune_lr}, {"residual_eps", m.residual_eps},
        {"kappa_divisor", m.kappa_divisor}, {"record_timing", m.record_timing}}},
      {"experiment", {{"schemes", c.schemes}, {"seeds", c.seeds}, {"sweep", axes}}},
  };
  return j.dump();
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = canonical_json(config);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SchemeSpec resolve_scheme(std::string_view name, const MddraConfig& config) {
  if (name == "mddra") return mddra_scheme();
  try {
    return baselines::scheme_for(baselines::parse_kind(name), config);
  } catch (const std::exception&) {
    throw ConfigError("experiment.schemes: unknown scheme '" + std::string(name) + "'");
  }
}

}  // namespace mddra::harness
