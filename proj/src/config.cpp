#include "fermicool/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "fermicool/errors.hpp"

namespace fermicool {

namespace {

// Map node whose keys are checked off as they are read; finish() rejects the rest.
class Section {
 public:
  Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.IsMap()) throw ConfigError(where() + " must be a mapping");
  }

  bool has(const std::string& key) const { return static_cast<bool>(node_[key]); }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  YAML::Node child(const std::string& key) {
    used_.insert(key);
    return node_[key];
  }

  template <class T>
  T required(const std::string& key) {
    if (!has(key)) throw ConfigError("missing required key " + key_path(key));
    return convert<T>(child(key), key_path(key));
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    return has(key) ? convert<T>(child(key), key_path(key)) : fallback;
  }

  template <class T>
  std::optional<T> optional(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return convert<T>(child(key), key_path(key));
  }

  void finish() const {
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!used_.contains(key)) throw ConfigError("unknown key " + key_path(key));
    }
  }

  template <class T>
  static T convert(const YAML::Node& n, const std::string& path) {
    if (!n.IsScalar()) throw ConfigError(path + " must be a scalar");
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(path + ": cannot read '" + n.Scalar() + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "document" : path_; }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

double seconds_to_inv_omega(double seconds, double omega) { return seconds * omega; }

GammaPolicy parse_gamma(const YAML::Node& node, const std::string& path) {
  GammaPolicy g;
  if (node.IsScalar()) {
    g.kind = GammaPolicyKind::Fixed;
    g.value = Section::convert<double>(node, path);
    return g;
  }
  Section s(node, path);
  const bool fixed = s.has("value");
  const bool fraction = s.has("lifetime_fraction");
  if (fixed == fraction) throw ConfigError(path + " needs exactly one of value, lifetime_fraction");
  g.kind = fixed ? GammaPolicyKind::Fixed : GammaPolicyKind::LifetimeFraction;
  g.value = fixed ? s.required<double>("value") : s.required<double>("lifetime_fraction");
  g.ceiling = s.get<double>("ceiling", g.ceiling);
  s.finish();
  return g;
}

PulseConfig parse_pulse(const YAML::Node& node, const std::string& path) {
  Section s(node, path);
  PulseConfig p;
  p.delta = s.optional<double>("delta");
  if (s.has("target")) {
    Section t(s.child("target"), s.key_path("target"));
    p.target = PulseTarget{t.required<int>("source"), t.required<int>("sideband")};
    t.finish();
  }
  if (p.delta.has_value() == p.target.has_value()) throw ConfigError(path + " needs exactly one of delta, target");
  p.rabi = s.optional<double>("rabi");
  p.rabi_over_gamma = s.optional<double>("rabi_over_gamma");
  if (p.rabi.has_value() == p.rabi_over_gamma.has_value()) {
    throw ConfigError(path + " needs exactly one of rabi, rabi_over_gamma");
  }
  p.duration = s.required<double>("duration");
  if (!s.has("gamma")) throw ConfigError("missing required key " + s.key_path("gamma"));
  p.gamma = parse_gamma(s.child("gamma"), s.key_path("gamma"));
  p.repeats = s.get<int>("repeats", 1);
  p.label = s.get<std::string>("label", "");
  s.finish();
  return p;
}

StageConfig parse_stage(const YAML::Node& node, const std::string& path, double omega) {
  Section s(node, path);
  StageConfig st;
  st.label = s.get<std::string>("label", "");
  const YAML::Node pulses = s.child("pulses");
  if (!pulses || !pulses.IsSequence() || pulses.size() == 0) {
    throw ConfigError(s.key_path("pulses") + " must be a non-empty list");
  }
  for (std::size_t i = 0; i < pulses.size(); ++i) {
    st.pulses.push_back(parse_pulse(pulses[i], s.key_path("pulses") + "." + std::to_string(i)));
  }
  if (s.has("stop")) {
    Section t(s.child("stop"), s.key_path("stop"));
    st.stop.target_t_over_tf = t.get<double>("target", 0.0);
    st.stop.plateau = t.get<double>("plateau", 0.0);
    if (t.has("max_time") && t.has("max_seconds")) {
      throw ConfigError(t.key_path("max_time") + " and max_seconds are exclusive");
    }
    st.stop.max_time = t.get<double>("max_time", 0.0);
    if (t.has("max_seconds")) st.stop.max_time = seconds_to_inv_omega(t.required<double>("max_seconds"), omega);
    st.stop.max_cycles = t.get<int>("max_cycles", 1);
    t.finish();
  }
  s.finish();
  return st;
}

Dimension parse_dimension(const std::string& v, const std::string& path) {
  if (v == "1d") return Dimension::OneD;
  if (v == "3d") return Dimension::ThreeDIsotropic;
  throw ConfigError(path + ": unknown dimension '" + v + "' (expected 1d or 3d)");
}

RunConfig parse_node(const YAML::Node& root) {
  if (!root || root.IsNull()) throw ConfigError("empty configuration");
  Section s(root, "");
  RunConfig c;
  c.name = s.get<std::string>("name", "");
  {
    if (!s.has("trap")) throw ConfigError("missing required key trap");
    Section t(s.child("trap"), "trap");
    c.trap.dimension = parse_dimension(t.get<std::string>("dimension", "1d"), "trap.dimension");
    c.trap.omega = t.get<double>("omega", c.trap.omega);
    c.trap.alpha = t.get<double>("alpha", 0.0);
    c.trap.eta = t.required<double>("eta");
    c.trap.n_max = t.required<int>("n_max");
    c.trap.excited_scale = t.get<double>("excited_scale", 1.0);
    t.finish();
  }
  {
    if (!s.has("initial")) throw ConfigError("missing required key initial");
    Section t(s.child("initial"), "initial");
    c.initial.snapshot = t.get<std::string>("snapshot", "");
    if (c.initial.snapshot.empty()) {
      c.initial.atoms = t.required<double>("atoms");
      c.initial.t_over_tf = t.required<double>("t_over_tf");
    } else {
      c.initial.atoms = t.get<double>("atoms", 0.0);
      c.initial.t_over_tf = t.get<double>("t_over_tf", 0.0);
    }
    c.initial.tail_tolerance = t.get<double>("tail_tolerance", c.initial.tail_tolerance);
    t.finish();
  }
  {
    const YAML::Node seq = s.child("sequence");
    if (!seq || !seq.IsSequence() || seq.size() == 0) throw ConfigError("sequence must be a non-empty list");
    for (std::size_t i = 0; i < seq.size(); ++i) {
      c.sequence.push_back(parse_stage(seq[i], "sequence." + std::to_string(i), c.trap.omega));
    }
  }
  if (s.has("numerics")) {
    Section t(s.child("numerics"), "numerics");
    NumericsConfig& n = c.numerics;
    if (t.has("pattern")) {
      try {
        n.pattern = pattern_from_string(t.required<std::string>("pattern"));
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("numerics.pattern: ") + e.what());
      }
    }
    n.quadrature = t.get<int>("quadrature", n.quadrature);
    n.window = t.get<double>("window", n.window);
    n.nearest = t.get<int>("nearest", n.nearest);
    n.rate_floor = t.get<double>("rate_floor", n.rate_floor);
    n.refresh = t.get<double>("refresh", n.refresh);
    n.segments = t.get<int>("segments", n.segments);
    n.drift = t.get<double>("drift", n.drift);
    n.safety = t.get<double>("safety", n.safety);
    n.tolerance = t.get<double>("tolerance", n.tolerance);
    if (t.has("loss")) {
      try {
        n.loss = loss_policy_from_string(t.required<std::string>("loss"));
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("numerics.loss: ") + e.what());
      }
    }
    n.loss_tail = t.get<double>("loss_tail", n.loss_tail);
    n.sommerfeld_limit = t.get<double>("sommerfeld_limit", n.sommerfeld_limit);
    n.table_budget_mb = t.get<double>("table_budget_mb", n.table_budget_mb);
    t.finish();
  }
  if (s.has("outputs")) {
    Section t(s.child("outputs"), "outputs");
    c.outputs.directory = t.get<std::string>("directory", c.outputs.directory);
    c.outputs.sample_every = t.get<int>("sample_every", c.outputs.sample_every);
    t.finish();
  }
  s.finish();
  return c;
}

bool is_index(const std::string& key) {
  return !key.empty() && key.find_first_not_of("0123456789") == std::string::npos;
}

void set_path(YAML::Node node, const std::vector<std::string>& keys, std::size_t i, const YAML::Node& value,
              const std::string& full) {
  const std::string& key = keys[i];
  const bool last = i + 1 == keys.size();
  if (node.IsSequence()) {
    if (!is_index(key)) throw ConfigError("override " + full + ": '" + key + "' is not a list index");
    const auto idx = std::stoul(key);
    if (idx >= node.size()) throw ConfigError("override " + full + ": index " + key + " out of range");
    if (last) {
      node[idx] = value;
    } else {
      set_path(node[idx], keys, i + 1, value, full);
    }
    return;
  }
  if (!node.IsMap()) throw ConfigError("override " + full + ": '" + key + "' is below a scalar");
  if (last) {
    node[key] = value;
    return;
  }
  if (!node[key]) node[key] = YAML::Node(YAML::NodeType::Map);
  set_path(node[key], keys, i + 1, value, full);
}

void apply_override(YAML::Node& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string path = assignment.substr(0, eq);
  std::vector<std::string> keys;
  std::stringstream ss(path);
  for (std::string k; std::getline(ss, k, '.');) {
    if (k.empty()) throw ConfigError("override '" + assignment + "' has an empty key");
    keys.push_back(k);
  }
  YAML::Node value;
  try {
    value = YAML::Load(assignment.substr(eq + 1));
  } catch (const YAML::Exception& e) {
    throw ConfigError("override " + path + ": " + e.what());
  }
  set_path(root, keys, 0, value, path);
}

RunConfig parse_with_overrides(YAML::Node root, const std::vector<std::string>& overrides) {
  if (!root.IsMap()) throw ConfigError("configuration must be a mapping");
  for (const auto& o : overrides) apply_override(root, o);
  return parse_node(root);
}

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

const char* kFig1 = R"(name: fig1
trap:
  dimension: 1d
  eta: 2
  n_max: 500
  alpha: 0
initial:
  atoms: 200
  t_over_tf: 0.65
  # 10.6 atoms of the thermal tail sit above level 500
  tail_tolerance: 0.06
sequence:
  - label: stage1
    pulses:
      - {delta: -15, rabi: 0.25, duration: 100, gamma: {lifetime_fraction: 0.05, ceiling: 8}}
      - {delta: -16, rabi: 0.25, duration: 100, gamma: {lifetime_fraction: 0.05, ceiling: 8}}
    stop: {target: 0.1, max_seconds: 4, max_cycles: 100000}
numerics:
  # one rate build per pulse; R drift triggers extra rebuilds
  refresh: 100
  loss: pulse-end
  loss_tail: 600
)";

const char* kFig2 = R"(name: fig2
trap:
  dimension: 1d
  eta: 2
  n_max: 500
  alpha: 1.04e-5
initial:
  atoms: 181
  t_over_tf: 0.08
sequence:
  - label: stage2
    pulses:
      - {target: {source: 181, sideband: -47}, rabi: 0.016, duration: 5000, gamma: 0.02}
      - {target: {source: 181, sideband: -48}, rabi: 0.016, duration: 5000, gamma: 0.02}
    stop: {target: 0.01, max_seconds: 5, max_cycles: 1000}
numerics:
  loss: pulse-end
  loss_tail: 600
)";

}  // namespace

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("YAML syntax: ") + e.what());
  }
  return parse_with_overrides(root, overrides);
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

std::vector<std::string> preset_names() { return {"fig1", "fig2", "fig3", "fig3-reduced"}; }

namespace {

struct StageTemplate {
  std::pair<int, int> sidebands;
  std::pair<int, int> centers;
  std::pair<double, double> gammas;
};

// Seven two-pulse stages; Omega = 0.8 gamma except 0.1 gamma on the 11th pulse.
const StageTemplate kStages3d[] = {
    {{-6, -7}, {16, 16}, {0.0075, 0.0088}}, {{-14, -15}, {40, 40}, {0.025, 0.026}},
    {{-19, -20}, {90, 90}, {0.071, 0.075}}, {{-19, -20}, {70, 70}, {0.048, 0.05}},
    {{-18, -19}, {61, 61}, {0.045, 0.048}}, {{-20, -18}, {53, 57}, {0.48, 0.028}},
    {{-20, -18}, {56, 56}, {0.15, 0.07}},
};

// Same stages with band centers scaled by the Fermi-shell ratio 21/53 and
// sidebands by its square root (the Franck-Condon reach grows like sqrt(n)).
const StageTemplate kStages3dReduced[] = {
    {{-4, -5}, {6, 6}, {0.0075, 0.0088}},     {{-9, -10}, {16, 16}, {0.025, 0.026}},
    {{-12, -13}, {36, 36}, {0.071, 0.075}},   {{-12, -13}, {28, 28}, {0.048, 0.05}},
    {{-11, -12}, {24, 24}, {0.045, 0.048}},   {{-13, -11}, {21, 23}, {0.48, 0.028}},
    {{-13, -11}, {22, 22}, {0.15, 0.07}},
};

std::string stages_3d(const StageTemplate* stages, int cycles, double plateau) {
  std::ostringstream o;
  int pulse = 0;
  for (int s = 0; s < 7; ++s) {
    const auto& st = stages[s];
    o << "  - label: stage" << (s + 1) << "\n    pulses:\n";
    const int sb[2] = {st.sidebands.first, st.sidebands.second};
    const int c[2] = {st.centers.first, st.centers.second};
    const double g[2] = {st.gammas.first, st.gammas.second};
    for (int k = 0; k < 2; ++k) {
      ++pulse;
      const double ratio = pulse == 11 ? 0.1 : 0.8;
      o << "      - {target: {source: " << c[k] << ", sideband: " << sb[k] << "}, rabi_over_gamma: " << num(ratio)
        << ", duration: " << num(10.0 / g[k]) << ", gamma: " << num(g[k]) << "}\n";
    }
    o << "    stop: {plateau: " << num(plateau) << ", max_cycles: " << cycles << "}\n";
  }
  return o.str();
}

}  // namespace

std::string preset_text(const std::string& name) {
  if (name == "fig1") return kFig1;
  if (name == "fig2") return kFig2;
  if (name == "fig3") {
    return std::string(R"(name: fig3
trap:
  dimension: 3d
  eta: 2
  n_max: 100
  alpha: 1.24e-4
initial:
  atoms: 26235
  t_over_tf: 1.14
  # the shell ladder is the whole system; the thermal state is truncated to it
  tail_tolerance: 5
sequence:
)") + stages_3d(kStages3d, 40, 1e-4) +
           R"(numerics:
  quadrature: 64
  loss: pulse-end
  loss_tail: 600
)";
  }
  if (name == "fig3-reduced") {
    return std::string(R"(name: fig3-reduced
trap:
  dimension: 3d
  eta: 2
  n_max: 40
  alpha: 4.8e-4
initial:
  atoms: 1771
  t_over_tf: 1.14
  tail_tolerance: 5
sequence:
)") + stages_3d(kStages3dReduced, 40, 1e-4) +
           R"(numerics:
  quadrature: 64
  loss: pulse-end
  loss_tail: 600
)";
  }
  throw ConfigError("unknown preset '" + name + "' (expected fig1, fig2, fig3 or fig3-reduced)");
}

RunConfig preset_config(const std::string& name, const std::vector<std::string>& overrides) {
  return parse_config(preset_text(name), overrides);
}

std::string echo_config(const RunConfig& c) {
  std::ostringstream o;
  o << "name: " << quote(c.name) << "\n";
  o << "trap:\n";
  o << "  dimension: " << (c.trap.dimension == Dimension::OneD ? "1d" : "3d") << "\n";
  o << "  omega: " << num(c.trap.omega) << "\n";
  o << "  alpha: " << num(c.trap.alpha) << "\n";
  o << "  eta: " << num(c.trap.eta) << "\n";
  o << "  n_max: " << c.trap.n_max << "\n";
  o << "  excited_scale: " << num(c.trap.excited_scale) << "\n";
  o << "initial:\n";
  if (!c.initial.snapshot.empty()) o << "  snapshot: " << quote(c.initial.snapshot) << "\n";
  o << "  atoms: " << num(c.initial.atoms) << "\n";
  o << "  t_over_tf: " << num(c.initial.t_over_tf) << "\n";
  o << "  tail_tolerance: " << num(c.initial.tail_tolerance) << "\n";
  o << "sequence:\n";
  for (const auto& st : c.sequence) {
    o << "  - label: " << quote(st.label) << "\n    pulses:\n";
    for (const auto& p : st.pulses) {
      o << "      - {";
      if (p.delta) o << "delta: " << num(*p.delta);
      if (p.target) o << "target: {source: " << p.target->source << ", sideband: " << p.target->sideband << "}";
      if (p.rabi) o << ", rabi: " << num(*p.rabi);
      if (p.rabi_over_gamma) o << ", rabi_over_gamma: " << num(*p.rabi_over_gamma);
      o << ", duration: " << num(p.duration) << ", gamma: {";
      o << (p.gamma.kind == GammaPolicyKind::Fixed ? "value: " : "lifetime_fraction: ") << num(p.gamma.value)
        << ", ceiling: " << num(p.gamma.ceiling) << "}";
      o << ", repeats: " << p.repeats << ", label: " << quote(p.label) << "}\n";
    }
    o << "    stop: {target: " << num(st.stop.target_t_over_tf) << ", plateau: " << num(st.stop.plateau)
      << ", max_time: " << num(st.stop.max_time) << ", max_cycles: " << st.stop.max_cycles << "}\n";
  }
  const NumericsConfig& n = c.numerics;
  o << "numerics:\n";
  o << "  pattern: " << to_string(n.pattern) << "\n";
  o << "  quadrature: " << n.quadrature << "\n";
  o << "  window: " << num(n.window) << "\n";
  o << "  nearest: " << n.nearest << "\n";
  o << "  rate_floor: " << num(n.rate_floor) << "\n";
  o << "  refresh: " << num(n.refresh) << "\n";
  o << "  segments: " << n.segments << "\n";
  o << "  drift: " << num(n.drift) << "\n";
  o << "  safety: " << num(n.safety) << "\n";
  o << "  tolerance: " << num(n.tolerance) << "\n";
  o << "  loss: " << to_string(n.loss) << "\n";
  o << "  loss_tail: " << num(n.loss_tail) << "\n";
  o << "  sommerfeld_limit: " << num(n.sommerfeld_limit) << "\n";
  o << "  table_budget_mb: " << num(n.table_budget_mb) << "\n";
  o << "outputs:\n";
  o << "  directory: " << quote(c.outputs.directory) << "\n";
  o << "  sample_every: " << c.outputs.sample_every << "\n";
  return o.str();
}

TrapSpec trap_of(const RunConfig& config) { return config.trap; }

RateOptions rate_options(const NumericsConfig& n) {
  RateOptions r;
  r.window = n.window;
  r.nearest = n.nearest;
  r.rate_floor = n.rate_floor;
  return r;
}

DynamicsOptions dynamics_options(const NumericsConfig& n) {
  DynamicsOptions d;
  d.safety = n.safety;
  d.tolerance = n.tolerance;
  d.refresh = n.refresh;
  d.segments = n.segments;
  d.drift = n.drift;
  d.loss = n.loss;
  d.loss_tail = n.loss_tail;
  d.sommerfeld_limit = n.sommerfeld_limit;
  return d;
}

namespace {

Pulse compile_pulse(const PulseConfig& pc, const LevelLadder& ladder, const std::string& path) {
  Pulse p;
  if (pc.delta) {
    p.delta = *pc.delta;
  } else {
    const int m = pc.target->source;
    const int l = m + pc.target->sideband;
    if (m < 0 || m > ladder.n_max() || l < 0 || l > ladder.n_max()) {
      throw ConfigError(path + ".target: levels " + std::to_string(m) + " -> " + std::to_string(l) +
                        " outside the ladder [0, " + std::to_string(ladder.n_max()) + "]");
    }
    p.delta = ladder.excited_energy(l) - ladder.energy(m);
  }
  if (pc.rabi) {
    p.rabi = *pc.rabi;
  } else {
    if (pc.gamma.kind != GammaPolicyKind::Fixed) {
      throw ConfigError(path + ".rabi_over_gamma needs a fixed gamma");
    }
    p.rabi = *pc.rabi_over_gamma * pc.gamma.value;
  }
  p.duration = pc.duration;
  p.gamma = pc.gamma;
  p.repeats = pc.repeats;
  p.label = pc.label;
  return p;
}

}  // namespace

std::vector<Stage> compile_stages(const RunConfig& config, const LevelLadder& ladder) {
  std::vector<Stage> out;
  for (std::size_t i = 0; i < config.sequence.size(); ++i) {
    const auto& sc = config.sequence[i];
    Stage st;
    st.label = sc.label.empty() ? "stage" + std::to_string(i + 1) : sc.label;
    st.stop = sc.stop;
    for (std::size_t k = 0; k < sc.pulses.size(); ++k) {
      const std::string path = "sequence." + std::to_string(i) + ".pulses." + std::to_string(k);
      Pulse p = compile_pulse(sc.pulses[k], ladder, path);
      if (p.label.empty()) p.label = st.label + "." + std::to_string(k + 1);
      st.pulses.push_back(std::move(p));
    }
    out.push_back(std::move(st));
  }
  return out;
}

std::vector<std::string> validate_config(const RunConfig& c) {
  std::vector<std::string> warnings;
  const LevelLadder ladder = build_ladder(c.trap);  // trap constraints
  const auto& n = c.numerics;
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  if (c.initial.snapshot.empty()) {
    require(c.initial.atoms > 0.0, "initial.atoms must be > 0");
    require(c.initial.atoms <= static_cast<double>(ladder.capacity()),
            "initial.atoms exceeds the ladder capacity " + std::to_string(ladder.capacity()));
    require(c.initial.t_over_tf >= 0.0, "initial.t_over_tf must be >= 0");
  }
  require(c.initial.tail_tolerance > 0.0, "initial.tail_tolerance must be > 0");
  require(n.quadrature >= 8 && n.quadrature % 2 == 0, "numerics.quadrature must be an even count >= 8");
  require(n.window > 0.0, "numerics.window must be > 0");
  require(n.nearest >= 0, "numerics.nearest must be >= 0");
  require(n.rate_floor >= 0.0 && n.rate_floor < 1.0, "numerics.rate_floor must be in [0, 1)");
  require(n.refresh >= 0.0, "numerics.refresh must be >= 0");
  require(n.segments >= 1, "numerics.segments must be >= 1");
  require(n.drift > 0.0, "numerics.drift must be > 0");
  require(n.safety > 0.0 && n.safety <= 1.0, "numerics.safety must be in (0, 1]");
  require(n.tolerance > 0.0, "numerics.tolerance must be > 0");
  require(n.loss_tail >= 0.0, "numerics.loss_tail must be >= 0");
  require(n.sommerfeld_limit > 0.0, "numerics.sommerfeld_limit must be > 0");
  require(n.table_budget_mb > 0.0, "numerics.table_budget_mb must be > 0");
  require(c.outputs.sample_every >= 1, "outputs.sample_every must be >= 1");
  if (c.trap.dimension == Dimension::OneD) {
    const auto bytes = estimate_fc_table_bytes(c.trap.n_max, n.quadrature);
    require(static_cast<double>(bytes) <= n.table_budget_mb * 1024.0 * 1024.0,
            "Franck-Condon table needs " + std::to_string(bytes >> 20) + " MiB, above numerics.table_budget_mb");
  }
  const auto stages = compile_stages(c, ladder);
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const std::string sp = "sequence." + std::to_string(i);
    const auto& stop = stages[i].stop;
    require(stop.max_cycles >= 1, sp + ".stop.max_cycles must be >= 1");
    require(stop.target_t_over_tf >= 0.0 && stop.plateau >= 0.0 && stop.max_time >= 0.0,
            sp + ".stop values must be >= 0");
    for (std::size_t k = 0; k < stages[i].pulses.size(); ++k) {
      const std::string pp = sp + ".pulses." + std::to_string(k);
      const Pulse& p = stages[i].pulses[k];
      std::vector<std::string> w;
      try {
        w = validate(p);
      } catch (const ConfigError& e) {
        throw ConfigError(pp + ": " + e.what());
      }
      for (auto& s : w) warnings.push_back(pp + ": " + s);
      if (c.trap.alpha > 0.0) {
        const auto& pc = c.sequence[i].pulses[k];
        const int s = pc.target ? pc.target->sideband : static_cast<int>(std::lround(p.delta));
        if (s != 0) {
          const BandCheck band = check_band_constraint(c.trap.alpha, c.trap.n_max, s);
          require(band.pass, pp + ": band constraint alpha*n_max < 1/(4|s|) fails for s = " + std::to_string(s));
        }
      }
    }
  }
  return warnings;
}

}  // namespace fermicool
