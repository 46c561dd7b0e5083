#include "subband/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <numeric>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "subband/error.hpp"

namespace subband {

namespace {

struct Ctx {
  std::string source;
  bool positions = true;  // false for command-line overrides
};

[[noreturn]] void fail_at(const Ctx& ctx, const YAML::Mark& mark, const std::string& msg) {
  std::string where = ctx.source;
  if (ctx.positions && !mark.is_null())
    where += ":" + std::to_string(mark.line + 1) + ":" + std::to_string(mark.column + 1);
  throw Error(ErrorCode::kConfig, where + ": " + msg);
}

[[noreturn]] void fail(const Ctx& ctx, const YAML::Node& node, const std::string& msg) {
  fail_at(ctx, node.Mark(), msg);
}

template <class T>
T as(const Ctx& ctx, const YAML::Node& node, const std::string& key, const char* what) {
  if (!node.IsScalar()) fail(ctx, node, key + ": expected " + what);
  try {
    return node.as<T>();
  } catch (const YAML::BadConversion&) {
    fail(ctx, node, key + ": expected " + what + ", got '" + node.Scalar() + "'");
  }
}

int int_at_least(const Ctx& ctx, const YAML::Node& node, const std::string& key, int lo) {
  const int v = as<int>(ctx, node, key, "an integer");
  if (v < lo) fail(ctx, node, key + ": must be >= " + std::to_string(lo));
  return v;
}

double real(const Ctx& ctx, const YAML::Node& node, const std::string& key) {
  const double v = as<double>(ctx, node, key, "a number");
  if (!std::isfinite(v)) fail(ctx, node, key + ": must be finite");
  return v;
}

double positive(const Ctx& ctx, const YAML::Node& node, const std::string& key) {
  const double v = real(ctx, node, key);
  if (!(v > 0.0)) fail(ctx, node, key + ": must be positive");
  return v;
}

double non_negative(const Ctx& ctx, const YAML::Node& node, const std::string& key) {
  const double v = real(ctx, node, key);
  if (v < 0.0) fail(ctx, node, key + ": must be >= 0");
  return v;
}

std::string text(const Ctx& ctx, const YAML::Node& node, const std::string& key) {
  return as<std::string>(ctx, node, key, "a string");
}

std::vector<std::string> string_list(const Ctx& ctx, const YAML::Node& node,
                                     const std::string& key) {
  std::vector<std::string> out;
  if (node.IsScalar()) {
    // comma-separated form, convenient for command-line overrides
    std::stringstream ss(node.Scalar());
    for (std::string item; std::getline(ss, item, ',');)
      if (!item.empty()) out.push_back(item);
    return out;
  }
  if (!node.IsSequence()) fail(ctx, node, key + ": expected a list");
  for (const auto& item : node) out.push_back(text(ctx, item, key));
  return out;
}

template <class T, class Parse>
std::vector<T> number_list(const Ctx& ctx, const YAML::Node& node, const std::string& key,
                           Parse parse) {
  std::vector<T> out;
  if (node.IsScalar()) {
    std::stringstream ss(node.Scalar());
    for (std::string item; std::getline(ss, item, ',');) {
      if (item.empty()) continue;
      out.push_back(parse(YAML::Load(item)));
    }
    return out;
  }
  if (!node.IsSequence()) fail(ctx, node, key + ": expected a list");
  for (const auto& item : node) out.push_back(parse(item));
  return out;
}

template <class Obj>
using Setter = std::function<void(Obj&, const YAML::Node&, const Ctx&, const std::string& key)>;

template <class Obj>
using Fields = std::vector<std::pair<std::string, Setter<Obj>>>;

template <class Obj>
std::string key_list(const Fields<Obj>& fields) {
  std::string out;
  for (const auto& [name, _] : fields) out += (out.empty() ? "" : ", ") + name;
  return out;
}

template <class Obj>
const Setter<Obj>* find_field(const Fields<Obj>& fields, const std::string& name) {
  for (const auto& [key, setter] : fields)
    if (key == name) return &setter;
  return nullptr;
}

/// Applies a YAML mapping to `obj`. Keys listed in `first` are handled
/// before all others regardless of their position in the file.
template <class Obj>
void apply_map(Obj& obj, const YAML::Node& node, const Ctx& ctx, const std::string& prefix,
               const Fields<Obj>& fields, std::initializer_list<const char*> first = {}) {
  if (node.IsNull()) return;
  if (!node.IsMap()) fail(ctx, node, (prefix.empty() ? "document" : prefix) + ": expected a mapping");
  std::vector<std::pair<YAML::Node, YAML::Node>> items;
  for (const auto& kv : node) items.emplace_back(kv.first, kv.second);
  // Reorder indices, not nodes: assigning a YAML::Node writes through to the
  // node it refers to.
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_partition(order.begin(), order.end(), [&](std::size_t i) {
    const std::string k = items[i].first.Scalar();
    return std::any_of(first.begin(), first.end(), [&](const char* f) { return k == f; });
  });
  for (std::size_t i : order) {
    const YAML::Node& k = items[i].first;
    const YAML::Node& v = items[i].second;
    const std::string name = k.Scalar();
    const std::string path = prefix.empty() ? name : prefix + "." + name;
    const auto* setter = find_field(fields, name);
    if (!setter)
      fail(ctx, k, "unknown key '" + path + "' (expected one of: " + key_list(fields) + ")");
    (*setter)(obj, v, ctx, path);
  }
}

// --- scenario blocks ---------------------------------------------------------

LosModel parse_los_model(const Ctx& ctx, const YAML::Node& node, const std::string& key) {
  const std::string s = text(ctx, node, key);
  if (s == "inf_clutter") return LosModel::kInfClutter;
  if (s == "inh_mixed_office") return LosModel::kInhMixedOffice;
  fail(ctx, node, key + ": expected inf_clutter or inh_mixed_office, got '" + s + "'");
}

const char* los_model_name(LosModel m) {
  return m == LosModel::kInfClutter ? "inf_clutter" : "inh_mixed_office";
}

const char* metric_name(InterferenceMetric m) {
  return m == InterferenceMetric::kLargeScale ? "large_scale" : "instantaneous";
}

const char* init_name(InitScheme s) {
  return s == InitScheme::kRandomNormal ? "random_normal" : "constant";
}

const Fields<ChannelProfile>& channel_fields() {
  static const Fields<ChannelProfile> f = {
      {"profile",
       [](ChannelProfile& c, const YAML::Node& n, const Ctx& ctx, const std::string& k) {
         try {
           c = ChannelProfile::preset(parse_channel_profile_id(text(ctx, n, k)));
         } catch (const Error& e) {
           fail(ctx, n, k + ": " + e.what());
         }
       }},
      {"los_model", [](ChannelProfile& c, const YAML::Node& n, const Ctx& ctx,
                       const std::string& k) { c.los_model = parse_los_model(ctx, n, k); }},
      {"ple_los", [](auto& c, auto& n, auto& ctx, auto& k) { c.ple_los = positive(ctx, n, k); }},
      {"ple_nlos", [](auto& c, auto& n, auto& ctx, auto& k) { c.ple_nlos = positive(ctx, n, k); }},
      {"sf_std_los_db",
       [](auto& c, auto& n, auto& ctx, auto& k) { c.sf_std_los_db = non_negative(ctx, n, k); }},
      {"sf_std_nlos_db",
       [](auto& c, auto& n, auto& ctx, auto& k) { c.sf_std_nlos_db = non_negative(ctx, n, k); }},
      {"clutter_density",
       [](auto& c, auto& n, auto& ctx, auto& k) {
         const double v = real(ctx, n, k);
         if (!(v > 0.0 && v < 1.0)) fail(ctx, n, k + ": must lie in (0, 1)");
         c.clutter_density = v;
       }},
      {"clutter_size_m",
       [](auto& c, auto& n, auto& ctx, auto& k) { c.clutter_size_m = positive(ctx, n, k); }},
      {"corr_distance_m",
       [](auto& c, auto& n, auto& ctx, auto& k) { c.corr_distance_m = non_negative(ctx, n, k); }},
      {"carrier_freq_ghz",
       [](auto& c, auto& n, auto& ctx, auto& k) { c.carrier_freq_ghz = positive(ctx, n, k); }},
      {"beta_los_db", [](auto& c, auto& n, auto& ctx, auto& k) { c.beta_los_db = real(ctx, n, k); }},
      {"beta_nlos_db",
       [](auto& c, auto& n, auto& ctx, auto& k) { c.beta_nlos_db = real(ctx, n, k); }},
      {"freq_coef_los",
       [](auto& c, auto& n, auto& ctx, auto& k) { c.freq_coef_los = real(ctx, n, k); }},
      {"freq_coef_nlos",
       [](auto& c, auto& n, auto& ctx, auto& k) { c.freq_coef_nlos = real(ctx, n, k); }},
      {"nlos_floor_at_los",
       [](auto& c, auto& n, auto& ctx, auto& k) {
         c.nlos_floor_at_los = as<bool>(ctx, n, k, "true or false");
       }},
  };
  return f;
}

const Fields<Scenario>& scenario_fields() {
  static const Fields<Scenario> f = {
      {"preset",
       [](Scenario& s, const YAML::Node& n, const Ctx& ctx, const std::string& k) {
         const std::string name = s.name;
         try {
           s = Scenario::preset(text(ctx, n, k));
         } catch (const Error& e) {
           fail(ctx, n, k + ": " + e.what());
         }
         s.name = name;
       }},
      {"n_subnetworks", [](Scenario& s, auto& n, auto& ctx, auto& k) {
         s.deploy.n_subnetworks = int_at_least(ctx, n, k, 1);
       }},
      {"area_width_m", [](Scenario& s, auto& n, auto& ctx, auto& k) {
         s.deploy.area_width_m = positive(ctx, n, k);
       }},
      {"area_height_m", [](Scenario& s, auto& n, auto& ctx, auto& k) {
         s.deploy.area_height_m = positive(ctx, n, k);
       }},
      {"devices_per_subnetwork", [](Scenario& s, auto& n, auto& ctx, auto& k) {
         s.deploy.devices_per_subnetwork = int_at_least(ctx, n, k, 1);
       }},
      {"subnetwork_radius_m", [](Scenario& s, auto& n, auto& ctx, auto& k) {
         s.deploy.subnetwork_radius_m = positive(ctx, n, k);
       }},
      {"min_ap_separation_m", [](Scenario& s, auto& n, auto& ctx, auto& k) {
         s.deploy.min_ap_separation_m = non_negative(ctx, n, k);
       }},
      {"min_device_ap_distance_m", [](Scenario& s, auto& n, auto& ctx, auto& k) {
         s.deploy.min_device_ap_distance_m = non_negative(ctx, n, k);
       }},
      {"n_subbands", [](Scenario& s, auto& n, auto& ctx, auto& k) {
         s.noise.n_subbands = int_at_least(ctx, n, k, 2);
       }},
      {"total_bandwidth_hz", [](Scenario& s, auto& n, auto& ctx, auto& k) {
         s.noise.total_bandwidth_hz = positive(ctx, n, k);
       }},
      {"noise_figure_db", [](Scenario& s, auto& n, auto& ctx, auto& k) {
         s.noise.noise_figure_db = real(ctx, n, k);
       }},
      {"thermal_noise_dbm_per_hz", [](Scenario& s, auto& n, auto& ctx, auto& k) {
         s.noise.thermal_density_dbm_hz = real(ctx, n, k);
       }},
      {"tx_power_dbm",
       [](Scenario& s, auto& n, auto& ctx, auto& k) { s.tx_power_dbm = real(ctx, n, k); }},
      {"fading", [](Scenario& s, auto& n, auto& ctx, auto& k) {
         s.channel_options.fading = as<bool>(ctx, n, k, "true or false");
       }},
      {"graph_metric",
       [](Scenario& s, const YAML::Node& n, const Ctx& ctx, const std::string& k) {
         const std::string v = text(ctx, n, k);
         if (v == "large_scale") s.graph_metric = InterferenceMetric::kLargeScale;
         else if (v == "instantaneous") s.graph_metric = InterferenceMetric::kInstantaneous;
         else fail(ctx, n, k + ": expected large_scale or instantaneous, got '" + v + "'");
       }},
      {"channel",
       [](Scenario& s, const YAML::Node& n, const Ctx& ctx, const std::string& k) {
         apply_map(s.channel, n, ctx, k, channel_fields(), {"profile"});
         s.deploy.channel_profile = s.channel.id;
       }},
  };
  return f;
}

void apply_scenario(RunConfig& cfg, const std::string& name, const YAML::Node& node,
                    const Ctx& ctx, const std::string& path) {
  auto it = cfg.scenarios.find(name);
  if (it == cfg.scenarios.end()) {
    const bool has_preset = node.IsMap() && node["preset"];
    if (!has_preset)
      fail(ctx, node, path + ": new scenario needs a 'preset' key to start from");
    Scenario s;
    s.name = name;
    it = cfg.scenarios.emplace(name, s).first;
  }
  apply_map(it->second, node, ctx, path, scenario_fields(), {"preset"});
}

// --- other blocks ------------------------------------------------------------

const Fields<RunConfig>& model_fields() {
  static const Fields<RunConfig> f = {
      {"n_layers", [](RunConfig& c, auto& n, auto& ctx, auto& k) {
         c.model.n_layers = int_at_least(ctx, n, k, 1);
       }},
      {"embedding_dim", [](RunConfig& c, auto& n, auto& ctx, auto& k) {
         c.model.embedding_dim = int_at_least(ctx, n, k, 1);
       }},
      {"init_scheme",
       [](RunConfig& c, const YAML::Node& n, const Ctx& ctx, const std::string& k) {
         const std::string v = text(ctx, n, k);
         if (v == "random_normal") c.model.init_scheme = InitScheme::kRandomNormal;
         else if (v == "constant") c.model.init_scheme = InitScheme::kConstant;
         else fail(ctx, n, k + ": expected random_normal or constant, got '" + v + "'");
       }},
      {"init_seed", [](RunConfig& c, auto& n, auto& ctx, auto& k) {
         c.model.init_seed = as<std::uint64_t>(ctx, n, k, "an unsigned integer");
       }},
  };
  return f;
}

const Fields<RunConfig>& trainer_fields() {
  static const Fields<RunConfig> f = {
      {"batch_size", [](RunConfig& c, auto& n, auto& ctx, auto& k) {
         c.trainer.batch_size = int_at_least(ctx, n, k, 1);
       }},
      {"max_epochs", [](RunConfig& c, auto& n, auto& ctx, auto& k) {
         c.trainer.max_epochs = int_at_least(ctx, n, k, 1);
       }},
      {"learning_rate", [](RunConfig& c, auto& n, auto& ctx, auto& k) {
         c.trainer.learning_rate = positive(ctx, n, k);
       }},
      {"stop_tolerance", [](RunConfig& c, auto& n, auto& ctx, auto& k) {
         c.trainer.stop_tolerance = non_negative(ctx, n, k);
       }},
      {"dataset_size", [](RunConfig& c, auto& n, auto& ctx, auto& k) {
         c.trainer.dataset_size = int_at_least(ctx, n, k, 1);
       }},
  };
  return f;
}

const Fields<RunConfig>& eval_fields() {
  static const Fields<RunConfig> f = {
      {"n_snapshots", [](RunConfig& c, auto& n, auto& ctx, auto& k) {
         c.eval.n_snapshots = int_at_least(ctx, n, k, 1);
       }},
      {"allocators", [](RunConfig& c, auto& n, auto& ctx, auto& k) {
         c.eval.allocators = string_list(ctx, n, k);
       }},
      {"cdf_grid",
       [](RunConfig& c, const YAML::Node& n, const Ctx& ctx, const std::string& k) {
         c.eval.cdf_grid = number_list<double>(ctx, n, k, [&](const YAML::Node& item) {
           const double p = real(ctx, item, k);
           if (p < 0.0 || p > 1.0) fail(ctx, item, k + ": values must lie in [0, 1]");
           return p;
         });
       }},
  };
  return f;
}

const Fields<RunConfig>& bench_fields() {
  static const Fields<RunConfig> f = {
      {"n_list",
       [](RunConfig& c, const YAML::Node& n, const Ctx& ctx, const std::string& k) {
         c.bench.n_list = number_list<int>(
             ctx, n, k, [&](const YAML::Node& item) { return int_at_least(ctx, item, k, 1); });
       }},
      {"reps", [](RunConfig& c, auto& n, auto& ctx, auto& k) {
         c.bench.reps = int_at_least(ctx, n, k, 1);
       }},
      {"warmup", [](RunConfig& c, auto& n, auto& ctx, auto& k) {
         c.bench.warmup = int_at_least(ctx, n, k, 0);
       }},
      {"allocators", [](RunConfig& c, auto& n, auto& ctx, auto& k) {
         c.bench_allocators = string_list(ctx, n, k);
       }},
  };
  return f;
}

const Fields<RunConfig>& paths_fields() {
  static const Fields<RunConfig> f = {
      {"dataset", [](RunConfig& c, auto& n, auto& ctx, auto& k) { c.dataset_dir = text(ctx, n, k); }},
      {"model", [](RunConfig& c, auto& n, auto& ctx, auto& k) { c.model_path = text(ctx, n, k); }},
  };
  return f;
}

const Fields<RunConfig>& generalization_fields() {
  static const Fields<RunConfig> f = {
      {"scenarios", [](RunConfig& c, auto& n, auto& ctx, auto& k) {
         c.generalization_scenarios = string_list(ctx, n, k);
       }},
      {"models",
       [](RunConfig& c, const YAML::Node& n, const Ctx& ctx, const std::string& k) {
         if (n.IsNull()) return;
         if (!n.IsMap()) fail(ctx, n, k + ": expected a mapping of scenario to model file");
         for (const auto& kv : n)
           c.generalization_models[kv.first.Scalar()] =
               text(ctx, kv.second, k + "." + kv.first.Scalar());
       }},
  };
  return f;
}

template <class Fn>
Setter<RunConfig> block(Fn fields) {
  return [fields](RunConfig& c, const YAML::Node& n, const Ctx& ctx, const std::string& k) {
    apply_map(c, n, ctx, k, fields());
  };
}

const Fields<RunConfig>& top_fields() {
  static const Fields<RunConfig> f = {
      {"scale",
       [](RunConfig& c, const YAML::Node& n, const Ctx& ctx, const std::string& k) {
         const std::string v = text(ctx, n, k);
         if (v == "desk") c = RunConfig::desk();
         else if (v == "full") c = RunConfig::full();
         else fail(ctx, n, k + ": expected desk or full, got '" + v + "'");
       }},
      {"seed", [](RunConfig& c, auto& n, auto& ctx, auto& k) {
         c.seed = as<std::uint64_t>(ctx, n, k, "an unsigned integer");
       }},
      {"output_dir", [](RunConfig& c, auto& n, auto& ctx, auto& k) { c.output_dir = text(ctx, n, k); }},
      {"workers", [](RunConfig& c, auto& n, auto& ctx, auto& k) {
         c.workers = int_at_least(ctx, n, k, 0);
       }},
      {"scenario", [](RunConfig& c, auto& n, auto& ctx, auto& k) { c.scenario = text(ctx, n, k); }},
      {"scenarios",
       [](RunConfig& c, const YAML::Node& n, const Ctx& ctx, const std::string& k) {
         if (n.IsNull()) return;
         if (!n.IsMap()) fail(ctx, n, k + ": expected a mapping of scenario blocks");
         for (const auto& kv : n)
           apply_scenario(c, kv.first.Scalar(), kv.second, ctx, k + "." + kv.first.Scalar());
       }},
      {"model", block(model_fields)},
      {"trainer", block(trainer_fields)},
      {"eval", block(eval_fields)},
      {"bench", block(bench_fields)},
      {"paths", block(paths_fields)},
      {"generalization", block(generalization_fields)},
  };
  return f;
}

std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, end);
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

void emit_strings(YAML::Emitter& out, const std::vector<std::string>& items) {
  out << YAML::Flow << YAML::BeginSeq;
  for (const auto& s : items) out << s;
  out << YAML::EndSeq;
}

}  // namespace

// --- RunConfig ---------------------------------------------------------------

RunConfig RunConfig::desk() {
  RunConfig c;
  c.scale = "desk";
  for (const auto& name : Scenario::preset_names()) c.scenarios.emplace(name, Scenario::preset(name));
  c.trainer.dataset_size = 2000;
  c.trainer.max_epochs = 100;
  c.eval.n_snapshots = 1000;
  return c;
}

RunConfig RunConfig::full() {
  RunConfig c = desk();
  c.scale = "full";
  c.trainer.dataset_size = 50'000;
  c.trainer.max_epochs = 500;
  c.eval.n_snapshots = 10'000;
  return c;
}

const Scenario& RunConfig::scenario_named(const std::string& name) const {
  auto it = scenarios.find(name);
  if (it == scenarios.end()) {
    std::string known;
    for (const auto& [k, _] : scenarios) known += (known.empty() ? "" : ", ") + k;
    throw Error(ErrorCode::kConfig, "unknown scenario '" + name + "' (defined: " + known + ")");
  }
  return it->second;
}

const Scenario& RunConfig::active_scenario() const { return scenario_named(scenario); }

GgnnConfig RunConfig::model_for(const Scenario& s) const {
  GgnnConfig g = model;
  g.n_subbands = s.n_subbands();
  return g;
}

int RunConfig::resolved_workers() const {
  if (workers > 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

void RunConfig::validate() const {
  auto wrap = [](const std::string& where, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, where + ": " + e.what());
    }
  };
  for (const auto& [name, s] : scenarios) {
    wrap("scenarios." + name, [&] { s.validate(); });
    wrap("scenarios." + name, [&] { model_for(s).validate(); });
  }
  active_scenario();
  wrap("trainer", [&] { trainer.validate(); });
  wrap("eval", [&] { eval.validate(); });
  wrap("bench", [&] { bench.validate(); });
  if (bench_allocators.empty()) throw Error(ErrorCode::kConfig, "bench: allocator list is empty");
  for (const auto& list : {eval.allocators, bench_allocators})
    for (const auto& a : list)
      if (std::find(allocator_names().begin(), allocator_names().end(), a) ==
          allocator_names().end()) {
        std::string valid;
        for (const auto& v : allocator_names()) valid += (valid.empty() ? "" : ", ") + v;
        throw Error(ErrorCode::kConfig, "unknown allocator '" + a + "' (valid: " + valid + ")");
      }
  for (const auto& name : generalization_scenarios) scenario_named(name);
  for (const auto& [name, _] : generalization_models) scenario_named(name);
}

RunConfig parse_run_config(std::string_view yaml, const std::string& source) {
  const Ctx ctx{source};
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml));
  } catch (const YAML::ParserException& e) {
    fail_at(ctx, e.mark, e.msg);
  }
  RunConfig cfg = RunConfig::desk();
  apply_map(cfg, root, ctx, "", top_fields(), {"scale"});
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

void apply_override(RunConfig& cfg, std::string_view key, std::string_view value) {
  const Ctx ctx{"override " + std::string(key), false};
  if (key == "scale")
    throw Error(ErrorCode::kConfig, "scale can only be chosen in the config file");
  YAML::Node leaf;
  try {
    leaf = YAML::Load(std::string(value));
  } catch (const YAML::ParserException& e) {
    fail_at(ctx, YAML::Mark::null_mark(), e.msg);
  }
  // Rebuild the nested mapping the dotted key denotes and feed it through the
  // same path as the file parser.
  std::vector<std::string> parts;
  std::stringstream ss{std::string(key)};
  for (std::string p; std::getline(ss, p, '.');) {
    if (p.empty()) throw Error(ErrorCode::kConfig, "malformed override key '" + std::string(key) + "'");
    parts.push_back(p);
  }
  if (parts.empty()) throw Error(ErrorCode::kConfig, "empty override key");
  YAML::Node doc = leaf;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    YAML::Node m(YAML::NodeType::Map);
    m[*it] = doc;
    doc = m;
  }
  apply_map(cfg, doc, ctx, "", top_fields());
  cfg.validate();
}

std::string to_yaml(const RunConfig& cfg) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "scale" << YAML::Value << cfg.scale;
  out << YAML::Key << "seed" << YAML::Value << cfg.seed;
  out << YAML::Key << "output_dir" << YAML::Value << cfg.output_dir.string();
  out << YAML::Key << "workers" << YAML::Value << cfg.workers;
  out << YAML::Key << "scenario" << YAML::Value << cfg.scenario;

  out << YAML::Key << "scenarios" << YAML::Value << YAML::BeginMap;
  for (const auto& [name, s] : cfg.scenarios) {
    const auto& d = s.deploy;
    const auto& c = s.channel;
    out << YAML::Key << name << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "n_subnetworks" << YAML::Value << d.n_subnetworks;
    out << YAML::Key << "area_width_m" << YAML::Value << num(d.area_width_m);
    out << YAML::Key << "area_height_m" << YAML::Value << num(d.area_height_m);
    out << YAML::Key << "devices_per_subnetwork" << YAML::Value << d.devices_per_subnetwork;
    out << YAML::Key << "subnetwork_radius_m" << YAML::Value << num(d.subnetwork_radius_m);
    out << YAML::Key << "min_ap_separation_m" << YAML::Value << num(d.min_ap_separation_m);
    out << YAML::Key << "min_device_ap_distance_m" << YAML::Value
        << num(d.min_device_ap_distance_m);
    out << YAML::Key << "n_subbands" << YAML::Value << s.noise.n_subbands;
    out << YAML::Key << "total_bandwidth_hz" << YAML::Value << num(s.noise.total_bandwidth_hz);
    out << YAML::Key << "noise_figure_db" << YAML::Value << num(s.noise.noise_figure_db);
    out << YAML::Key << "thermal_noise_dbm_per_hz" << YAML::Value
        << num(s.noise.thermal_density_dbm_hz);
    out << YAML::Key << "tx_power_dbm" << YAML::Value << num(s.tx_power_dbm);
    out << YAML::Key << "fading" << YAML::Value << s.channel_options.fading;
    out << YAML::Key << "graph_metric" << YAML::Value << metric_name(s.graph_metric);
    out << YAML::Key << "channel" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "profile" << YAML::Value << std::string(to_string(c.id));
    out << YAML::Key << "los_model" << YAML::Value << los_model_name(c.los_model);
    out << YAML::Key << "ple_los" << YAML::Value << num(c.ple_los);
    out << YAML::Key << "ple_nlos" << YAML::Value << num(c.ple_nlos);
    out << YAML::Key << "sf_std_los_db" << YAML::Value << num(c.sf_std_los_db);
    out << YAML::Key << "sf_std_nlos_db" << YAML::Value << num(c.sf_std_nlos_db);
    if (c.los_model == LosModel::kInfClutter) {
      out << YAML::Key << "clutter_density" << YAML::Value << num(c.clutter_density);
      out << YAML::Key << "clutter_size_m" << YAML::Value << num(c.clutter_size_m);
    }
    out << YAML::Key << "corr_distance_m" << YAML::Value << num(c.corr_distance_m);
    out << YAML::Key << "carrier_freq_ghz" << YAML::Value << num(c.carrier_freq_ghz);
    out << YAML::Key << "beta_los_db" << YAML::Value << num(c.beta_los_db);
    out << YAML::Key << "beta_nlos_db" << YAML::Value << num(c.beta_nlos_db);
    out << YAML::Key << "freq_coef_los" << YAML::Value << num(c.freq_coef_los);
    out << YAML::Key << "freq_coef_nlos" << YAML::Value << num(c.freq_coef_nlos);
    out << YAML::Key << "nlos_floor_at_los" << YAML::Value << c.nlos_floor_at_los;
    out << YAML::EndMap;
    out << YAML::EndMap;
  }
  out << YAML::EndMap;

  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "n_layers" << YAML::Value << cfg.model.n_layers;
  out << YAML::Key << "embedding_dim" << YAML::Value << cfg.model.embedding_dim;
  out << YAML::Key << "init_scheme" << YAML::Value << init_name(cfg.model.init_scheme);
  out << YAML::Key << "init_seed" << YAML::Value << cfg.model.init_seed;
  out << YAML::EndMap;

  out << YAML::Key << "trainer" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "batch_size" << YAML::Value << cfg.trainer.batch_size;
  out << YAML::Key << "max_epochs" << YAML::Value << cfg.trainer.max_epochs;
  out << YAML::Key << "learning_rate" << YAML::Value << num(cfg.trainer.learning_rate);
  out << YAML::Key << "stop_tolerance" << YAML::Value << num(cfg.trainer.stop_tolerance);
  out << YAML::Key << "dataset_size" << YAML::Value << cfg.trainer.dataset_size;
  out << YAML::EndMap;

  out << YAML::Key << "eval" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "n_snapshots" << YAML::Value << cfg.eval.n_snapshots;
  out << YAML::Key << "allocators" << YAML::Value;
  emit_strings(out, cfg.eval.allocators);
  out << YAML::Key << "cdf_grid" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double p : cfg.eval.cdf_grid) out << num(p);
  out << YAML::EndSeq;
  out << YAML::EndMap;

  out << YAML::Key << "bench" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "n_list" << YAML::Value << YAML::Flow << cfg.bench.n_list;
  out << YAML::Key << "reps" << YAML::Value << cfg.bench.reps;
  out << YAML::Key << "warmup" << YAML::Value << cfg.bench.warmup;
  out << YAML::Key << "allocators" << YAML::Value;
  emit_strings(out, cfg.bench_allocators);
  out << YAML::EndMap;

  out << YAML::Key << "paths" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dataset" << YAML::Value << cfg.dataset_dir.string();
  out << YAML::Key << "model" << YAML::Value << cfg.model_path.string();
  out << YAML::EndMap;

  out << YAML::Key << "generalization" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "scenarios" << YAML::Value;
  emit_strings(out, cfg.generalization_scenarios);
  out << YAML::Key << "models" << YAML::Value << YAML::BeginMap;
  for (const auto& [name, path] : cfg.generalization_models)
    out << YAML::Key << name << YAML::Value << path.string();
  out << YAML::EndMap;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace subband
