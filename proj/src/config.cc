//
// Copyright 2026 The pdpreg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "pdpreg/config.h"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "pdpreg/errors.h"

namespace pdpreg {
namespace {

using nlohmann::json;

std::string Join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// A JSON object plus its dotted path, with typed getters that report the
// full field path on failure.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(Where(), "expected an object");
  }

  void AllowOnly(std::initializer_list<const char*> keys) const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool known = false;
      for (const char* k : keys) known = known || it.key() == k;
      if (!known) throw ConfigError(Join(path_, it.key()), "unknown field");
    }
  }

  bool Has(const char* key) const { return j_.contains(key); }

  Section Child(const char* key) const {
    return Section(At(key), Join(path_, key));
  }

  const json& At(const char* key) const {
    if (!j_.contains(key)) throw ConfigError(Join(path_, key), "missing field");
    return j_.at(key);
  }

  double Number(const char* key, double fallback) const {
    return Has(key) ? Number(key) : fallback;
  }
  double Number(const char* key) const {
    const json& v = At(key);
    if (!v.is_number()) throw ConfigError(Join(path_, key), "expected a number");
    return v.get<double>();
  }

  uint64_t Unsigned(const char* key, uint64_t fallback) const {
    return Has(key) ? Unsigned(key) : fallback;
  }
  uint64_t Unsigned(const char* key) const {
    const json& v = At(key);
    if (!v.is_number_unsigned()) {
      throw ConfigError(Join(path_, key), "expected a nonnegative integer");
    }
    return v.get<uint64_t>();
  }

  bool Bool(const char* key, bool fallback) const {
    if (!Has(key)) return fallback;
    const json& v = At(key);
    if (!v.is_boolean()) throw ConfigError(Join(path_, key), "expected a boolean");
    return v.get<bool>();
  }

  std::string String(const char* key, const std::string& fallback) const {
    return Has(key) ? String(key) : fallback;
  }
  std::string String(const char* key) const {
    const json& v = At(key);
    if (!v.is_string()) throw ConfigError(Join(path_, key), "expected a string");
    return v.get<std::string>();
  }

  const json& Array(const char* key) const {
    const json& v = At(key);
    if (!v.is_array()) throw ConfigError(Join(path_, key), "expected an array");
    return v;
  }

  std::string Field(const char* key) const { return Join(path_, key); }
  std::string Where() const { return path_.empty() ? "<root>" : path_; }

 private:
  const json& j_;
  std::string path_;
};

std::string Indexed(const std::string& field, std::size_t i) {
  return field + "[" + std::to_string(i) + "]";
}

// Runs a domain Validate() and rethrows its complaint against `field`.
template <typename F>
void ValidateAs(const std::string& field, F&& validate) {
  try {
    validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(field, e.what());
  }
}

Activation ParseActivation(const json& v, const std::string& field) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "identity") return Activation::kIdentity;
    if (s == "tanh") return Activation::kTanh;
    if (s == "relu") return Activation::kRelu;
  }
  throw ConfigError(field, "expected one of identity, tanh, relu");
}

ModelSpec ParseModel(const Section& s) {
  s.AllowOnly({"layer_sizes", "hidden_activations", "include_bias"});
  ModelSpec spec;
  const json& sizes = s.Array("layer_sizes");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (!sizes[i].is_number_unsigned()) {
      throw ConfigError(Indexed(s.Field("layer_sizes"), i),
                        "expected a positive integer");
    }
    spec.layer_sizes.push_back(sizes[i].get<std::size_t>());
  }
  if (s.Has("hidden_activations")) {
    const json& acts = s.Array("hidden_activations");
    for (std::size_t i = 0; i < acts.size(); ++i) {
      spec.hidden_activations.push_back(
          ParseActivation(acts[i], Indexed(s.Field("hidden_activations"), i)));
    }
  } else if (spec.layer_sizes.size() > 2) {
    spec.hidden_activations.assign(spec.layer_sizes.size() - 2, Activation::kTanh);
  }
  spec.include_bias = s.Bool("include_bias", false);
  ValidateAs(s.Where(), [&] { spec.Validate(); });
  return spec;
}

NoiseSpec ParseNoise(const Section& s) {
  s.AllowOnly({"mode", "sigma", "clip_c"});
  NoiseSpec noise;
  const std::string mode = s.String("mode", "none");
  if (mode == "none") {
    noise.mode = NoiseMode::kNone;
  } else if (mode == "iid") {
    noise.mode = NoiseMode::kIid;
  } else if (mode == "proportional") {
    noise.mode = NoiseMode::kProportional;
  } else {
    throw ConfigError(s.Field("mode"), "expected one of none, iid, proportional");
  }
  noise.sigma = s.Number("sigma", 0.0);
  if (s.Has("clip_c") && !s.At("clip_c").is_null()) noise.clip_c = s.Number("clip_c");
  ValidateAs(s.Where(), [&] { noise.Validate(); });
  return noise;
}

RegSpec ParseReg(const Section& s) {
  s.AllowOnly({"lambda", "kappa", "kappa_mode", "input_kappa"});
  RegSpec reg;
  reg.lambda = s.Number("lambda", 0.0);
  reg.kappa = s.Number("kappa", 0.0);
  const std::string mode = s.String("kappa_mode", "explicit");
  if (mode == "explicit") {
    reg.kappa_mode = KappaMode::kExplicit;
  } else if (mode == "derived") {
    reg.kappa_mode = KappaMode::kDerived;
  } else {
    throw ConfigError(s.Field("kappa_mode"), "expected explicit or derived");
  }
  reg.input_kappa = s.Number("input_kappa", 0.0);
  ValidateAs(s.Where(), [&] { reg.Validate(); });
  return reg;
}

DataConfig ParseData(const Section& s) {
  s.AllowOnly({"kind", "n", "d", "noise_level", "seed", "path"});
  DataConfig data;
  if (s.Has("path")) {
    for (const char* k : {"kind", "n", "d", "noise_level", "seed"}) {
      if (s.Has(k)) throw ConfigError(s.Field(k), "not allowed together with path");
    }
    data.path = s.String("path");
    return data;
  }
  try {
    data.kind = ParseDatasetKind(s.String("kind"));
  } catch (const ParameterError& e) {
    throw ConfigError(s.Field("kind"), e.what());
  }
  data.n = s.Unsigned("n");
  data.d = s.Unsigned("d");
  if (data.n < 1) throw ConfigError(s.Field("n"), "must be >= 1");
  if (data.d < 1) throw ConfigError(s.Field("d"), "must be >= 1");
  data.noise_level = s.Number("noise_level", 0.0);
  if (!(data.noise_level >= 0.0)) {
    throw ConfigError(s.Field("noise_level"), "must be nonnegative");
  }
  data.seed = s.Unsigned("seed");  // required: no implicit seeds
  return data;
}

TrainConfig ParseTrain(const Section& s, uint64_t seed) {
  s.AllowOnly({"eta", "eta_schedule", "batch_size", "epochs", "noise", "reg"});
  TrainConfig train;
  train.seed = seed;
  train.eta = s.Number("eta", train.eta);
  if (s.Has("eta_schedule")) {
    const json& sched = s.Array("eta_schedule");
    for (std::size_t i = 0; i < sched.size(); ++i) {
      if (!sched[i].is_number()) {
        throw ConfigError(Indexed(s.Field("eta_schedule"), i), "expected a number");
      }
      train.eta_schedule.push_back(sched[i].get<double>());
    }
  }
  train.batch_size = s.Unsigned("batch_size", train.batch_size);
  train.epochs = s.Unsigned("epochs", train.epochs);
  if (s.Has("noise")) train.noise = ParseNoise(s.Child("noise"));
  if (s.Has("reg")) train.reg = ParseReg(s.Child("reg"));
  ValidateAs(s.Where(), [&] { train.Validate(); });
  return train;
}

OracleConfig ParseOracle(const Section& s) {
  s.AllowOnly({"configs", "replicas", "z_threshold", "moment_sigmas",
               "moment_replicas", "density_replicas", "density_bins",
               "density_max_z", "trajectory_epochs", "trajectory_examples",
               "step_seeds", "gradcheck_instances", "gradcheck_tolerance",
               "backward_tolerance", "regression_tolerance"});
  OracleConfig o;
  o.configs = s.Unsigned("configs", o.configs);
  o.replicas = s.Unsigned("replicas", o.replicas);
  o.z_threshold = s.Number("z_threshold", o.z_threshold);
  if (s.Has("moment_sigmas")) {
    const json& sigmas = s.Array("moment_sigmas");
    o.moment_sigmas.clear();
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
      if (!sigmas[i].is_number() || !(sigmas[i].get<double>() > 0.0)) {
        throw ConfigError(Indexed(s.Field("moment_sigmas"), i),
                          "expected a positive number");
      }
      o.moment_sigmas.push_back(sigmas[i].get<double>());
    }
  }
  o.moment_replicas = s.Unsigned("moment_replicas", o.moment_replicas);
  o.density_replicas = s.Unsigned("density_replicas", o.density_replicas);
  o.density_bins = s.Unsigned("density_bins", o.density_bins);
  o.density_max_z = s.Number("density_max_z", o.density_max_z);
  o.trajectory_epochs = s.Unsigned("trajectory_epochs", o.trajectory_epochs);
  o.trajectory_examples = s.Unsigned("trajectory_examples", o.trajectory_examples);
  o.step_seeds = s.Unsigned("step_seeds", o.step_seeds);
  o.gradcheck_instances = s.Unsigned("gradcheck_instances", o.gradcheck_instances);
  o.gradcheck_tolerance = s.Number("gradcheck_tolerance", o.gradcheck_tolerance);
  o.backward_tolerance = s.Number("backward_tolerance", o.backward_tolerance);
  o.regression_tolerance = s.Number("regression_tolerance", o.regression_tolerance);

  if (o.replicas < 2) throw ConfigError(s.Field("replicas"), "must be >= 2");
  if (o.moment_replicas < 10000) {
    throw ConfigError(s.Field("moment_replicas"), "must be >= 10000");
  }
  if (o.density_bins < 10) throw ConfigError(s.Field("density_bins"), "must be >= 10");
  if (o.density_replicas < 1) {
    throw ConfigError(s.Field("density_replicas"), "must be >= 1");
  }
  if (o.step_seeds < 2) throw ConfigError(s.Field("step_seeds"), "must be >= 2");
  if (o.trajectory_examples < 1) {
    throw ConfigError(s.Field("trajectory_examples"), "must be >= 1");
  }
  for (const char* k : {"z_threshold", "density_max_z", "gradcheck_tolerance",
                        "backward_tolerance", "regression_tolerance"}) {
    if (!(s.Number(k, 1.0) > 0.0)) throw ConfigError(s.Field(k), "must be positive");
  }
  return o;
}

IterativeAttackOptions ParseIterative(const Section& s) {
  s.AllowOnly({"iters", "step", "optimizer", "restarts", "divergence_window"});
  IterativeAttackOptions it;
  it.iters = s.Unsigned("iters", it.iters);
  it.step = s.Number("step", it.step);
  const std::string opt = s.String("optimizer", "adam");
  if (opt == "adam") {
    it.optimizer = AttackOptimizer::kAdam;
  } else if (opt == "gradient_descent") {
    it.optimizer = AttackOptimizer::kGradientDescent;
  } else {
    throw ConfigError(s.Field("optimizer"), "expected adam or gradient_descent");
  }
  it.restarts = s.Unsigned("restarts", it.restarts);
  it.divergence_window = s.Unsigned("divergence_window", it.divergence_window);
  if (it.iters < 1) throw ConfigError(s.Field("iters"), "must be >= 1");
  if (it.restarts < 1) throw ConfigError(s.Field("restarts"), "must be >= 1");
  if (!(it.step > 0.0)) throw ConfigError(s.Field("step"), "must be positive");
  return it;
}

AttackConfig ParseAttack(const Section& s) {
  s.AllowOnly({"mechanisms", "trials", "eta", "attack_step", "iterative",
               "membership"});
  AttackConfig a;
  const json& mechs = s.Array("mechanisms");
  if (mechs.empty()) throw ConfigError(s.Field("mechanisms"), "must not be empty");
  for (std::size_t i = 0; i < mechs.size(); ++i) {
    const Section m(mechs[i], Indexed(s.Field("mechanisms"), i));
    m.AllowOnly({"label", "noise", "reg"});
    Mechanism mech;
    mech.label = m.String("label");
    if (mech.label.empty() || mech.label.find_first_of(",\"\r\n") != std::string::npos) {
      throw ConfigError(m.Field("label"),
                        "must be nonempty without ',', '\"' or newlines");
    }
    for (const Mechanism& prev : a.mechanisms) {
      if (prev.label == mech.label) throw ConfigError(m.Field("label"), "duplicate label");
    }
    if (m.Has("noise")) mech.noise = ParseNoise(m.Child("noise"));
    if (m.Has("reg")) mech.reg = ParseReg(m.Child("reg"));
    a.mechanisms.push_back(std::move(mech));
  }
  a.trials = s.Unsigned("trials", a.trials);
  if (a.trials < 1) throw ConfigError(s.Field("trials"), "must be >= 1");
  a.sweep.eta = s.Number("eta", a.sweep.eta);
  if (!(a.sweep.eta > 0.0)) throw ConfigError(s.Field("eta"), "must be positive");
  a.sweep.attack_step = s.Unsigned("attack_step", a.sweep.attack_step);
  if (s.Has("iterative")) a.sweep.iterative = ParseIterative(s.Child("iterative"));
  if (s.Has("membership")) {
    const Section m = s.Child("membership");
    m.AllowOnly({"enabled", "members", "epochs", "batch_size", "eta"});
    MembershipConfig& mc = a.membership;
    mc.enabled = m.Bool("enabled", true);
    mc.members = m.Unsigned("members", mc.members);
    mc.epochs = m.Unsigned("epochs", mc.epochs);
    mc.batch_size = m.Unsigned("batch_size", mc.batch_size);
    mc.eta = m.Number("eta", mc.eta);
    if (mc.members < 1) throw ConfigError(m.Field("members"), "must be >= 1");
    if (mc.batch_size < 1) throw ConfigError(m.Field("batch_size"), "must be >= 1");
    if (!(mc.eta > 0.0)) throw ConfigError(m.Field("eta"), "must be positive");
  }
  return a;
}

}  // namespace

ExperimentConfig ParseConfig(const std::string& text,
                             std::optional<uint64_t> seed_override,
                             const std::string& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  const Section s(root, "");
  s.AllowOnly({"experiment_id", "seed", "model", "data", "train", "oracle",
               "attack", "output", "report"});
  if (seed_override) root["seed"] = *seed_override;

  ExperimentConfig c;
  c.base_dir = base_dir;
  c.experiment_id = s.String("experiment_id");
  if (c.experiment_id.empty() ||
      c.experiment_id.find_first_of(",\"\r\n") != std::string::npos) {
    throw ConfigError("experiment_id",
                      "must be nonempty without ',', '\"' or newlines");
  }
  c.seed = s.Unsigned("seed");
  if (s.Has("model")) {
    c.model = ParseModel(s.Child("model"));
    c.has_model = true;
  }
  if (s.Has("data")) {
    c.data = ParseData(s.Child("data"));
    c.has_data = true;
  }
  if (s.Has("train")) c.train = ParseTrain(s.Child("train"), c.seed);
  c.train.seed = c.seed;
  if (s.Has("oracle")) c.oracle = ParseOracle(s.Child("oracle"));
  if (s.Has("attack")) c.attack = ParseAttack(s.Child("attack"));
  if (s.Has("output")) {
    const Section o = s.Child("output");
    o.AllowOnly({"dir", "formats"});
    c.output_dir = o.String("dir", c.output_dir);
    if (o.Has("formats")) {
      const json& formats = o.Array("formats");
      for (std::size_t i = 0; i < formats.size(); ++i) {
        if (formats[i] != "csv") {
          throw ConfigError(Indexed(o.Field("formats"), i),
                            "only \"csv\" is supported");
        }
      }
    }
  }
  if (s.Has("report")) {
    const Section r = s.Child("report");
    r.AllowOnly({"inputs"});
    const json& inputs = r.Array("inputs");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (!inputs[i].is_string()) {
        throw ConfigError(Indexed(r.Field("inputs"), i), "expected a string");
      }
      c.report_inputs.push_back(inputs[i].get<std::string>());
    }
  }
  c.canonical = root.dump();
  return c;
}

ExperimentConfig LoadConfig(const std::string& path,
                            std::optional<uint64_t> seed_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("<file>", "cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  std::string base = std::filesystem::path(path).parent_path().string();
  if (base.empty()) base = ".";
  return ParseConfig(ss.str(), seed_override, base);
}

std::string ResolvePath(const ExperimentConfig& config, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(config.base_dir) / p).lexically_normal().string();
}

uint64_t Fnv1a64(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace pdpreg
