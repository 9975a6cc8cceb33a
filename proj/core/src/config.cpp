// core/src/config.cpp

// Copyright 2026  corrkd authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "corrkd/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace corrkd {

namespace {

struct KeyDef {
  const char* key;
  const char* doc;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

long to_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    CORRKD_CHECK(pos == v.size(), "");
    return x;
  } catch (...) {
    throw std::invalid_argument("config: key '" + key +
                                "' expects an integer, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    CORRKD_CHECK(pos == v.size(), "");
    return static_cast<std::uint64_t>(x);
  } catch (...) {
    throw std::invalid_argument("config: key '" + key +
                                "' expects an unsigned integer, got '" + v +
                                "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    CORRKD_CHECK(pos == v.size(), "");
    return x;
  } catch (...) {
    throw std::invalid_argument("config: key '" + key +
                                "' expects a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: key '" + key +
                              "' expects a boolean, got '" + v + "'");
}

std::string fmt_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

const std::vector<KeyDef>& key_defs() {
  static const std::vector<KeyDef> defs = {
      {"setup", "student_only | both (default both)",
       [](RunConfig& c, const std::string& v) {
         if (v == "student_only") c.training.setup = Setup::student_only;
         else if (v == "both") c.training.setup = Setup::both;
         else throw std::invalid_argument("config: setup must be student_only or both, got '" + v + "'");
       },
       [](const RunConfig& c) { return std::string(setup_name(c.training.setup)); }},
      {"loss", "kd | cl | bt_reference (default cl)",
       [](RunConfig& c, const std::string& v) {
         if (v == "kd") c.training.loss = LossKind::kd;
         else if (v == "cl") c.training.loss = LossKind::cl;
         else if (v == "bt_reference") c.training.loss = LossKind::bt_reference;
         else throw std::invalid_argument("config: loss must be kd, cl or bt_reference, got '" + v + "'");
       },
       [](const RunConfig& c) { return std::string(loss_kind_name(c.training.loss)); }},
      {"teacher_mode", "variant | oracle_invariant (default variant)",
       [](RunConfig& c, const std::string& v) {
         if (v == "variant") c.training.teacher_mode = TeacherMode::variant;
         else if (v == "oracle_invariant") c.training.teacher_mode = TeacherMode::oracle_invariant;
         else throw std::invalid_argument("config: teacher_mode must be variant or oracle_invariant, got '" + v + "'");
       },
       [](const RunConfig& c) { return std::string(teacher_mode_name(c.training.teacher_mode)); }},
      {"steps", "training steps (default 2000)",
       [](RunConfig& c, const std::string& v) { c.training.steps = static_cast<int>(to_long("steps", v)); },
       [](const RunConfig& c) { return std::to_string(c.training.steps); }},
      {"batch_size", "utterances per step (default 8)",
       [](RunConfig& c, const std::string& v) { c.training.batch_size = static_cast<int>(to_long("batch_size", v)); },
       [](const RunConfig& c) { return std::to_string(c.training.batch_size); }},
      {"learning_rate", "Adam learning rate (default 1e-3)",
       [](RunConfig& c, const std::string& v) { c.training.learning_rate = to_double("learning_rate", v); },
       [](const RunConfig& c) { return fmt_double(c.training.learning_rate); }},
      {"seed", "training RNG seed (default 0)",
       [](RunConfig& c, const std::string& v) { c.training.seed = to_u64("seed", v); },
       [](const RunConfig& c) { return std::to_string(c.training.seed); }},
      {"dev_eval_every", "dev/checkpoint cadence in steps (default 200)",
       [](RunConfig& c, const std::string& v) { c.training.dev_eval_every = static_cast<int>(to_long("dev_eval_every", v)); },
       [](const RunConfig& c) { return std::to_string(c.training.dev_eval_every); }},
      {"threads", "worker threads, 0 = hardware (default 0)",
       [](RunConfig& c, const std::string& v) { c.training.threads = static_cast<int>(to_long("threads", v)); },
       [](const RunConfig& c) { return std::to_string(c.training.threads); }},
      {"gamma", "cosine term weight (default 1.0)",
       [](RunConfig& c, const std::string& v) { c.training.weights.gamma = to_double("gamma", v); },
       [](const RunConfig& c) { return fmt_double(c.training.weights.gamma); }},
      {"lambda_cc", "cross-correlation off-diagonal weight (default 5e-5)",
       [](RunConfig& c, const std::string& v) { c.training.weights.lambda_cc = to_double("lambda_cc", v); },
       [](const RunConfig& c) { return fmt_double(c.training.weights.lambda_cc); }},
      {"lambda_sc", "self-correlation off-diagonal weight (default 5e-6)",
       [](RunConfig& c, const std::string& v) { c.training.weights.lambda_sc = to_double("lambda_sc", v); },
       [](const RunConfig& c) { return fmt_double(c.training.weights.lambda_sc); }},
      {"heuristic", "SNR-driven lambda weighting (default false)",
       [](RunConfig& c, const std::string& v) { c.training.weights.heuristic = to_bool("heuristic", v); },
       [](const RunConfig& c) { return std::string(c.training.weights.heuristic ? "true" : "false"); }},
      {"policy_nonadditive_prob", "probability of one non-additive spec per view (default 0.5)",
       [](RunConfig& c, const std::string& v) { c.training.policy.p_nonadditive = to_double("policy_nonadditive_prob", v); },
       [](const RunConfig& c) { return fmt_double(c.training.policy.p_nonadditive); }},
      {"policy_w_gaussian", "additive sampling weight: gaussian (default 1)",
       [](RunConfig& c, const std::string& v) { c.training.policy.additive_weights[0] = to_double("policy_w_gaussian", v); },
       [](const RunConfig& c) { return fmt_double(c.training.policy.additive_weights[0]); }},
      {"policy_w_white", "additive sampling weight: white (default 1)",
       [](RunConfig& c, const std::string& v) { c.training.policy.additive_weights[1] = to_double("policy_w_white", v); },
       [](const RunConfig& c) { return fmt_double(c.training.policy.additive_weights[1]); }},
      {"policy_w_pink", "additive sampling weight: pink (default 1)",
       [](RunConfig& c, const std::string& v) { c.training.policy.additive_weights[2] = to_double("policy_w_pink", v); },
       [](const RunConfig& c) { return fmt_double(c.training.policy.additive_weights[2]); }},
      {"policy_w_babble", "additive sampling weight: babble (default 1)",
       [](RunConfig& c, const std::string& v) { c.training.policy.additive_weights[3] = to_double("policy_w_babble", v); },
       [](const RunConfig& c) { return fmt_double(c.training.policy.additive_weights[3]); }},
      {"policy_w_reverb", "non-additive sampling weight: reverb (default 1)",
       [](RunConfig& c, const std::string& v) { c.training.policy.nonadditive_weights[0] = to_double("policy_w_reverb", v); },
       [](const RunConfig& c) { return fmt_double(c.training.policy.nonadditive_weights[0]); }},
      {"policy_w_pitch", "non-additive sampling weight: pitch shift (default 1)",
       [](RunConfig& c, const std::string& v) { c.training.policy.nonadditive_weights[1] = to_double("policy_w_pitch", v); },
       [](const RunConfig& c) { return fmt_double(c.training.policy.nonadditive_weights[1]); }},
      {"policy_w_band", "non-additive sampling weight: band rejection (default 1)",
       [](RunConfig& c, const std::string& v) { c.training.policy.nonadditive_weights[2] = to_double("policy_w_band", v); },
       [](const RunConfig& c) { return fmt_double(c.training.policy.nonadditive_weights[2]); }},
      {"sample_rate", "frontend sample rate in Hz (default 16000)",
       [](RunConfig& c, const std::string& v) { c.training.frontend.sample_rate_hz = static_cast<int>(to_long("sample_rate", v)); },
       [](const RunConfig& c) { return std::to_string(c.training.frontend.sample_rate_hz); }},
      {"frame_ms", "frontend frame length in ms (default 25)",
       [](RunConfig& c, const std::string& v) { c.training.frontend.frame_ms = to_double("frame_ms", v); },
       [](const RunConfig& c) { return fmt_double(c.training.frontend.frame_ms); }},
      {"hop_ms", "frontend hop in ms (default 10)",
       [](RunConfig& c, const std::string& v) { c.training.frontend.hop_ms = to_double("hop_ms", v); },
       [](const RunConfig& c) { return fmt_double(c.training.frontend.hop_ms); }},
      {"n_mels", "mel bands (default 40); also the encoder input dim",
       [](RunConfig& c, const std::string& v) {
         c.training.frontend.n_mels = static_cast<std::size_t>(to_long("n_mels", v));
         c.encoder.input_dim = c.training.frontend.n_mels;
       },
       [](const RunConfig& c) { return std::to_string(c.training.frontend.n_mels); }},
      {"model_dim", "encoder feature dim D (default 32)",
       [](RunConfig& c, const std::string& v) { c.encoder.model_dim = static_cast<std::size_t>(to_long("model_dim", v)); },
       [](const RunConfig& c) { return std::to_string(c.encoder.model_dim); }},
      {"n_heads", "attention heads (default 4)",
       [](RunConfig& c, const std::string& v) { c.encoder.n_heads = static_cast<std::size_t>(to_long("n_heads", v)); },
       [](const RunConfig& c) { return std::to_string(c.encoder.n_heads); }},
      {"mlp_dim", "encoder MLP hidden dim (default 64)",
       [](RunConfig& c, const std::string& v) { c.encoder.mlp_dim = static_cast<std::size_t>(to_long("mlp_dim", v)); },
       [](const RunConfig& c) { return std::to_string(c.encoder.mlp_dim); }},
      {"model_seed", "teacher init seed (default 7)",
       [](RunConfig& c, const std::string& v) { c.model_seed = to_u64("model_seed", v); },
       [](const RunConfig& c) { return std::to_string(c.model_seed); }},
      {"head_seed", "student head init seed (default 11)",
       [](RunConfig& c, const std::string& v) { c.head_seed = to_u64("head_seed", v); },
       [](const RunConfig& c) { return std::to_string(c.head_seed); }},
      {"corpus_size", "synthetic training utterances (default 256)",
       [](RunConfig& c, const std::string& v) { c.corpus_size = static_cast<std::size_t>(to_long("corpus_size", v)); },
       [](const RunConfig& c) { return std::to_string(c.corpus_size); }},
      {"dev_size", "synthetic dev utterances (default 32)",
       [](RunConfig& c, const std::string& v) { c.dev_size = static_cast<std::size_t>(to_long("dev_size", v)); },
       [](const RunConfig& c) { return std::to_string(c.dev_size); }},
      {"probe_corpus_size", "synthetic probe utterances (default 96)",
       [](RunConfig& c, const std::string& v) { c.probe_corpus_size = static_cast<std::size_t>(to_long("probe_corpus_size", v)); },
       [](const RunConfig& c) { return std::to_string(c.probe_corpus_size); }},
      {"utterance_seconds", "synthetic utterance length (default 1.0)",
       [](RunConfig& c, const std::string& v) { c.utterance_seconds = to_double("utterance_seconds", v); },
       [](const RunConfig& c) { return fmt_double(c.utterance_seconds); }},
      {"corpus_seed", "synthetic corpus seed (default 1)",
       [](RunConfig& c, const std::string& v) { c.corpus_seed = to_u64("corpus_seed", v); },
       [](const RunConfig& c) { return std::to_string(c.corpus_seed); }},
      {"probe_trees", "random forest size (default 100)",
       [](RunConfig& c, const std::string& v) { c.forest.n_trees = static_cast<int>(to_long("probe_trees", v)); },
       [](const RunConfig& c) { return std::to_string(c.forest.n_trees); }},
      {"probe_depth", "random forest max depth (default 8)",
       [](RunConfig& c, const std::string& v) { c.forest.max_depth = static_cast<int>(to_long("probe_depth", v)); },
       [](const RunConfig& c) { return std::to_string(c.forest.max_depth); }},
      {"probe_max_features", "feature candidates per split, 0 = ceil(sqrt(D)) (default 0)",
       [](RunConfig& c, const std::string& v) { c.forest.max_features = static_cast<int>(to_long("probe_max_features", v)); },
       [](const RunConfig& c) { return std::to_string(c.forest.max_features); }},
      {"probe_seed", "forest / probe split seed (default 0)",
       [](RunConfig& c, const std::string& v) { c.forest.seed = to_u64("probe_seed", v); },
       [](const RunConfig& c) { return std::to_string(c.forest.seed); }},
  };
  return defs;
}

const KeyDef* find_key(const std::string& key) {
  for (const KeyDef& d : key_defs()) {
    if (key == d.key) return &d;
  }
  return nullptr;
}

}  // namespace

std::string run_config_key_table() {
  std::ostringstream os;
  for (const KeyDef& d : key_defs()) os << d.key << "\t" << d.doc << "\n";
  return os.str();
}

void apply_config_override(RunConfig& cfg, const std::string& key,
                           const std::string& value) {
  const KeyDef* def = find_key(key);
  if (!def)
    throw std::invalid_argument("config: unknown key '" + key + "'");
  def->set(cfg, value);
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    // trim
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not key=value: '" + line + "'");
    auto strip = [](std::string s) {
      const auto sb = s.find_first_not_of(" \t");
      if (sb == std::string::npos) return std::string();
      const auto se = s.find_last_not_of(" \t");
      return s.substr(sb, se - sb + 1);
    };
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    apply_config_override(cfg, key, value);
  }
  return cfg;
}

RunConfig parse_run_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  CORRKD_CHECK(in.good(), "config: cannot open " << path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string serialize_run_config(const RunConfig& cfg) {
  std::ostringstream os;
  for (const KeyDef& d : key_defs()) os << d.key << "=" << d.get(cfg) << "\n";
  return os.str();
}

}  // namespace corrkd
