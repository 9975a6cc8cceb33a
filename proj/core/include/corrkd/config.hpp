// core/include/corrkd/config.hpp

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

#ifndef CORRKD_CONFIG_HPP_
#define CORRKD_CONFIG_HPP_

#include <filesystem>
#include <map>
#include <string>

#include "corrkd/model.hpp"
#include "corrkd/probe.hpp"
#include "corrkd/trainer.hpp"

namespace corrkd {

/// Everything a run needs, assembled from a flat key=value file plus
/// command-line overrides. Unknown keys are rejected; missing keys take the
/// documented defaults; parsing is order-independent; '#' starts a comment.
struct RunConfig {
  TrainingConfig training{};
  EncoderConfig encoder{};       // teacher dims; student derives from it
  std::uint64_t model_seed = 7;  // teacher init seed
  std::uint64_t head_seed = 11;
  ForestConfig forest{};
  std::size_t corpus_size = 256;
  std::size_t dev_size = 32;
  std::size_t probe_corpus_size = 96;
  double utterance_seconds = 1.0;
  std::uint64_t corpus_seed = 1;
};

/// One "key value-description default" row per known key, for --help and the
/// README.
std::string run_config_key_table();

/// Parse `key=value` lines. Throws std::invalid_argument naming the first
/// unknown key or malformed line.
RunConfig parse_run_config(const std::string& text);
RunConfig parse_run_config_file(const std::filesystem::path& path);

/// Apply one `key=value` override on top of an existing config.
void apply_config_override(RunConfig& cfg, const std::string& key,
                           const std::string& value);

/// Serialize back to the flat format (stable key order, all keys).
std::string serialize_run_config(const RunConfig& cfg);

}  // namespace corrkd

#endif  // CORRKD_CONFIG_HPP_
