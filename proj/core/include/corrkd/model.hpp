// core/include/corrkd/model.hpp

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

#ifndef CORRKD_MODEL_HPP_
#define CORRKD_MODEL_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "corrkd/tensor.hpp"

namespace corrkd {

struct EncoderConfig {
  std::size_t input_dim = 40;   // mel bands
  std::size_t model_dim = 32;   // D, divisible by n_heads
  std::size_t n_blocks = 2;
  std::size_t n_heads = 4;
  std::size_t mlp_dim = 64;
  std::uint64_t seed = 0;
};

/// Named parameter; `value` owns the storage the optimizer updates in place.
struct Parameter {
  std::string name;
  Tensor value;
};

/// Pre-norm transformer encoder without positional encoding: every block is
/// x + Attn(LN(x)), then + MLP(LN(.)). Hidden states are the raw block
/// outputs. Holds the frontend projection input_dim -> model_dim.
class EncoderStack {
 public:
  explicit EncoderStack(const EncoderConfig& cfg);

  const EncoderConfig& config() const { return cfg_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }

  /// Bind parameters to a tape (or pass through untracked when tape==null).
  std::vector<Tensor> bind(Tape* tape) const;

  /// Forward through all blocks; returns one [T, D] hidden state per block.
  /// `bound` must come from bind() on the same stack.
  std::vector<Tensor> forward_hidden(const std::vector<Tensor>& bound,
                                     const Tensor& features) const;

  /// Eager forward without any tape bookkeeping.
  std::vector<Tensor> forward_hidden(const Tensor& features) const;

 private:
  EncoderConfig cfg_;
  std::vector<Parameter> params_;
};

/// Frozen 12-block encoder; exposes hidden states at blocks 4, 8 and 12.
class TeacherModel {
 public:
  static constexpr std::array<std::size_t, 3> kTapBlocks{4, 8, 12};

  explicit TeacherModel(EncoderConfig cfg);

  /// Deterministic eager forward; taps as [T, D] tensors. Never recorded on
  /// a tape: the teacher is not trainable.
  std::array<Tensor, 3> forward(const Tensor& features) const;

  const EncoderStack& stack() const { return stack_; }
  const std::vector<Parameter>& parameters() const {
    return stack_.parameters();
  }
  const EncoderConfig& config() const { return stack_.config(); }

  void save(const std::filesystem::path& stem) const;
  /// Full parameter blob as raw bytes; used for frozen-teacher checks.
  std::vector<std::uint8_t> parameter_bytes() const;

 private:
  EncoderStack stack_;
};

enum class HeadInit { scaled_uniform, identity };

/// Two-block trunk plus the three prediction heads (one per teacher tap).
class StudentModel {
 public:
  StudentModel(EncoderConfig trunk_cfg, std::uint64_t head_seed,
               HeadInit head_init = HeadInit::scaled_uniform);

  struct Bound {
    const StudentModel* model = nullptr;
    Tape* tape = nullptr;
    std::vector<Tensor> trunk;
    std::vector<Tensor> heads;
  };
  struct Forward {
    Tensor z;            // [T, D] last trunk hidden state
    Tensor predictions;  // [P, T, D], heads applied to z
  };

  Bound bind(Tape* tape) const;
  Forward forward(const Bound& bound, const Tensor& features) const;
  /// Eager convenience forward.
  Forward forward(const Tensor& features) const;

  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  const EncoderConfig& config() const { return trunk_.config(); }
  static constexpr std::size_t kNumHeads = 3;

  void save(const std::filesystem::path& stem) const;
  static StudentModel load(const std::filesystem::path& stem);

 private:
  EncoderStack trunk_;
  std::vector<Parameter> params_;  // trunk params followed by head params
  std::size_t n_trunk_params_ = 0;
};

/// Student whose frontend and both trunk blocks copy the teacher's values
/// bit-exactly; heads are freshly initialized from head_seed.
StudentModel init_student_from_teacher(const TeacherModel& teacher,
                                       std::uint64_t head_seed,
                                       HeadInit head_init = HeadInit::scaled_uniform);

// ---- checkpoint format ----
// <stem>.manifest : text; meta lines then one line per tensor with name,
//                   dtype, shape and byte offset into the blob.
// <stem>.blob     : raw little-endian float64 arrays back to back.
void save_checkpoint(const std::filesystem::path& stem,
                     std::span<const Parameter> params,
                     const std::map<std::string, std::string>& meta);

struct LoadedCheckpoint {
  std::vector<Parameter> params;
  std::map<std::string, std::string> meta;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& stem);

}  // namespace corrkd

#endif  // CORRKD_MODEL_HPP_
