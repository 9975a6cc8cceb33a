// core/src/model.cpp

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

#include "corrkd/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs assume a little-endian host");

namespace corrkd {

namespace {

Tensor uniform_init(Shape shape, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), /*requires_grad=*/true);
}

EncoderConfig with_blocks(EncoderConfig cfg, std::size_t n_blocks) {
  cfg.n_blocks = n_blocks;
  return cfg;
}

// Layer norm over the feature (last) dimension with learned gain and bias.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  constexpr double kEps = 1e-5;
  const std::size_t last_axis = x.ndim() - 1;
  Shape row_shape = x.shape();
  row_shape.back() = 1;
  Tensor m = reshape(reduce_mean(x, last_axis), row_shape);
  Tensor centered = sub(x, m);
  Tensor var = reshape(reduce_mean(square(centered), last_axis), row_shape);
  Tensor denom = sqrt(add_scalar(var, kEps));
  return add(mul(div(centered, denom), gain), bias);
}

}  // namespace

// ============================================================================
// EncoderStack
// ============================================================================

EncoderStack::EncoderStack(const EncoderConfig& cfg) : cfg_(cfg) {
  CORRKD_CHECK(cfg.model_dim % cfg.n_heads == 0,
               "encoder: model_dim " << cfg.model_dim
                                     << " not divisible by n_heads "
                                     << cfg.n_heads);
  CORRKD_CHECK(cfg.n_blocks >= 1 && cfg.input_dim >= 1, "encoder: bad config");
  std::mt19937_64 rng(cfg.seed);
  const double wlim = 1.0 / std::sqrt(static_cast<double>(cfg.input_dim));
  const double dlim = 1.0 / std::sqrt(static_cast<double>(cfg.model_dim));
  const double hlim = 1.0 / std::sqrt(static_cast<double>(cfg.mlp_dim));

  auto push = [&](const std::string& name, Tensor t) {
    params_.push_back({name, std::move(t)});
  };
  push("frontend.w", uniform_init({cfg.input_dim, cfg.model_dim}, wlim, rng));
  push("frontend.b",
       Tensor::zeros({cfg.model_dim}, /*requires_grad=*/true));
  for (std::size_t b = 0; b < cfg.n_blocks; ++b) {
    const std::string p = "block" + std::to_string(b) + ".";
    push(p + "ln1.g", Tensor::full({cfg.model_dim}, 1.0, true));
    push(p + "ln1.b", Tensor::zeros({cfg.model_dim}, true));
    push(p + "wq", uniform_init({cfg.model_dim, cfg.model_dim}, dlim, rng));
    push(p + "bq", Tensor::zeros({cfg.model_dim}, true));
    push(p + "wk", uniform_init({cfg.model_dim, cfg.model_dim}, dlim, rng));
    push(p + "bk", Tensor::zeros({cfg.model_dim}, true));
    push(p + "wv", uniform_init({cfg.model_dim, cfg.model_dim}, dlim, rng));
    push(p + "bv", Tensor::zeros({cfg.model_dim}, true));
    push(p + "wo", uniform_init({cfg.model_dim, cfg.model_dim}, dlim, rng));
    push(p + "bo", Tensor::zeros({cfg.model_dim}, true));
    push(p + "ln2.g", Tensor::full({cfg.model_dim}, 1.0, true));
    push(p + "ln2.b", Tensor::zeros({cfg.model_dim}, true));
    push(p + "w1", uniform_init({cfg.model_dim, cfg.mlp_dim}, dlim, rng));
    push(p + "b1", Tensor::zeros({cfg.mlp_dim}, true));
    push(p + "w2", uniform_init({cfg.mlp_dim, cfg.model_dim}, hlim, rng));
    push(p + "b2", Tensor::zeros({cfg.model_dim}, true));
  }
}

std::vector<Tensor> EncoderStack::bind(Tape* tape) const {
  std::vector<Tensor> bound;
  bound.reserve(params_.size());
  for (const Parameter& p : params_) {
    bound.push_back(tape ? tape->watch(p.value) : p.value);
  }
  return bound;
}

std::vector<Tensor> EncoderStack::forward_hidden(
    const std::vector<Tensor>& bound, const Tensor& features) const {
  CORRKD_CHECK(bound.size() == params_.size(),
               "encoder forward: binding size mismatch");
  CORRKD_CHECK(features.ndim() == 2 && features.shape()[1] == cfg_.input_dim,
               "encoder forward: features must be [T," << cfg_.input_dim
                                                       << "], got "
                                                       << shape_to_string(
                                                              features.shape()));
  constexpr std::size_t kPerBlock = 16;
  std::size_t i = 0;
  auto next = [&]() -> const Tensor& { return bound[i++]; };

  const Tensor& fw = next();
  const Tensor& fb = next();
  Tensor x = add(matmul(features, fw), fb);

  const std::size_t n_heads = cfg_.n_heads;
  const std::size_t head_dim = cfg_.model_dim / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  std::vector<Tensor> hidden;
  hidden.reserve(cfg_.n_blocks);
  for (std::size_t blk = 0; blk < cfg_.n_blocks; ++blk) {
    const Tensor& ln1g = next();
    const Tensor& ln1b = next();
    const Tensor& wq = next();
    const Tensor& bq = next();
    const Tensor& wk = next();
    const Tensor& bk = next();
    const Tensor& wv = next();
    const Tensor& bv = next();
    const Tensor& wo = next();
    const Tensor& bo = next();
    const Tensor& ln2g = next();
    const Tensor& ln2b = next();
    const Tensor& w1 = next();
    const Tensor& b1 = next();
    const Tensor& w2 = next();
    const Tensor& b2 = next();

    Tensor n1 = layer_norm(x, ln1g, ln1b);
    Tensor q = add(matmul(n1, wq), bq);
    Tensor k = add(matmul(n1, wk), bk);
    Tensor v = add(matmul(n1, wv), bv);
    std::vector<Tensor> head_outs;
    head_outs.reserve(n_heads);
    for (std::size_t h = 0; h < n_heads; ++h) {
      Tensor qh = slice_last(q, h * head_dim, head_dim);
      Tensor kh = slice_last(k, h * head_dim, head_dim);
      Tensor vh = slice_last(v, h * head_dim, head_dim);
      Tensor scores = mul_scalar(matmul(qh, transpose(kh)), scale);
      Tensor attn = softmax_last(scores);
      head_outs.push_back(matmul(attn, vh));
    }
    Tensor merged = concat_last(head_outs);
    Tensor attn_out = add(matmul(merged, wo), bo);
    Tensor a = add(x, attn_out);

    Tensor n2 = layer_norm(a, ln2g, ln2b);
    Tensor mlp = add(matmul(gelu(add(matmul(n2, w1), b1)), w2), b2);
    x = add(a, mlp);
    hidden.push_back(x);
  }
  CORRKD_CHECK(i == 2 + kPerBlock * cfg_.n_blocks,
               "encoder forward: parameter walk out of sync");
  return hidden;
}

std::vector<Tensor> EncoderStack::forward_hidden(const Tensor& features) const {
  return forward_hidden(bind(nullptr), features);
}

// ============================================================================
// TeacherModel
// ============================================================================

TeacherModel::TeacherModel(EncoderConfig cfg)
    : stack_(with_blocks(cfg, 12)) {
  // frozen: parameters never receive gradients
  for (Parameter& p : stack_.parameters()) p.value.set_requires_grad(false);
}

std::array<Tensor, 3> TeacherModel::forward(const Tensor& features) const {
  std::vector<Tensor> hidden = stack_.forward_hidden(features);
  std::array<Tensor, 3> taps;
  for (std::size_t i = 0; i < kTapBlocks.size(); ++i)
    taps[i] = hidden[kTapBlocks[i] - 1];
  return taps;
}

void TeacherModel::save(const std::filesystem::path& stem) const {
  std::map<std::string, std::string> meta;
  const EncoderConfig& c = config();
  meta["kind"] = "teacher";
  meta["input_dim"] = std::to_string(c.input_dim);
  meta["model_dim"] = std::to_string(c.model_dim);
  meta["n_blocks"] = std::to_string(c.n_blocks);
  meta["n_heads"] = std::to_string(c.n_heads);
  meta["mlp_dim"] = std::to_string(c.mlp_dim);
  meta["seed"] = std::to_string(c.seed);
  save_checkpoint(stem, parameters(), meta);
}

std::vector<std::uint8_t> TeacherModel::parameter_bytes() const {
  std::vector<std::uint8_t> bytes;
  for (const Parameter& p : parameters()) {
    const auto span = p.value.data();
    const auto* raw = reinterpret_cast<const std::uint8_t*>(span.data());
    bytes.insert(bytes.end(), raw, raw + span.size() * sizeof(double));
  }
  return bytes;
}

// ============================================================================
// StudentModel
// ============================================================================

StudentModel::StudentModel(EncoderConfig trunk_cfg, std::uint64_t head_seed,
                           HeadInit head_init)
    : trunk_(with_blocks(trunk_cfg, 2)) {
  params_ = trunk_.parameters();
  n_trunk_params_ = params_.size();

  const std::size_t d = trunk_.config().model_dim;
  std::mt19937_64 rng(head_seed);
  const double lim = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t tap : TeacherModel::kTapBlocks) {
    const std::string p = "head" + std::to_string(tap) + ".";
    Tensor w;
    if (head_init == HeadInit::identity) {
      w = Tensor::zeros({d, d}, true);
      for (std::size_t i = 0; i < d; ++i) w.mutable_data()[i * d + i] = 1.0;
    } else {
      w = uniform_init({d, d}, lim, rng);
    }
    params_.push_back({p + "w", std::move(w)});
    params_.push_back({p + "b", Tensor::zeros({d}, true)});
  }
}

StudentModel::Bound StudentModel::bind(Tape* tape) const {
  Bound b;
  b.model = this;
  b.tape = tape;
  for (std::size_t i = 0; i < n_trunk_params_; ++i) {
    b.trunk.push_back(tape ? tape->watch(params_[i].value)
                           : params_[i].value);
  }
  for (std::size_t i = n_trunk_params_; i < params_.size(); ++i) {
    b.heads.push_back(tape ? tape->watch(params_[i].value)
                           : params_[i].value);
  }
  return b;
}

StudentModel::Forward StudentModel::forward(const Bound& bound,
                                            const Tensor& features) const {
  CORRKD_CHECK(bound.model == this, "student forward: foreign binding");
  std::vector<Tensor> hidden = trunk_.forward_hidden(bound.trunk, features);
  Forward out;
  out.z = hidden.back();
  std::vector<Tensor> preds;
  preds.reserve(kNumHeads);
  for (std::size_t h = 0; h < kNumHeads; ++h) {
    const Tensor& w = bound.heads[2 * h];
    const Tensor& b = bound.heads[2 * h + 1];
    preds.push_back(add(matmul(out.z, w), b));
  }
  out.predictions = stack_first(preds);
  return out;
}

StudentModel::Forward StudentModel::forward(const Tensor& features) const {
  return forward(bind(nullptr), features);
}

void StudentModel::save(const std::filesystem::path& stem) const {
  std::map<std::string, std::string> meta;
  const EncoderConfig& c = config();
  meta["kind"] = "student";
  meta["input_dim"] = std::to_string(c.input_dim);
  meta["model_dim"] = std::to_string(c.model_dim);
  meta["n_blocks"] = std::to_string(c.n_blocks);
  meta["n_heads"] = std::to_string(c.n_heads);
  meta["mlp_dim"] = std::to_string(c.mlp_dim);
  meta["seed"] = std::to_string(c.seed);
  save_checkpoint(stem, params_, meta);
}

StudentModel StudentModel::load(const std::filesystem::path& stem) {
  LoadedCheckpoint ck = load_checkpoint(stem);
  CORRKD_CHECK(ck.meta.count("kind") && ck.meta.at("kind") == "student",
               "student load: checkpoint at " << stem.string()
                                              << " is not a student model");
  EncoderConfig cfg;
  cfg.input_dim = std::stoul(ck.meta.at("input_dim"));
  cfg.model_dim = std::stoul(ck.meta.at("model_dim"));
  cfg.n_blocks = std::stoul(ck.meta.at("n_blocks"));
  cfg.n_heads = std::stoul(ck.meta.at("n_heads"));
  cfg.mlp_dim = std::stoul(ck.meta.at("mlp_dim"));
  cfg.seed = std::stoull(ck.meta.at("seed"));

  StudentModel model(cfg, /*head_seed=*/0);
  CORRKD_CHECK(ck.params.size() == model.params_.size(),
               "student load: expected " << model.params_.size()
                                         << " tensors, manifest has "
                                         << ck.params.size());
  for (std::size_t i = 0; i < ck.params.size(); ++i) {
    Parameter& dst = model.params_[i];
    Parameter& src = ck.params[i];
    CORRKD_CHECK(src.name == dst.name && src.value.shape() == dst.value.shape(),
                 "student load: tensor " << i << " mismatch: manifest has '"
                                         << src.name << "' "
                                         << shape_to_string(src.value.shape())
                                         << ", model expects '" << dst.name
                                         << "' "
                                         << shape_to_string(dst.value.shape()));
    std::copy(src.value.data().begin(), src.value.data().end(),
              dst.value.mutable_data().begin());
  }
  return model;
}

StudentModel init_student_from_teacher(const TeacherModel& teacher,
                                       std::uint64_t head_seed,
                                       HeadInit head_init) {
  EncoderConfig cfg = teacher.config();
  cfg.n_blocks = 2;
  StudentModel student(cfg, head_seed, head_init);
  // frontend + first two blocks copy the teacher bit-exactly
  const auto& tp = teacher.parameters();
  auto& sp = student.parameters();
  for (std::size_t i = 0; i < student.parameters().size(); ++i) {
    if (sp[i].name.rfind("head", 0) == 0) continue;
    CORRKD_CHECK(i < tp.size() && tp[i].name == sp[i].name &&
                     tp[i].value.shape() == sp[i].value.shape(),
                 "init_student_from_teacher: layout mismatch at " << sp[i].name);
    std::copy(tp[i].value.data().begin(), tp[i].value.data().end(),
              sp[i].value.mutable_data().begin());
  }
  return student;
}

// ============================================================================
// checkpoints
// ============================================================================

void save_checkpoint(const std::filesystem::path& stem,
                     std::span<const Parameter> params,
                     const std::map<std::string, std::string>& meta) {
  std::filesystem::path manifest = stem;
  manifest += ".manifest";
  std::filesystem::path blob = stem;
  blob += ".blob";

  std::ofstream mf(manifest, std::ios::trunc);
  CORRKD_CHECK(mf.good(), "save_checkpoint: cannot open " << manifest.string());
  std::ofstream bf(blob, std::ios::binary | std::ios::trunc);
  CORRKD_CHECK(bf.good(), "save_checkpoint: cannot open " << blob.string());

  mf << "corrkd-checkpoint 1\n";
  for (const auto& [k, v] : meta) mf << "meta " << k << " " << v << "\n";
  std::size_t offset = 0;
  for (const Parameter& p : params) {
    mf << "tensor " << p.name << " f64";
    for (std::size_t d : p.value.shape()) mf << " " << d;
    mf << " @ " << offset << " " << p.value.numel() << "\n";
    const auto span = p.value.data();
    bf.write(reinterpret_cast<const char*>(span.data()),
             static_cast<std::streamsize>(span.size() * sizeof(double)));
    offset += span.size() * sizeof(double);
  }
  CORRKD_CHECK(mf.good() && bf.good(),
               "save_checkpoint: write failed for " << stem.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& stem) {
  std::filesystem::path manifest = stem;
  manifest += ".manifest";
  std::filesystem::path blob = stem;
  blob += ".blob";

  std::ifstream mf(manifest);
  CORRKD_CHECK(mf.good(), "load_checkpoint: cannot open " << manifest.string());
  std::ifstream bf(blob, std::ios::binary);
  CORRKD_CHECK(bf.good(), "load_checkpoint: cannot open " << blob.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(bf)),
                          std::istreambuf_iterator<char>());

  LoadedCheckpoint out;
  std::string line;
  std::getline(mf, line);
  CORRKD_CHECK(line == "corrkd-checkpoint 1",
               "load_checkpoint: bad manifest header '" << line << "'");
  while (std::getline(mf, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string tag;
    is >> tag;
    if (tag == "meta") {
      std::string k, v;
      is >> k >> v;
      out.meta[k] = v;
    } else if (tag == "tensor") {
      std::string name, dtype, tok;
      is >> name >> dtype;
      CORRKD_CHECK(dtype == "f64", "load_checkpoint: unsupported dtype "
                                       << dtype << " for " << name);
      Shape shape;
      std::size_t offset = 0, count = 0;
      while (is >> tok) {
        if (tok == "@") {
          is >> offset >> count;
          break;
        }
        shape.push_back(std::stoul(tok));
      }
      CORRKD_CHECK(shape_numel(shape) == count,
                   "load_checkpoint: count mismatch for " << name);
      CORRKD_CHECK(offset + count * sizeof(double) <= bytes.size(),
                   "load_checkpoint: blob too small for " << name);
      std::vector<double> data(count);
      std::memcpy(data.data(), bytes.data() + offset, count * sizeof(double));
      out.params.push_back({name, Tensor::from(shape, std::move(data))});
    } else {
      CORRKD_CHECK(false, "load_checkpoint: unknown manifest line '" << line
                                                                     << "'");
    }
  }
  return out;
}

}  // namespace corrkd
