// core/src/probe.cpp

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

#include "corrkd/probe.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "corrkd/augment.hpp"

namespace corrkd {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (0x9e3779b97f4a7c15ULL * (b + 1));
  return splitmix64(s);
}

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn) {
  int tc = threads;
  if (tc <= 0) tc = static_cast<int>(std::thread::hardware_concurrency());
  tc = std::max(1, std::min<int>(tc, static_cast<int>(n)));
  if (tc == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (int t = 0; t < tc; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

DistortionPlan class_plan(ProbeClass c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> snr(10.0, 20.0);
  std::uniform_real_distribution<double> rt(0.2, 0.6);
  std::vector<DistortionSpec> specs;
  switch (c) {
    case ProbeClass::babble:
      specs.push_back(DistortionSpec::make_noise(NoiseColor::babble, snr(rng)));
      break;
    case ProbeClass::gaussian:
      specs.push_back(DistortionSpec::make_gaussian(snr(rng)));
      break;
    case ProbeClass::pink:
      specs.push_back(DistortionSpec::make_noise(NoiseColor::pink, snr(rng)));
      break;
    case ProbeClass::reverb:
      specs.push_back(DistortionSpec::make_reverb(rt(rng)));
      break;
  }
  std::uint64_t inner = seed;
  return make_plan(std::move(specs), splitmix64(inner));
}

}  // namespace

const char* probe_class_name(ProbeClass c) {
  switch (c) {
    case ProbeClass::babble: return "babble";
    case ProbeClass::gaussian: return "gaussian";
    case ProbeClass::pink: return "pink";
    case ProbeClass::reverb: return "reverb";
  }
  return "?";
}

std::string ProbeReport::serialize() const {
  std::ostringstream os;
  os.precision(17);
  os << "overall_acc=" << overall_acc;
  for (int c = 0; c < kNumProbeClasses; ++c)
    os << " acc_" << probe_class_name(static_cast<ProbeClass>(c)) << "="
       << acc_per_class[static_cast<std::size_t>(c)];
  os << " n_trees=" << n_trees << " seed=" << seed;
  return os.str();
}

// ============================================================================
// dataset
// ============================================================================

ProbeDataset build_probe_dataset(const StudentModel& student,
                                 std::span<const AudioBuffer> corpus,
                                 const ProbeBuildConfig& cfg) {
  CORRKD_CHECK(corpus.size() >= 2,
               "build_probe_dataset: need >= 2 utterances per class, got "
                   << corpus.size());
  const std::size_t n_utt = corpus.size();
  const std::size_t d = student.config().model_dim;

  // one embedding per (utterance, class): distort, encode, mean-pool z
  std::vector<std::vector<double>> vectors(n_utt * kNumProbeClasses);
  parallel_for(n_utt * kNumProbeClasses, cfg.threads, [&](std::size_t i) {
    const std::size_t u = i / kNumProbeClasses;
    const auto c = static_cast<ProbeClass>(i % kNumProbeClasses);
    DistortionPlan plan = class_plan(
        c, mix(cfg.seed, u * kNumProbeClasses + static_cast<std::size_t>(c)));
    AudioBuffer distorted = apply_plan(corpus[u], plan);
    Tensor feats = logmel_frontend(distorted, cfg.frontend);
    Tensor z = student.forward(feats).z;  // [T, D]
    const std::size_t t_len = z.shape()[0];
    std::vector<double> pooled(d, 0.0);
    for (std::size_t t = 0; t < t_len; ++t)
      for (std::size_t j = 0; j < d; ++j) pooled[j] += z.data()[t * d + j];
    for (double& v : pooled) v /= static_cast<double>(t_len);
    vectors[i] = std::move(pooled);
  });

  // stratified split: utterances shuffled once, the same utterance goes to
  // the same side for every class
  std::vector<std::size_t> order(n_utt);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix(cfg.seed, 0x5eedULL));
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_train = static_cast<std::size_t>(
      std::lround(cfg.train_fraction * static_cast<double>(n_utt)));
  CORRKD_CHECK(n_train >= 1 && n_train < n_utt,
               "build_probe_dataset: degenerate train/test split");

  ProbeDataset out;
  out.dim = d;
  for (std::size_t k = 0; k < n_utt; ++k) {
    const std::size_t u = order[k];
    const bool in_train = k < n_train;
    for (int c = 0; c < kNumProbeClasses; ++c) {
      auto& xs = in_train ? out.train_x : out.test_x;
      auto& ys = in_train ? out.train_y : out.test_y;
      xs.push_back(vectors[u * kNumProbeClasses + static_cast<std::size_t>(c)]);
      ys.push_back(c);
    }
  }
  return out;
}

// ============================================================================
// CART / forest
// ============================================================================

int DecisionTree::predict(std::span<const double> x) const {
  int i = 0;
  for (;;) {
    const Node& n = nodes[static_cast<std::size_t>(i)];
    if (n.feature < 0) return n.label;
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                              : n.right;
  }
}

namespace {

struct TreeBuilder {
  const std::vector<std::vector<double>>& x;
  const std::vector<int>& y;
  int n_classes;
  int max_depth;
  int max_features;
  std::mt19937_64 rng;
  DecisionTree tree;

  double gini(const std::vector<int>& counts, int total) const {
    if (total == 0) return 0.0;
    double g = 1.0;
    for (int c : counts) {
      const double p = static_cast<double>(c) / total;
      g -= p * p;
    }
    return g;
  }

  int majority(std::span<const std::size_t> idx) const {
    std::vector<int> counts(static_cast<std::size_t>(n_classes), 0);
    for (std::size_t i : idx) ++counts[static_cast<std::size_t>(y[i])];
    int best = 0;
    for (int c = 1; c < n_classes; ++c)
      if (counts[static_cast<std::size_t>(c)] >
          counts[static_cast<std::size_t>(best)])
        best = c;  // ties keep the lowest class index
    return best;
  }

  // returns node index
  int build(std::vector<std::size_t> idx, int depth) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    bool pure = true;
    for (std::size_t i = 1; i < idx.size(); ++i) {
      if (y[idx[i]] != y[idx[0]]) {
        pure = false;
        break;
      }
    }
    if (pure || depth >= max_depth || idx.size() < 2) {
      tree.nodes[static_cast<std::size_t>(node_id)].label = majority(idx);
      return node_id;
    }

    const std::size_t dim = x[0].size();
    std::vector<std::size_t> feats(dim);
    std::iota(feats.begin(), feats.end(), 0);
    std::shuffle(feats.begin(), feats.end(), rng);
    feats.resize(std::min<std::size_t>(static_cast<std::size_t>(max_features),
                                       dim));

    // parent impurity baseline
    std::vector<int> parent_counts(static_cast<std::size_t>(n_classes), 0);
    for (std::size_t i : idx) ++parent_counts[static_cast<std::size_t>(y[i])];
    const double parent_gini =
        gini(parent_counts, static_cast<int>(idx.size()));

    double best_gain = 0.0;
    std::size_t best_feat = 0;
    double best_thresh = 0.0;
    std::vector<std::pair<double, std::size_t>> vals(idx.size());
    for (std::size_t f : feats) {
      for (std::size_t i = 0; i < idx.size(); ++i)
        vals[i] = {x[idx[i]][f], idx[i]};
      std::sort(vals.begin(), vals.end());
      std::vector<int> left_counts(static_cast<std::size_t>(n_classes), 0);
      std::vector<int> right_counts = parent_counts;
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        const int cls = y[vals[i].second];
        ++left_counts[static_cast<std::size_t>(cls)];
        --right_counts[static_cast<std::size_t>(cls)];
        if (vals[i].first == vals[i + 1].first) continue;  // no midpoint
        const int nl = static_cast<int>(i + 1);
        const int nr = static_cast<int>(vals.size()) - nl;
        const double g =
            (nl * gini(left_counts, nl) + nr * gini(right_counts, nr)) /
            static_cast<double>(vals.size());
        const double gain = parent_gini - g;
        if (gain > best_gain) {
          best_gain = gain;
          best_feat = f;
          best_thresh = 0.5 * (vals[i].first + vals[i + 1].first);
        }
      }
    }
    if (best_gain <= 0.0) {
      tree.nodes[static_cast<std::size_t>(node_id)].label = majority(idx);
      return node_id;
    }

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx) {
      (x[i][best_feat] <= best_thresh ? left_idx : right_idx).push_back(i);
    }
    const int left = build(std::move(left_idx), depth + 1);
    const int right = build(std::move(right_idx), depth + 1);
    DecisionTree::Node& n = tree.nodes[static_cast<std::size_t>(node_id)];
    n.feature = static_cast<int>(best_feat);
    n.threshold = best_thresh;
    n.left = left;
    n.right = right;
    return node_id;
  }
};

}  // namespace

RandomForest forest_train(const ProbeDataset& data, const ForestConfig& cfg) {
  CORRKD_CHECK(!data.train_x.empty(), "forest_train: empty train split");
  CORRKD_CHECK(cfg.n_trees >= 1, "forest_train: n_trees must be >= 1");
  const std::size_t n = data.train_x.size();
  const std::size_t dim = data.train_x[0].size();
  int n_classes = 0;
  for (int c : data.train_y) n_classes = std::max(n_classes, c + 1);
  const bool degenerate =
      std::all_of(data.train_y.begin(), data.train_y.end(),
                  [&](int c) { return c == data.train_y[0]; });

  const int max_features =
      cfg.max_features > 0
          ? cfg.max_features
          : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(dim))));

  std::vector<DecisionTree> trees(static_cast<std::size_t>(cfg.n_trees));
  parallel_for(static_cast<std::size_t>(cfg.n_trees), 0, [&](std::size_t t) {
    std::mt19937_64 rng(mix(cfg.seed, t));
    // full-size bootstrap resample of the training split
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = pick(rng);
    TreeBuilder builder{data.train_x, data.train_y, n_classes, cfg.max_depth,
                        max_features,  std::mt19937_64(mix(cfg.seed, t + 1000003)),
                        {}};
    builder.build(std::move(idx), 0);
    trees[t] = std::move(builder.tree);
  });
  return RandomForest(std::move(trees), n_classes, degenerate);
}

int RandomForest::predict(std::span<const double> x) const {
  std::vector<int> votes(static_cast<std::size_t>(std::max(n_classes_, 1)), 0);
  for (const DecisionTree& t : trees_) {
    const int c = t.predict(x);
    if (c >= 0 && c < n_classes_) ++votes[static_cast<std::size_t>(c)];
  }
  int best = 0;
  for (int c = 1; c < n_classes_; ++c)
    if (votes[static_cast<std::size_t>(c)] >
        votes[static_cast<std::size_t>(best)])
      best = c;  // ties keep the lowest class index
  return best;
}

ProbeReport probe_accuracy(const RandomForest& forest,
                           const ProbeDataset& data) {
  CORRKD_CHECK(!data.test_x.empty(), "probe_accuracy: empty test split");
  std::array<int, kNumProbeClasses> correct{}, total{};
  int all_correct = 0;
  for (std::size_t i = 0; i < data.test_x.size(); ++i) {
    const int truth = data.test_y[i];
    const int pred = forest.predict(data.test_x[i]);
    if (truth >= 0 && truth < kNumProbeClasses) {
      ++total[static_cast<std::size_t>(truth)];
      if (pred == truth) ++correct[static_cast<std::size_t>(truth)];
    }
    if (pred == truth) ++all_correct;
  }
  ProbeReport report;
  report.overall_acc =
      static_cast<double>(all_correct) / static_cast<double>(data.test_x.size());
  for (int c = 0; c < kNumProbeClasses; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    report.acc_per_class[ci] =
        total[ci] > 0 ? static_cast<double>(correct[ci]) / total[ci] : 0.0;
  }
  report.n_trees = forest.n_trees();
  return report;
}

}  // namespace corrkd
