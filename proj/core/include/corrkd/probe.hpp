// core/include/corrkd/probe.hpp

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

#ifndef CORRKD_PROBE_HPP_
#define CORRKD_PROBE_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "corrkd/corpus.hpp"
#include "corrkd/features.hpp"
#include "corrkd/model.hpp"

namespace corrkd {

/// The four single-distortion classes used for the noise-invariance probe.
enum class ProbeClass : int { babble = 0, gaussian = 1, pink = 2, reverb = 3 };
constexpr int kNumProbeClasses = 4;
const char* probe_class_name(ProbeClass c);

/// Mean-pooled student embeddings, one per (utterance, distortion class),
/// split into train and test.
struct ProbeDataset {
  std::size_t dim = 0;
  std::vector<std::vector<double>> train_x, test_x;
  std::vector<int> train_y, test_y;
};

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 8;
  int max_features = 0;  // 0 -> ceil(sqrt(dim))
  std::uint64_t seed = 0;
};

/// CART decision tree (Gini impurity, axis-aligned midpoint splits).
struct DecisionTree {
  struct Node {
    int feature = -1;       // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    int label = -1;
  };
  std::vector<Node> nodes;
  int predict(std::span<const double> x) const;
};

class RandomForest {
 public:
  RandomForest() = default;
  RandomForest(std::vector<DecisionTree> trees, int n_classes, bool degenerate)
      : trees_(std::move(trees)), n_classes_(n_classes),
        degenerate_(degenerate) {}

  /// Majority vote; ties break toward the lowest class index.
  int predict(std::span<const double> x) const;
  int n_trees() const { return static_cast<int>(trees_.size()); }
  /// True when the training data held a single class.
  bool degenerate() const { return degenerate_; }

 private:
  std::vector<DecisionTree> trees_;
  int n_classes_ = 0;
  bool degenerate_ = false;
};

struct ProbeReport {
  double overall_acc = 0.0;
  std::array<double, kNumProbeClasses> acc_per_class{};
  int n_trees = 0;
  std::uint64_t seed = 0;
  std::string serialize() const;
};

struct ProbeBuildConfig {
  FrontendConfig frontend{};
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  int threads = 0;
};

/// For each utterance x class: distort with that class only, run the student,
/// mean-pool the last hidden layer over time. Stratified train/test split.
ProbeDataset build_probe_dataset(const StudentModel& student,
                                 std::span<const AudioBuffer> corpus,
                                 const ProbeBuildConfig& cfg);

/// Bootstrap-resampled CART forest; deterministic given cfg.seed.
RandomForest forest_train(const ProbeDataset& data, const ForestConfig& cfg);

ProbeReport probe_accuracy(const RandomForest& forest, const ProbeDataset& data);

}  // namespace corrkd

#endif  // CORRKD_PROBE_HPP_
