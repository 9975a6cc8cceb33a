// core/include/corrkd/losses.hpp

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

#ifndef CORRKD_LOSSES_HPP_
#define CORRKD_LOSSES_HPP_

#include <string>

#include "corrkd/tensor.hpp"

namespace corrkd {

struct LossWeights {
  double gamma = 1.0;        // cosine term weight
  double lambda_cc = 5e-5;   // cross-correlation off-diagonal weight
  double lambda_sc = 5e-6;   // self-correlation off-diagonal weight
  bool heuristic = false;    // resolve lambdas from per-step SNR
};

/// Student predictions and matching teacher targets, each [B, P, T, D].
/// The teacher tensor must never be tracked on a tape: no gradient flows
/// into it.
struct RepresentationBatch {
  Tensor student;
  Tensor teacher;
};

enum class CorrelationKind { cross, self };

/// [P, T, D, D] correlation matrices per head and frame.
struct CorrelationMatrix {
  Tensor values;
  CorrelationKind kind = CorrelationKind::cross;
};

/// Per-component breakdown of the most recent loss evaluation, serialized as
/// a flat key-value record with stable key order.
struct LossReport {
  double l_cc_diag = 0.0;
  double l_cc_offdiag = 0.0;
  double l_sc = 0.0;
  double l_cos = 0.0;
  double l_total = 0.0;
  double lambda_cc_eff = 0.0;
  double lambda_sc_eff = 0.0;
  std::string serialize() const;
};

/// Distillation loss, mean over the batch of
///   sum_l [ sum_t (1/D) ||h_t - hhat_t||_1  -  gamma sum_t log sigma(cos) ].
Tensor kd_loss(const RepresentationBatch& batch, double gamma,
               LossReport* report = nullptr);

/// Reference redundancy-reduction loss on two [B, D] views:
///   sum_i (1 - c_ii)^2 + lambda sum_{i != j} c_ij^2
/// with c the column-normalized batch cross-correlation (no projector, no
/// flattening). Requires B >= 2.
Tensor bt_loss(const Tensor& y_v1, const Tensor& y_v2, double lambda);

/// Batch-standardize both sides, then the per-(p,t) cross-correlation.
CorrelationMatrix cross_corr(const RepresentationBatch& batch);

/// Batch-standardized self-correlation of the student predictions.
CorrelationMatrix self_corr(const Tensor& student);

/// Correlation objective L_CC + L_SC - gamma * L_cos where
///   L_CC = mean_{p,t} [ sum_i (1-Ccc_ii)^2 + lambda_cc sum_{i!=j} Ccc_ij^2 ]
///   L_SC = mean_{p,t} [ lambda_sc sum_{i!=j} Csc_ij^2 ]
/// and L_cos is the same cosine term as in kd_loss.
Tensor cl_loss(const RepresentationBatch& batch, const LossWeights& weights,
               LossReport* report = nullptr);

/// SNR-driven off-diagonal weight: 5e-5 at 10 dB down to 5e-7 at 20 dB,
/// strictly decreasing in between. Out-of-range inputs are clamped to
/// [10, 20] with a warning on stderr.
double heuristic_lambda(double snr_db);

}  // namespace corrkd

#endif  // CORRKD_LOSSES_HPP_
