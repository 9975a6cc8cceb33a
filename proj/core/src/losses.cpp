// core/src/losses.cpp

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

#include "corrkd/losses.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace corrkd {

namespace {

constexpr double kNormEps = 1e-8;  // cosine-similarity norm guard

void check_batch(const RepresentationBatch& batch, const char* who) {
  CORRKD_CHECK(batch.student.defined() && batch.teacher.defined(),
               who << ": undefined representations");
  CORRKD_CHECK(batch.student.shape() == batch.teacher.shape(),
               who << ": student " << shape_to_string(batch.student.shape())
                   << " vs teacher " << shape_to_string(batch.teacher.shape()));
  CORRKD_CHECK(batch.student.ndim() == 4,
               who << ": expected [B,P,T,D], got "
                   << shape_to_string(batch.student.shape()));
  CORRKD_CHECK(!batch.teacher.tracked(),
               who << ": teacher representations must not be on a tape "
                      "(the teacher is frozen)");
}

/// sum_b sum_l sum_t log sigma(cos(h, hhat)) / B  on [B,P,T,D] tensors.
Tensor cosine_log_sigmoid_term(const Tensor& student, const Tensor& teacher) {
  const std::size_t last = 3;
  Tensor dot = reduce_sum(mul(student, teacher), last);            // [B,P,T]
  Tensor ns = add_scalar(sqrt(reduce_sum(square(student), last)), kNormEps);
  Tensor nt = add_scalar(sqrt(reduce_sum(square(teacher), last)), kNormEps);
  Tensor cos = div(div(dot, ns), nt);
  Tensor summed = sum_all(log(sigmoid(cos)));
  const double inv_b = 1.0 / static_cast<double>(student.shape()[0]);
  return mul_scalar(summed, inv_b);
}

/// Constant [D,D] identity mask (not tracked).
Tensor diag_mask(std::size_t d, double on_diag, double off_diag) {
  std::vector<double> m(d * d, off_diag);
  for (std::size_t i = 0; i < d; ++i) m[i * d + i] = on_diag;
  return Tensor::from({d, d}, std::move(m));
}

}  // namespace

std::string LossReport::serialize() const {
  std::ostringstream os;
  os.precision(17);
  os << "l_cc_diag=" << l_cc_diag << " l_cc_offdiag=" << l_cc_offdiag
     << " l_sc=" << l_sc << " l_cos=" << l_cos << " l_total=" << l_total
     << " lambda_cc_eff=" << lambda_cc_eff
     << " lambda_sc_eff=" << lambda_sc_eff;
  return os.str();
}

Tensor kd_loss(const RepresentationBatch& batch, double gamma,
               LossReport* report) {
  check_batch(batch, "kd_loss");
  const Shape& s = batch.student.shape();
  const std::size_t B = s[0], D = s[3];

  Tensor diff = abs(sub(batch.teacher, batch.student));
  Tensor l1 = mul_scalar(sum_all(diff), 1.0 / (static_cast<double>(B) *
                                               static_cast<double>(D)));
  Tensor cos_term = cosine_log_sigmoid_term(batch.student, batch.teacher);
  Tensor total = sub(l1, mul_scalar(cos_term, gamma));
  if (report) {
    *report = LossReport{};
    report->l_cos = cos_term.value();
    report->l_total = total.value();
  }
  return total;
}

Tensor bt_loss(const Tensor& y_v1, const Tensor& y_v2, double lambda) {
  CORRKD_CHECK(y_v1.defined() && y_v2.defined(), "bt_loss: undefined input");
  CORRKD_CHECK(y_v1.ndim() == 2 && y_v1.shape() == y_v2.shape(),
               "bt_loss: expected matching [B,D] views, got "
                   << shape_to_string(y_v1.shape()) << " and "
                   << shape_to_string(y_v2.shape()));
  const std::size_t B = y_v1.shape()[0], D = y_v1.shape()[1];
  CORRKD_CHECK(B >= 2, "bt_loss: batch size must be >= 2, got " << B);

  // c_ij = sum_b y1[b,i] y2[b,j] / (||y1[:,i]|| ||y2[:,j]||), along the batch
  Tensor numer = matmul(transpose(y_v1), y_v2);                       // [D,D]
  Tensor n1 = add_scalar(sqrt(reduce_sum(square(y_v1), 0)), kNormEps);  // [D]
  Tensor n2 = add_scalar(sqrt(reduce_sum(square(y_v2), 0)), kNormEps);
  Tensor denom = mul(reshape(n1, {D, 1}), reshape(n2, {1, D}));
  Tensor c = div(numer, denom);

  Tensor on = diag_mask(D, 1.0, 0.0);
  Tensor off = diag_mask(D, 0.0, 1.0);
  Tensor diag_term = sum_all(mul(square(add_scalar(neg(c), 1.0)), on));
  Tensor off_term = sum_all(mul(square(c), off));
  return add(diag_term, mul_scalar(off_term, lambda));
}

CorrelationMatrix cross_corr(const RepresentationBatch& batch) {
  check_batch(batch, "cross_corr");
  CORRKD_CHECK(batch.student.shape()[0] >= 2,
               "cross_corr: batch size must be >= 2, got "
                   << batch.student.shape()[0]);
  Tensor hs = batch_standardize(batch.student);
  Tensor ht = batch_standardize(batch.teacher);
  return {batched_outer(hs, ht), CorrelationKind::cross};
}

CorrelationMatrix self_corr(const Tensor& student) {
  CORRKD_CHECK(student.defined() && student.ndim() == 4,
               "self_corr: expected [B,P,T,D], got "
                   << shape_to_string(student.shape()));
  CORRKD_CHECK(student.shape()[0] >= 2,
               "self_corr: batch size must be >= 2, got "
                   << student.shape()[0]);
  Tensor hs = batch_standardize(student);
  return {batched_outer(hs, hs), CorrelationKind::self};
}

Tensor cl_loss(const RepresentationBatch& batch, const LossWeights& weights,
               LossReport* report) {
  check_batch(batch, "cl_loss");
  const Shape& s = batch.student.shape();
  const std::size_t P = s[1], T = s[2], D = s[3];
  const double inv_pt = 1.0 / (static_cast<double>(P) * static_cast<double>(T));

  CorrelationMatrix ccc = cross_corr(batch);
  CorrelationMatrix csc = self_corr(batch.student);

  Tensor on = diag_mask(D, 1.0, 0.0);
  Tensor off = diag_mask(D, 0.0, 1.0);

  Tensor cc_diag = mul_scalar(
      sum_all(mul(square(add_scalar(neg(ccc.values), 1.0)), on)), inv_pt);
  Tensor cc_off = mul_scalar(sum_all(mul(square(ccc.values), off)), inv_pt);
  Tensor sc_off = mul_scalar(sum_all(mul(square(csc.values), off)), inv_pt);
  Tensor cos_term = cosine_log_sigmoid_term(batch.student, batch.teacher);

  Tensor total = add(cc_diag, mul_scalar(cc_off, weights.lambda_cc));
  total = add(total, mul_scalar(sc_off, weights.lambda_sc));
  total = sub(total, mul_scalar(cos_term, weights.gamma));

  if (report) {
    *report = LossReport{};
    report->l_cc_diag = cc_diag.value();
    report->l_cc_offdiag = cc_off.value();
    report->l_sc = sc_off.value();
    report->l_cos = cos_term.value();
    report->l_total = total.value();
    report->lambda_cc_eff = weights.lambda_cc;
    report->lambda_sc_eff = weights.lambda_sc;
  }
  return total;
}

double heuristic_lambda(double snr_db) {
  double s = snr_db;
  if (s < 10.0 || s > 20.0) {
    std::fprintf(stderr,
                 "[corrkd] warning: heuristic_lambda snr %.3f dB outside "
                 "[10,20], clamping\n",
                 s);
    s = s < 10.0 ? 10.0 : 20.0;
  }
  // 5e-5 / (9.9 s - 98), written so both endpoints land exactly:
  // at s=10 the denominator is exactly 1, at s=20 exactly 100.
  return 5e-5 / (9.9 * (s - 10.0) + 1.0);
}

}  // namespace corrkd
