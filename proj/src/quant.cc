/*
 * Licensed to the Apache Software Foundation (ASF) under one
 * or more contributor license agreements.  See the NOTICE file
 * distributed with this work for additional information
 * regarding copyright ownership.  The ASF licenses this file
 * to you under the Apache License, Version 2.0 (the
 * "License"); you may not use this file except in compliance
 * with the License.  You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing,
 * software distributed under the License is distributed on an
 * "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
 * KIND, either express or implied.  See the License for the
 * specific language governing permissions and limitations
 * under the License.
 */

#include "gemmtune/quant.h"

#include <cmath>
#include <random>

#include "gemmtune/error.h"

namespace gemmtune {

void QuantizedGemmProblem::Check() const {
  if (q_a.cols != q_b.rows) throw ShapeMismatch("A is [M,K] but B is not [K,N]");
  if (q_d.rows != q_a.rows || q_d.cols != q_b.cols) throw ShapeMismatch("D is not [M,N]");
  if (q_a.rows < 1 || q_b.cols < 1 || q_a.cols < 1) throw ShapeMismatch("empty GEMM operand");
  if (s_d.num() <= 0 || s_c.num() <= 0) throw Error("scale factors must be positive");
}

namespace {

std::vector<int64_t> ColumnSums(const MatrixI8& b) {
  std::vector<int64_t> sums(static_cast<size_t>(b.cols), 0);
  for (int64_t k = 0; k < b.rows; ++k) {
    for (int64_t n = 0; n < b.cols; ++n) sums[static_cast<size_t>(n)] += b(k, n);
  }
  return sums;
}

}  // namespace

MatrixI8 ReferenceQgemm(const QuantizedGemmProblem& q) {
  q.Check();
  const int64_t M = q.q_a.rows, N = q.q_b.cols, K = q.q_a.cols;
  const Rational r = q.requant_scale();
  MatrixI8 out(M, N);
  for (int64_t m = 0; m < M; ++m) {
    for (int64_t n = 0; n < N; ++n) {
      int64_t corrected = 0;
      for (int64_t k = 0; k < K; ++k) {
        corrected += (static_cast<int64_t>(q.q_a(m, k)) - q.zp_a) * q.q_b(k, n);
      }
      int64_t x = corrected + q.q_d(m, n);
      // round(zp_c + r * x) as a single exact fraction.
      __int128 num = static_cast<__int128>(q.zp_c) * r.den() + static_cast<__int128>(x) * r.num();
      out(m, n) = SaturateInt8(DivRoundHalfAway(num, r.den()));
    }
  }
  return out;
}

MatrixI32 FoldCorrectedBias(const QuantizedGemmProblem& q) {
  q.Check();
  const int64_t M = q.q_a.rows, N = q.q_b.cols;
  const auto colsum = ColumnSums(q.q_b);
  const int64_t zp_term = q.requant_scale().Reciprocal().ScaleRound(q.zp_c);
  MatrixI32 out(M, N);
  for (int64_t m = 0; m < M; ++m) {
    for (int64_t n = 0; n < N; ++n) {
      int64_t v = q.q_d(m, n) - static_cast<int64_t>(q.zp_a) * colsum[static_cast<size_t>(n)] + zp_term;
      out(m, n) = SaturateInt32(v);
    }
  }
  return out;
}

MatrixI32 FoldedAccumulator(const QuantizedGemmProblem& q) {
  MatrixI32 acc = FoldCorrectedBias(q);
  const int64_t M = q.q_a.rows, N = q.q_b.cols, K = q.q_a.cols;
  for (int64_t m = 0; m < M; ++m) {
    for (int64_t n = 0; n < N; ++n) {
      int64_t s = acc(m, n);
      for (int64_t k = 0; k < K; ++k) s += static_cast<int64_t>(q.q_a(m, k)) * q.q_b(k, n);
      acc(m, n) = SaturateInt32(s);
    }
  }
  return acc;
}

MatrixI8 FoldedQgemm(const QuantizedGemmProblem& q) {
  const MatrixI32 acc = FoldedAccumulator(q);
  const Rational r = q.requant_scale();
  MatrixI8 out(acc.rows, acc.cols);
  for (size_t i = 0; i < acc.data.size(); ++i) out.data[i] = SaturateInt8(r.ScaleRound(acc.data[i]));
  return out;
}

QuantizedGemmProblem RandomProblem(const Workload& w, uint64_t seed, const RandomProblemOptions& opts) {
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](int64_t lo, int64_t hi) {
    return std::uniform_int_distribution<int64_t>(lo, hi)(rng);
  };
  QuantizedGemmProblem q;
  q.q_a = MatrixI8(w.m, w.k);
  q.q_b = MatrixI8(w.k, w.n);
  q.q_d = MatrixI32(w.m, w.n);
  for (auto& v : q.q_a.data) v = static_cast<int8_t>(uniform(-128, 127));
  for (auto& v : q.q_b.data) v = static_cast<int8_t>(uniform(-128, 127));
  for (auto& v : q.q_d.data) v = static_cast<int32_t>(uniform(-opts.max_abs_bias, opts.max_abs_bias));
  q.zp_a = static_cast<int32_t>(uniform(-128, 127));
  q.zp_c = static_cast<int32_t>(uniform(-128, 127));

  // Requantization factors are small in practice; draw them log-uniformly in [1e-5, max].
  const double log_ratio =
      std::uniform_real_distribution<double>(std::log(1e-5), std::log(opts.max_scale_ratio))(rng);
  Rational ratio = Rational::FromDouble(std::exp(log_ratio), 1 << 16);
  if (ratio.num() == 0) ratio = Rational(1, 1 << 16);
  if (opts.integral_zero_point_term) ratio = Rational(1, ratio.Reciprocal().ScaleRound(1));
  q.s_c = Rational(uniform(1, 1 << 10), 1 << 10);
  q.s_d = ratio * q.s_c;
  return q;
}

}  // namespace gemmtune
