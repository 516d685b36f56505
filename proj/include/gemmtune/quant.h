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

/*!
 * \file gemmtune/quant.h
 * \brief Quantized GEMM with zero-point correction, requantization and bias folding.
 *
 * Weights are quantized symmetrically (no weight zero point); inputs and outputs carry
 * zero points zp_a and zp_c. With r = s_d / s_c the reference result is
 *
 *   Q'_C(m,n) = sum_k (Q_A(m,k) - zp_a) * Q_B(k,n)
 *   Q_C(m,n)  = sat8(round(zp_c + r * (Q'_C(m,n) + Q_D(m,n))))
 *
 * and the accelerator computes the folded form
 *
 *   Q'_D(m,n) = Q_D(m,n) - zp_a * sum_k Q_B(k,n) + round(zp_c / r)
 *   Q_C(m,n)  = sat8(round(r * (sum_k Q_A(m,k) * Q_B(k,n) + Q'_D(m,n))))
 *
 * Note the zp_c term is scaled by s_c / s_d: that is what expanding the requantization of
 * the corrected product gives. Rounding is half away from zero everywhere.
 */
#ifndef GEMMTUNE_QUANT_H_
#define GEMMTUNE_QUANT_H_

#include <cstdint>

#include "gemmtune/isa.h"
#include "gemmtune/matrix.h"
#include "gemmtune/rational.h"

namespace gemmtune {

struct QuantizedGemmProblem {
  MatrixI8 q_a;   // [M, K]
  MatrixI8 q_b;   // [K, N]
  MatrixI32 q_d;  // [M, N]
  int32_t zp_a{0};
  int32_t zp_c{0};
  Rational s_d{1};
  Rational s_c{1};

  /*! \brief s_d / s_c, the factor applied at move-out. */
  Rational requant_scale() const { return s_d / s_c; }
  Workload workload() const { return {q_a.rows, q_b.cols, q_a.cols}; }
  /*! \throws ShapeMismatch, or Error for non-positive scales. */
  void Check() const;
};

MatrixI8 ReferenceQgemm(const QuantizedGemmProblem& q);

/*! \brief Q'_D; the zero-point correction depends on Q_B only. */
MatrixI32 FoldCorrectedBias(const QuantizedGemmProblem& q);

MatrixI8 FoldedQgemm(const QuantizedGemmProblem& q);

/*! \brief Raw int32 product sum_k Q_A * Q_B + Q'_D, before scaling. */
MatrixI32 FoldedAccumulator(const QuantizedGemmProblem& q);

struct RandomProblemOptions {
  /*! \brief Upper bound of s_d / s_c; the folding error bound needs it at most 1. */
  double max_scale_ratio{1.0};
  int32_t max_abs_bias{1 << 14};
  /*! \brief Choose zp_c so that zp_c * s_c / s_d is an integer. */
  bool integral_zero_point_term{false};
};

QuantizedGemmProblem RandomProblem(const Workload& w, uint64_t seed,
                                   const RandomProblemOptions& opts = {});

}  // namespace gemmtune

#endif  // GEMMTUNE_QUANT_H_
