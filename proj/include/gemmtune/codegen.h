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
 * \file gemmtune/codegen.h
 * \brief Lowering of a scheduled GEMM into an instruction trace.
 *
 * The emitted program follows the two-level loop nest
 *
 *   config
 *   for i_o, j_o (j_o innermost unless exchange_axis):
 *     move.in D'
 *     for k_o:
 *       move.in A', B'
 *       for i_i, j_i, k_i: preload + compute
 *     move.out C'   (immediately, or deferred over a group of parallel_accumulations tiles)
 *
 * fully unrolled. Double-buffered operands are prefetched one (tile, k_o) step ahead into
 * the alternate copy. A', B' move-ins are skipped when the buffer already holds the same
 * tile as the previous step (loop-invariant operand).
 */
#ifndef GEMMTUNE_CODEGEN_H_
#define GEMMTUNE_CODEGEN_H_

#include <array>
#include <cstdint>
#include <vector>

#include "gemmtune/accel_config.h"
#include "gemmtune/isa.h"
#include "gemmtune/quant.h"
#include "gemmtune/schedule.h"

namespace gemmtune {

struct DramRegion {
  uint64_t base{0};
  int64_t rows{0};
  int64_t cols{0};
  int64_t pitch_bytes{0};
  int64_t elem_bytes{1};

  uint64_t Addr(int64_t r, int64_t c) const {
    return base + static_cast<uint64_t>(r * pitch_bytes + c * elem_bytes);
  }
};

/*!
 * \brief Where operands live in DRAM.
 *
 * A, B and D' share one row pitch so that a single move-in configuration serves all of
 * them. C covers only the logical (unpadded) output but keeps the padded pitch.
 */
struct DramLayout {
  Workload logical;
  Workload padded;
  DramRegion a;
  DramRegion b;
  DramRegion d;
  DramRegion c;
  uint64_t total_bytes{0};
};

DramLayout MakeDramLayout(const Workload& logical, const AcceleratorConfig& cfg);

using InstructionCounts = std::array<int64_t, kNumInstrKinds>;

InstructionCounts CountInstructions(const InstructionTrace& trace);

struct LoweredProgram {
  InstructionTrace trace;
  DramLayout dram_layout;
  ScheduleParams params;
  /*! \brief Counts per instruction kind derived from loop arithmetic alone. */
  InstructionCounts expected_moves{};
};

struct CodegenOptions {
  /*! \brief Re-emit the configuration before every output tile (comparison hook). */
  bool naive_config{false};
};

class InvalidSchedule : public Error {
 public:
  using Error::Error;
};

/*!
 * \brief Lower `w` (logical, padded internally) under schedule `p`.
 * \throws InvalidSchedule if `p` is not valid for the padded workload, ShapeMismatch if `q`
 *         does not match `w`.
 */
LoweredProgram GenerateTrace(const Workload& w, const ScheduleParams& p, const QuantizedGemmProblem& q,
                             const AcceleratorConfig& cfg, const CodegenOptions& opts = {});

/*! \brief Same lowering when only the requantization scale is known (timing studies). */
LoweredProgram GenerateTrace(const Workload& w, const ScheduleParams& p, const Rational& out_scale,
                             const AcceleratorConfig& cfg, const CodegenOptions& opts = {});

/*!
 * \brief Fixed tiling a hardware loop FSM would pick: the largest uniform power-of-two tile
 *        whose double-buffered A and B each fit half the scratchpad and whose output tile
 *        fits the accumulator, clipped per axis to a divisor of the padded extent;
 *        weight-stationary, both operands double-buffered, as many parallel accumulations
 *        as the accumulator holds.
 */
ScheduleParams CiscBaselineParams(const Workload& w, const AcceleratorConfig& cfg);

/*! \brief Baseline program, tagged "cisc-baseline" so the simulator applies load balancing. */
LoweredProgram GenerateCiscBaseline(const Workload& w, const QuantizedGemmProblem& q,
                                    const AcceleratorConfig& cfg);
LoweredProgram GenerateCiscBaseline(const Workload& w, const Rational& out_scale,
                                    const AcceleratorConfig& cfg);

/*! \brief Closed-form instruction counts for (w, p) without generating the trace. */
InstructionCounts ExpectedInstructionCounts(const Workload& w, const ScheduleParams& p,
                                            const AcceleratorConfig& cfg, const CodegenOptions& opts = {});

struct DramImage {
  std::vector<uint8_t> bytes;
  DramLayout layout;
};

/*! \brief A, B and the folded bias Q'_D placed per `layout`, zero padding elsewhere. */
DramImage BuildDramImage(const DramLayout& layout, const QuantizedGemmProblem& q);

}  // namespace gemmtune

#endif  // GEMMTUNE_CODEGEN_H_
