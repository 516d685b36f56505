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
 * \file gemmtune/schedule.h
 * \brief GEMM schedule parameters and the hardware-valid schedule space.
 *
 * A schedule tiles C[M,N] = A[M,K] * B[K,N] + D[M,N] at two levels. Level-1 tiles are the
 * patches moved into the scratchpad, level-2 tiles are the blocks handed to the systolic
 * array and are pinned to `dim`. The space is pruned by move limits, scratchpad and
 * accumulator capacity (with conflict-free banking of double-buffered copies), and the
 * capability flags of the accelerator.
 */
#ifndef GEMMTUNE_SCHEDULE_H_
#define GEMMTUNE_SCHEDULE_H_

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gemmtune/accel_config.h"
#include "gemmtune/isa.h"

namespace gemmtune {

enum class DoubleBuffer { kNone = 0, kAOnly = 1, kBOnly = 2, kBoth = 3 };

const char* ToString(DoubleBuffer db);

struct ScheduleParams {
  int64_t tile_m1{16};
  int64_t tile_n1{16};
  int64_t tile_k1{16};
  int64_t tile_m2{16};
  int64_t tile_n2{16};
  int64_t tile_k2{16};
  int64_t parallel_accumulations{1};
  DoubleBuffer apply_double_buffer{DoubleBuffer::kNone};
  bool exchange_axis{false};
  Dataflow dataflow{Dataflow::kWS};
  bool mvout_big_block{false};

  bool double_buffer_a() const {
    return apply_double_buffer == DoubleBuffer::kAOnly || apply_double_buffer == DoubleBuffer::kBoth;
  }
  bool double_buffer_b() const {
    return apply_double_buffer == DoubleBuffer::kBOnly || apply_double_buffer == DoubleBuffer::kBoth;
  }

  /*! Lexicographic on fields in declaration order; this is the enumeration order. */
  friend auto operator<=>(const ScheduleParams&, const ScheduleParams&) = default;
};

/*! \brief Compact single-line form, e.g. "t1=64x64x32 t2=16x16x16 par=2 db=both xchg=0 df=OS big=1". */
std::string ToString(const ScheduleParams& p);
/*! \brief Stable 16-hex-digit FNV-1a hash of ToString(p). */
std::string ScheduleHash(const ScheduleParams& p);

/*! \brief Round every dimension up to a multiple of dim. */
Workload PadWorkload(const Workload& w, const AcceleratorConfig& cfg);

enum class Operand { kA = 0, kB = 1 };

struct BufferPlacement {
  Operand operand;
  int copy;
  int64_t start_row;
  int64_t rows;
  int64_t first_bank;
  int64_t last_bank;
};

struct ScratchpadFootprint {
  /*! \brief Bytes of one copy of each operand tile. */
  int64_t a_tile_bytes{0};
  int64_t b_tile_bytes{0};
  /*! \brief All copies together. */
  int64_t total_bytes{0};
  std::vector<BufferPlacement> buffers;

  const BufferPlacement& Buffer(Operand op, int copy) const;
};

/*! \brief No conflict-free placement of the operand buffers exists. */
class Unsatisfiable : public Error {
 public:
  using Error::Error;
};

/*!
 * \brief Byte usage and bank placement of the A and B tile buffers.
 *
 * Buffers are placed greedily in the order A0, B0, A1, B1. Each buffer first tries to take
 * whole banks nobody else uses; failing that it takes the lowest free row range whose banks
 * are disjoint from its twin copy.
 * \throws Unsatisfiable when no such placement exists.
 */
ScratchpadFootprint ComputeScratchpadFootprint(const ScheduleParams& p, const AcceleratorConfig& cfg);
std::optional<ScratchpadFootprint> TryScratchpadFootprint(const ScheduleParams& p,
                                                          const AcceleratorConfig& cfg);

/*! \brief parallel_accumulations * tile_m1 * tile_n1 * acc_bits / 8. D' lives in these slots. */
int64_t AccumulatorFootprint(const ScheduleParams& p, const AcceleratorConfig& cfg);

enum class InvalidReason {
  kWorkloadNotPadded,
  kDivisibilityViolated,
  kLevel2NotDim,
  kBadParallel,
  kScratchpadOverflow,
  kBankAssignmentUnsatisfiable,
  kAccumulatorOverflow,
  kMoveLimitExceeded,
  kDataflowUnsupported,
  kBigMvoutUnsupported,
};

const char* ToString(InvalidReason r);

struct Validity {
  std::vector<InvalidReason> reasons;

  bool ok() const { return reasons.empty(); }
  explicit operator bool() const { return ok(); }
  bool Has(InvalidReason r) const;
  /*! \brief First reason; only meaningful when !ok(). */
  InvalidReason reason() const { return reasons.front(); }
};

/*! \brief Checks `p` against an already padded workload. Collects every failing rule. */
Validity IsValid(const ScheduleParams& p, const Workload& padded, const AcceleratorConfig& cfg);

/*! \brief Multiples of dim that divide the padded extent, ascending. */
std::vector<int64_t> TileCandidates(int64_t padded_extent, const AcceleratorConfig& cfg);

/*!
 * \brief Powers of two up to min(accumulator slots for the tile, number of output tiles).
 */
std::vector<int64_t> ParallelCandidates(int64_t tile_m1, int64_t tile_n1, const Workload& padded,
                                        const AcceleratorConfig& cfg);

/*!
 * \brief All valid schedules in lexicographic order.
 * \throws EmptySpace if none exists.
 */
std::vector<ScheduleParams> EnumerateValid(const Workload& padded, const AcceleratorConfig& cfg);

/*! \brief Number of level-1 tiles along each axis. */
struct TileCounts {
  int64_t m;
  int64_t n;
  int64_t k;
};
TileCounts CountTiles(const ScheduleParams& p, const Workload& padded);

}  // namespace gemmtune

#endif  // GEMMTUNE_SCHEDULE_H_
