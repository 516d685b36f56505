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
 * \file gemmtune/isa.h
 * \brief Low-level instruction vocabulary of the accelerator and the trace container
 *        exchanged between code generation and simulation.
 *
 * Local addresses are abstract row indices. Scratchpad rows hold `dim` input-width
 * elements, accumulator rows hold `dim` accumulator-width elements. A patch wider than
 * `dim` columns is stored as consecutive column blocks: block b of a rows x cols patch
 * starting at row r occupies rows [r + b*rows, r + (b+1)*rows).
 */
#ifndef GEMMTUNE_ISA_H_
#define GEMMTUNE_ISA_H_

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gemmtune/accel_config.h"
#include "gemmtune/rational.h"

namespace gemmtune {

enum class Dataflow { kWS = 0, kOS = 1 };
enum class MoveDirection { kIn = 0, kOut = 1 };

const char* ToString(Dataflow df);

struct LocalAddr {
  bool accumulator{false};
  int64_t row{0};

  friend bool operator==(const LocalAddr&, const LocalAddr&) = default;
};

inline LocalAddr SpAddr(int64_t row) { return {false, row}; }
inline LocalAddr AccAddr(int64_t row) { return {true, row}; }

struct ConfigEx {
  Dataflow dataflow{Dataflow::kWS};
  Rational out_scale{1};
  friend bool operator==(const ConfigEx&, const ConfigEx&) = default;
};

struct ConfigMv {
  MoveDirection direction{MoveDirection::kIn};
  int64_t stride_bytes{0};
  Rational scale{1};
  friend bool operator==(const ConfigMv&, const ConfigMv&) = default;
};

/*! \brief DRAM -> scratchpad (int8) or accumulator (int32) patch load. */
struct MoveIn {
  uint64_t dram_addr{0};
  LocalAddr dst;
  int64_t rows{0};
  int64_t cols{0};
  friend bool operator==(const MoveIn&, const MoveIn&) = default;
};

/*! \brief Accumulator -> DRAM patch store, scaled and saturated to int8. */
struct MoveOut {
  uint64_t dram_addr{0};
  LocalAddr src;
  int64_t rows{0};
  int64_t cols{0};
  friend bool operator==(const MoveOut&, const MoveOut&) = default;
};

/*!
 * \brief Stage the B block (rows = reduction extent, cols = output columns) and select
 *        the accumulator block the following Compute writes.
 */
struct Preload {
  LocalAddr b;
  LocalAddr c;
  int64_t rows{0};
  int64_t cols{0};
  friend bool operator==(const Preload&, const Preload&) = default;
};

/*! \brief Stream the A block (rows = output rows, cols = reduction extent). */
struct Compute {
  LocalAddr a;
  std::optional<LocalAddr> d;
  int64_t rows{0};
  int64_t cols{0};
  bool accumulate{true};
  friend bool operator==(const Compute&, const Compute&) = default;
};

struct Fence {
  friend bool operator==(const Fence&, const Fence&) = default;
};
struct Flush {
  friend bool operator==(const Flush&, const Flush&) = default;
};

using Instruction = std::variant<ConfigEx, ConfigMv, MoveIn, MoveOut, Preload, Compute, Fence, Flush>;

enum class InstrKind { kConfigEx, kConfigMv, kMoveIn, kMoveOut, kPreload, kCompute, kFence, kFlush };
inline constexpr int kNumInstrKinds = 8;

inline InstrKind KindOf(const Instruction& inst) { return static_cast<InstrKind>(inst.index()); }
const char* ToString(InstrKind kind);

struct Workload {
  int64_t m{1};
  int64_t n{1};
  int64_t k{1};
  friend bool operator==(const Workload&, const Workload&) = default;
};

std::string ToString(const Workload& w);

struct TraceMetadata {
  Workload workload;
  std::string schedule_hash;
  /*! \brief "tuned" or "cisc-baseline". */
  std::string generator{"tuned"};
};

struct InstructionTrace {
  std::vector<Instruction> instructions;
  TraceMetadata meta;
  bool is_cisc_baseline() const { return meta.generator == "cisc-baseline"; }
};

enum class ViolationKind {
  kMoveLimitExceeded,
  kAddressOutOfRange,
  kBigMvoutUnsupported,
  kDataflowUnsupported,
  kConfigMissing,
  kWrongAddressSpace,
  kBadShape,
};

const char* ToString(ViolationKind kind);

/*! \brief Local rows occupied by a rows x cols patch (ceil(cols / dim) column blocks). */
inline int64_t PatchRowSpan(int64_t rows, int64_t cols, int64_t dim) {
  return rows * ((cols + dim - 1) / dim);
}

struct Violation {
  size_t index;
  ViolationKind kind;
  friend bool operator==(const Violation&, const Violation&) = default;
};

/*! \brief Every (instruction index, violation) pair of the trace. Empty means legal. */
std::vector<Violation> CheckLegality(const InstructionTrace& trace, const AcceleratorConfig& cfg);

/*! \brief One line for an instruction, e.g. "config.ex dataflow=WS scale=1/2". */
std::string RenderInstruction(const Instruction& inst);
/*! \brief Instructions only, one per line. An empty trace renders as "". */
std::string RenderTrace(const InstructionTrace& trace);
Instruction ParseInstruction(const std::string& line);

/*! \brief Listing with a '#' metadata header, the file format of `codegen --emit-trace`. */
std::string RenderListing(const InstructionTrace& trace);
InstructionTrace ParseListing(const std::string& text);

}  // namespace gemmtune

#endif  // GEMMTUNE_ISA_H_
