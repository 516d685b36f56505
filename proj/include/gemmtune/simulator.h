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
 * \file gemmtune/simulator.h
 * \brief Functional and timing model of a decoupled access-execute systolic accelerator.
 *
 * Three controllers (load, execute, store) consume instructions of their category, in
 * order within each category, from a shared reorder buffer. Instructions enter the ROB in
 * program order while it has room; an instruction issues once every older instruction it
 * conflicts with (RAW, WAR, WAW on scratchpad/accumulator rows) has completed. Effects are
 * applied at issue time, so a hazard the ROB misses shows up as a wrong result.
 */
#ifndef GEMMTUNE_SIMULATOR_H_
#define GEMMTUNE_SIMULATOR_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gemmtune/accel_config.h"
#include "gemmtune/codegen.h"
#include "gemmtune/isa.h"
#include "gemmtune/matrix.h"

namespace gemmtune {

enum class Controller { kLoad = 0, kExecute = 1, kStore = 2, kNone = 3 };

const char* ToString(Controller c);
Controller ControllerOf(const Instruction& inst);

enum class SimErrorKind { kUninitializedRead, kAddressOutOfRange, kDeadlock, kNoOutput, kIllegal };

const char* ToString(SimErrorKind k);

class SimulationError : public Error {
 public:
  SimulationError(SimErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  SimErrorKind kind() const { return kind_; }

 private:
  SimErrorKind kind_;
};

struct TimelineEntry {
  size_t index;
  Controller controller;
  int64_t enter;
  int64_t start;
  int64_t finish;
};

struct SimReport {
  /*! \brief Logical C region; empty when the run was timing-only. */
  MatrixI8 output;
  Workload workload;
  int64_t total_cycles{0};
  /*! \brief Busy cycles of the load, execute and store controllers. */
  std::array<int64_t, 3> busy_cycles{};
  /*! \brief Cycles during which the next instruction could not enter a full ROB. */
  int64_t rob_stall_cycles{0};
  int64_t bank_conflict_count{0};
  /*! \brief Cycles the idle execute controller waited on an unfinished move-in. */
  int64_t exec_wait_on_load_cycles{0};
  /*! \brief Preloads that paid the array fill cost. */
  int64_t fill_count{0};
  double gops{0.0};
  std::vector<TimelineEntry> timeline;

  int64_t idle_cycles(Controller c) const { return total_cycles - busy_cycles[static_cast<size_t>(c)]; }
};

struct SimOptions {
  /*! \brief Carry data through the run; off for timing-only measurement. */
  bool functional{true};
  bool record_timeline{false};
};

/*! \brief 2*M*N*K + M*N. */
int64_t CountOps(const Workload& w);

/*! \brief Operations per second in units of 1e9 for a run of `cycles`. */
double GopsFor(const Workload& w, int64_t cycles, const AcceleratorConfig& cfg);

/*!
 * \brief Program-order execution. `dram` is updated in place; returns the logical C region.
 * \throws SimulationError on uninitialized reads, out-of-range addresses, or if no
 *         move-out ran.
 */
MatrixI8 FunctionalExecute(const InstructionTrace& trace, DramImage& dram, const AcceleratorConfig& cfg);

/*! \brief Timed execution with data. */
SimReport TimedExecute(const InstructionTrace& trace, DramImage& dram, const AcceleratorConfig& cfg,
                       const SimOptions& opts = {});

/*! \brief Timing-only execution (no DRAM image). */
SimReport TimedExecute(const InstructionTrace& trace, const AcceleratorConfig& cfg,
                       bool record_timeline = false);

/*! \brief Cycle cost of one instruction ignoring hazards, fills and conflicts. */
int64_t BaseCost(const Instruction& inst, const AcceleratorConfig& cfg);

std::string ReportToJson(const SimReport& r, const AcceleratorConfig& cfg);
std::string TimelineToCsv(const SimReport& r);

}  // namespace gemmtune

#endif  // GEMMTUNE_SIMULATOR_H_
