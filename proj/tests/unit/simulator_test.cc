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

#include <doctest.h>

#include <algorithm>
#include <random>

#include "gemmtune/codegen.h"
#include "gemmtune/simulator.h"

using namespace gemmtune;

namespace {

InstructionTrace Prologue() {
  InstructionTrace t;
  t.instructions = {ConfigEx{Dataflow::kWS, Rational(1)}, ConfigMv{MoveDirection::kIn, 16, Rational(1)},
                    ConfigMv{MoveDirection::kOut, 16, Rational(1)}};
  return t;
}

AcceleratorConfig FastDma() {
  AcceleratorConfig cfg;
  cfg.timing.dma_bytes_per_cycle = 16;
  cfg.timing.dma_latency_cycles = 10;
  return cfg;
}

int64_t SerialSum(const InstructionTrace& t, const AcceleratorConfig& cfg) {
  int64_t sum = 0;
  for (const auto& inst : t.instructions) sum += BaseCost(inst, cfg);
  return sum;
}

// Total length of the union of [start, finish) intervals.
int64_t UnionLength(std::vector<std::pair<int64_t, int64_t>> iv) {
  std::sort(iv.begin(), iv.end());
  int64_t total = 0, cur_s = 0, cur_e = -1;
  for (const auto& [s, e] : iv) {
    if (s >= e) continue;
    if (s > cur_e) {
      if (cur_e > cur_s) total += cur_e - cur_s;
      cur_s = s;
      cur_e = e;
    } else {
      cur_e = std::max(cur_e, e);
    }
  }
  if (cur_e > cur_s) total += cur_e - cur_s;
  return total;
}

}  // namespace

TEST_SUITE("simulator") {
  TEST_CASE("operation count") {
    CHECK(CountOps({1, 1, 1}) == 3);
    CHECK(CountOps({16, 16, 16}) == 8448);
    CHECK(CountOps({256, 256, 256}) == 33619968);
    AcceleratorConfig cfg;
    CHECK(GopsFor({16, 16, 16}, 100, cfg) == doctest::Approx(8448.0 / 1e-6 / 1e9));
  }

  TEST_CASE("single move-in cost") {
    const AcceleratorConfig cfg = FastDma();
    const Instruction mvin = MoveIn{0, SpAddr(0), 16, 16};
    CHECK(BaseCost(mvin, cfg) == 26);
    InstructionTrace t;
    t.instructions = {ConfigMv{MoveDirection::kIn, 16, Rational(1)}, mvin};
    const auto rep = TimedExecute(t, cfg, true);
    CHECK(rep.timeline[1].finish - rep.timeline[1].start == 26);
    CHECK(rep.total_cycles == cfg.timing.config_cycles + 26);
    // Accumulator destinations carry 32-bit elements.
    CHECK(BaseCost(MoveIn{0, AccAddr(0), 16, 16}, cfg) == 10 + 64);
  }

  TEST_CASE("independent work overlaps") {
    const AcceleratorConfig cfg = FastDma();
    InstructionTrace t = Prologue();
    t.instructions.push_back(MoveIn{0, SpAddr(0), 16, 16});
    t.instructions.push_back(MoveIn{256, SpAddr(2 * cfg.sp_bank_rows), 16, 16});
    t.instructions.push_back(Preload{SpAddr(0), AccAddr(0), 16, 16});
    t.instructions.push_back(Compute{SpAddr(0), std::nullopt, 16, 16, false});
    const auto rep = TimedExecute(t, cfg, true);
    CHECK(rep.total_cycles < SerialSum(t, cfg));
    CHECK(rep.timeline[6].start < rep.timeline[4].finish);
    CHECK(rep.bank_conflict_count == 0);
  }

  TEST_CASE("fenced chain costs the serial sum") {
    const AcceleratorConfig cfg = FastDma();
    InstructionTrace t;
    for (const Instruction& inst : Prologue().instructions) {
      t.instructions.push_back(inst);
      t.instructions.push_back(Fence{});
    }
    const std::vector<Instruction> body = {MoveIn{0, SpAddr(0), 16, 16}, MoveIn{256, SpAddr(16), 16, 16},
                                           Preload{SpAddr(16), AccAddr(0), 16, 16},
                                           Compute{SpAddr(0), std::nullopt, 16, 16, false},
                                           MoveOut{1024, AccAddr(0), 16, 16}};
    for (const auto& inst : body) {
      t.instructions.push_back(inst);
      t.instructions.push_back(Fence{});
    }
    CHECK(TimedExecute(t, cfg).total_cycles == SerialSum(t, cfg));
  }

  TEST_CASE("same-bank load and execute serialize") {
    const AcceleratorConfig cfg = FastDma();
    InstructionTrace t = Prologue();
    t.instructions.push_back(MoveIn{0, SpAddr(0), 16, 16});
    t.instructions.push_back(MoveIn{0, SpAddr(16), 16, 16});
    t.instructions.push_back(Preload{SpAddr(0), AccAddr(0), 16, 16});
    t.instructions.push_back(Compute{SpAddr(0), std::nullopt, 16, 16, false});
    t.instructions.push_back(MoveIn{0, SpAddr(32), 16, 16});
    const auto rep = TimedExecute(t, cfg);
    CHECK(rep.bank_conflict_count >= 1);
  }

  TEST_CASE("identity multiply passes B plus D through") {
    const AcceleratorConfig cfg = Gemmini16L2();
    const Workload w{16, 16, 16};
    auto q = RandomProblem(w, 8);
    q.q_a = MatrixI8(16, 16, 0);
    for (int64_t i = 0; i < 16; ++i) q.q_a(i, i) = 1;
    q.zp_a = q.zp_c = 0;
    q.s_d = q.s_c = Rational(1);
    for (auto& v : q.q_d.data) v %= 100;
    ScheduleParams p;
    const auto prog = GenerateTrace(w, p, q, cfg);
    DramImage dram = BuildDramImage(prog.dram_layout, q);
    const auto c = FunctionalExecute(prog.trace, dram, cfg);
    for (int64_t i = 0; i < 16; ++i) {
      for (int64_t j = 0; j < 16; ++j) CHECK(c(i, j) == SaturateInt8(q.q_b(i, j) + q.q_d(i, j)));
    }
  }

  TEST_CASE("errors") {
    const AcceleratorConfig cfg = Gemmini16L2();
    DramImage dram;
    dram.layout = MakeDramLayout({1, 1, 1}, cfg);
    dram.bytes.assign(dram.layout.total_bytes, 0);
    InstructionTrace empty;
    empty.meta.workload = {1, 1, 1};
    try {
      FunctionalExecute(empty, dram, cfg);
      FAIL("expected an error");
    } catch (const SimulationError& e) {
      CHECK(e.kind() == SimErrorKind::kNoOutput);
    }

    InstructionTrace uninit = Prologue();
    uninit.meta.workload = {1, 1, 1};
    uninit.instructions.push_back(Preload{SpAddr(0), AccAddr(0), 16, 16});
    uninit.instructions.push_back(Compute{SpAddr(0), std::nullopt, 16, 16, false});
    try {
      FunctionalExecute(uninit, dram, cfg);
      FAIL("expected an error");
    } catch (const SimulationError& e) {
      CHECK(e.kind() == SimErrorKind::kUninitializedRead);
    }

    InstructionTrace oob = Prologue();
    oob.meta.workload = {1, 1, 1};
    oob.instructions.push_back(MoveIn{0, SpAddr(cfg.sp_rows()), 16, 16});
    try {
      TimedExecute(oob, dram, cfg);
      FAIL("expected an error");
    } catch (const SimulationError& e) {
      CHECK(e.kind() == SimErrorKind::kAddressOutOfRange);
    }

    CHECK_THROWS_AS(FunctionalExecute(empty, dram, cfg), Error);
    DramImage other = dram;
    other.layout = MakeDramLayout({2, 2, 2}, cfg);
    CHECK_THROWS_AS(FunctionalExecute(empty, other, cfg), ShapeMismatch);
  }

  TEST_CASE("timing agrees with functional execution and respects the bounds") {
    const AcceleratorConfig cfg = Gemmini16L2();
    const double peak = TheoreticalPeakGops(cfg);
    std::mt19937_64 rng(4);
    for (const Workload w : {Workload{64, 64, 64}, Workload{48, 16, 96}}) {
      const auto space = EnumerateValid(PadWorkload(w, cfg), cfg);
      const auto q = RandomProblem(w, 12);
      for (int i = 0; i < 25; ++i) {
        const auto& p = space[rng() % space.size()];
        INFO(ToString(p));
        const auto prog = GenerateTrace(w, p, q, cfg);
        DramImage d1 = BuildDramImage(prog.dram_layout, q);
        DramImage d2 = d1;
        const auto functional = FunctionalExecute(prog.trace, d1, cfg);
        SimOptions opts;
        opts.record_timeline = true;
        const auto rep = TimedExecute(prog.trace, d2, cfg, opts);
        CHECK(rep.output == functional);
        CHECK(d1.bytes == d2.bytes);
        CHECK(rep.gops <= peak);
        CHECK(rep.total_cycles == TimedExecute(prog.trace, cfg).total_cycles);
        for (Controller c : {Controller::kLoad, Controller::kExecute, Controller::kStore}) {
          std::vector<std::pair<int64_t, int64_t>> iv;
          for (const auto& e : rep.timeline) {
            if (e.controller == c) iv.emplace_back(e.start, e.finish);
          }
          CHECK(UnionLength(iv) == rep.busy_cycles[static_cast<size_t>(c)]);
          CHECK(rep.busy_cycles[static_cast<size_t>(c)] + rep.idle_cycles(c) == rep.total_cycles);
          CHECK(rep.idle_cycles(c) >= 0);
        }
      }
    }
  }

  TEST_CASE("more DMA bandwidth never slows a program") {
    const Workload w{128, 64, 128};
    const AcceleratorConfig base = Gemmini16NoL2();
    const auto space = EnumerateValid(w, base);
    for (size_t i = 0; i < space.size(); i += space.size() / 12) {
      int64_t prev = INT64_MAX;
      for (double bw : {2.0, 4.0, 8.0, 16.0}) {
        AcceleratorConfig cfg = base;
        cfg.timing.dma_bytes_per_cycle = bw;
        const auto t = GenerateTrace(w, space[i], Rational(1), cfg).trace;
        const int64_t cycles = TimedExecute(t, cfg).total_cycles;
        CHECK(cycles <= prev);
        prev = cycles;
      }
    }
  }

  TEST_CASE("double buffering does not add execute stalls on loads") {
    const Workload w{64, 64, 128};
    const AcceleratorConfig cfg = Gemmini16NoL2();
    for (const auto& p : EnumerateValid(w, cfg)) {
      if (p.apply_double_buffer != DoubleBuffer::kNone || CountTiles(p, w).k < 2) continue;
      const int64_t plain = TimedExecute(GenerateTrace(w, p, Rational(1), cfg).trace, cfg).exec_wait_on_load_cycles;
      for (DoubleBuffer db : {DoubleBuffer::kAOnly, DoubleBuffer::kBOnly, DoubleBuffer::kBoth}) {
        auto twin = p;
        twin.apply_double_buffer = db;
        if (!IsValid(twin, w, cfg)) continue;
        INFO(ToString(twin));
        CHECK(TimedExecute(GenerateTrace(w, twin, Rational(1), cfg).trace, cfg).exec_wait_on_load_cycles <= plain);
      }
    }
  }

  TEST_CASE("load balancing only constrains issue") {
    const AcceleratorConfig cfg = Gemmini16L2();
    for (const Workload w : {Workload{128, 128, 128}, Workload{64, 16, 1216}, Workload{256, 256, 256}}) {
      const auto prog = GenerateCiscBaseline(w, Rational(1), cfg);
      InstructionTrace untagged = prog.trace;
      untagged.meta.generator = "tuned";
      CHECK(TimedExecute(prog.trace, cfg).total_cycles >= TimedExecute(untagged, cfg).total_cycles);
    }
  }

  TEST_CASE("report serialization") {
    const AcceleratorConfig cfg = Gemmini16L2();
    const auto prog = GenerateTrace({16, 16, 16}, ScheduleParams{}, Rational(1), cfg);
    const auto rep = TimedExecute(prog.trace, cfg, true);
    const std::string json = ReportToJson(rep, cfg);
    CHECK(json.find("\"total_cycles\"") != std::string::npos);
    const std::string csv = TimelineToCsv(rep);
    CHECK(csv.rfind("index,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(prog.trace.instructions.size()) + 1);
  }
}
