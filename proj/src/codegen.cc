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

#include "gemmtune/codegen.h"

#include <cstring>
#include <optional>

namespace gemmtune {

DramLayout MakeDramLayout(const Workload& logical, const AcceleratorConfig& cfg) {
  DramLayout l;
  l.logical = logical;
  l.padded = PadWorkload(logical, cfg);
  const Workload& p = l.padded;
  const int64_t in_pitch = std::max(p.k * cfg.input_bytes(),
                                    std::max(p.n * cfg.input_bytes(), p.n * cfg.acc_bytes()));
  uint64_t cursor = 0;
  auto place = [&cursor](DramRegion* r, int64_t rows, int64_t cols, int64_t pitch, int64_t elem) {
    *r = {cursor, rows, cols, pitch, elem};
    cursor += static_cast<uint64_t>(rows * pitch);
  };
  place(&l.a, p.m, p.k, in_pitch, cfg.input_bytes());
  place(&l.b, p.k, p.n, in_pitch, cfg.input_bytes());
  place(&l.d, p.m, p.n, in_pitch, cfg.acc_bytes());
  place(&l.c, p.m, p.n, p.n * cfg.input_bytes(), cfg.input_bytes());
  l.total_bytes = cursor;
  return l;
}

InstructionCounts CountInstructions(const InstructionTrace& trace) {
  InstructionCounts counts{};
  for (const auto& inst : trace.instructions) ++counts[static_cast<size_t>(inst.index())];
  return counts;
}

namespace {

struct TileCoord {
  int64_t i;
  int64_t j;
};

struct Step {
  int64_t tile;  // index into the output-tile order
  int64_t k;
};

std::vector<TileCoord> OutputTileOrder(const ScheduleParams& p, const TileCounts& tc) {
  std::vector<TileCoord> order;
  order.reserve(static_cast<size_t>(tc.m * tc.n));
  if (p.exchange_axis) {
    for (int64_t j = 0; j < tc.n; ++j)
      for (int64_t i = 0; i < tc.m; ++i) order.push_back({i, j});
  } else {
    for (int64_t i = 0; i < tc.m; ++i)
      for (int64_t j = 0; j < tc.n; ++j) order.push_back({i, j});
  }
  return order;
}

/*! \brief Per-step buffer copy and whether a move-in is needed, for one operand. */
struct OperandPlan {
  std::vector<int> copy;
  std::vector<bool> load;
};

template <typename TileId>
OperandPlan PlanOperand(const std::vector<Step>& steps, bool double_buffered, TileId tile_id) {
  OperandPlan plan;
  plan.copy.resize(steps.size());
  plan.load.resize(steps.size());
  std::optional<std::pair<int64_t, int64_t>> prev;
  int prev_copy = 1;
  for (size_t s = 0; s < steps.size(); ++s) {
    auto id = tile_id(steps[s]);
    if (prev && *prev == id) {
      plan.copy[s] = prev_copy;
      plan.load[s] = false;
    } else {
      plan.copy[s] = double_buffered ? 1 - prev_copy : 0;
      plan.load[s] = true;
    }
    prev = id;
    prev_copy = plan.copy[s];
  }
  return plan;
}

class TraceBuilder {
 public:
  TraceBuilder(const Workload& w, const ScheduleParams& p, const Rational& out_scale,
               const AcceleratorConfig& cfg, const CodegenOptions& opts, std::string generator)
      : p_(p), cfg_(cfg), opts_(opts), out_scale_(out_scale) {
    prog_.params = p;
    prog_.dram_layout = MakeDramLayout(w, cfg);
    padded_ = prog_.dram_layout.padded;
    Validity v = IsValid(p, padded_, cfg);
    if (!v) {
      throw InvalidSchedule(std::string("schedule ") + ToString(p) + " invalid for " + ToString(padded_) +
                            ": " + ToString(v.reason()));
    }
    fp_ = ComputeScratchpadFootprint(p, cfg);
    tc_ = CountTiles(p, padded_);
    slot_rows_ = PatchRowSpan(p.tile_m1, p.tile_n1, cfg.dim);
    prog_.trace.meta = {w, ScheduleHash(p), std::move(generator)};
    prog_.expected_moves = ExpectedInstructionCounts(w, p, cfg, opts);
  }

  LoweredProgram Build() {
    const auto tiles = OutputTileOrder(p_, tc_);
    std::vector<Step> steps;
    steps.reserve(tiles.size() * static_cast<size_t>(tc_.k));
    for (size_t u = 0; u < tiles.size(); ++u)
      for (int64_t k = 0; k < tc_.k; ++k) steps.push_back({static_cast<int64_t>(u), k});
    int64_t total = 0;
    for (int64_t c : prog_.expected_moves) total += c;
    prog_.trace.instructions.reserve(static_cast<size_t>(total));

    const OperandPlan a_plan = PlanOperand(steps, p_.double_buffer_a(), [&](const Step& s) {
      return std::make_pair(tiles[static_cast<size_t>(s.tile)].i, s.k);
    });
    const OperandPlan b_plan = PlanOperand(steps, p_.double_buffer_b(), [&](const Step& s) {
      return std::make_pair(s.k, tiles[static_cast<size_t>(s.tile)].j);
    });

    EmitConfig();
    const int64_t par = p_.parallel_accumulations;
    for (size_t s = 0; s < steps.size(); ++s) {
      const Step& st = steps[s];
      const TileCoord& tile = tiles[static_cast<size_t>(st.tile)];
      if (st.k == 0) {
        if (opts_.naive_config && st.tile > 0) EmitConfig();
        EmitMoveInD(tile, SlotBase(st.tile));
      }
      if ((!p_.double_buffer_a() || s == 0) && a_plan.load[s]) EmitMoveInA(tiles, steps[s], a_plan.copy[s]);
      if ((!p_.double_buffer_b() || s == 0) && b_plan.load[s]) EmitMoveInB(tiles, steps[s], b_plan.copy[s]);
      if (s + 1 < steps.size()) {
        if (p_.double_buffer_a() && a_plan.load[s + 1]) EmitMoveInA(tiles, steps[s + 1], a_plan.copy[s + 1]);
        if (p_.double_buffer_b() && b_plan.load[s + 1]) EmitMoveInB(tiles, steps[s + 1], b_plan.copy[s + 1]);
      }
      EmitComputeBlock(SlotBase(st.tile), a_plan.copy[s], b_plan.copy[s]);
      if (st.k == tc_.k - 1) {
        const bool last_tile = st.tile + 1 == static_cast<int64_t>(tiles.size());
        if (par == 1 || st.tile % par == par - 1 || last_tile) {
          for (int64_t u = st.tile - st.tile % par; u <= st.tile; ++u) {
            EmitMoveOut(tiles[static_cast<size_t>(u)], SlotBase(u));
          }
        }
      }
    }
    Emit(Fence{});
    return std::move(prog_);
  }

 private:
  void Emit(Instruction inst) { prog_.trace.instructions.push_back(std::move(inst)); }

  void EmitConfig() {
    Emit(ConfigEx{p_.dataflow, Rational(1)});
    Emit(ConfigMv{MoveDirection::kIn, prog_.dram_layout.a.pitch_bytes, Rational(1)});
    Emit(ConfigMv{MoveDirection::kOut, prog_.dram_layout.c.pitch_bytes, out_scale_});
  }

  int64_t SlotBase(int64_t tile_index) const { return (tile_index % p_.parallel_accumulations) * slot_rows_; }

  void EmitMoveInD(const TileCoord& t, int64_t slot) {
    const auto& d = prog_.dram_layout.d;
    Emit(MoveIn{d.Addr(t.i * p_.tile_m1, t.j * p_.tile_n1), AccAddr(slot), p_.tile_m1, p_.tile_n1});
  }

  void EmitMoveInA(const std::vector<TileCoord>& tiles, const Step& s, int copy) {
    const auto& a = prog_.dram_layout.a;
    const auto& t = tiles[static_cast<size_t>(s.tile)];
    Emit(MoveIn{a.Addr(t.i * p_.tile_m1, s.k * p_.tile_k1), SpAddr(fp_.Buffer(Operand::kA, copy).start_row),
                p_.tile_m1, p_.tile_k1});
  }

  void EmitMoveInB(const std::vector<TileCoord>& tiles, const Step& s, int copy) {
    const auto& b = prog_.dram_layout.b;
    const auto& t = tiles[static_cast<size_t>(s.tile)];
    Emit(MoveIn{b.Addr(s.k * p_.tile_k1, t.j * p_.tile_n1), SpAddr(fp_.Buffer(Operand::kB, copy).start_row),
                p_.tile_k1, p_.tile_n1});
  }

  void EmitComputeBlock(int64_t slot, int a_copy, int b_copy) {
    const int64_t dim = cfg_.dim;
    const int64_t a_base = fp_.Buffer(Operand::kA, a_copy).start_row;
    const int64_t b_base = fp_.Buffer(Operand::kB, b_copy).start_row;
    for (int64_t ii = 0; ii < p_.tile_m1 / p_.tile_m2; ++ii) {
      for (int64_t ji = 0; ji < p_.tile_n1 / p_.tile_n2; ++ji) {
        for (int64_t ki = 0; ki < p_.tile_k1 / p_.tile_k2; ++ki) {
          Emit(Preload{SpAddr(b_base + ji * p_.tile_k1 + ki * dim), AccAddr(slot + ji * p_.tile_m1 + ii * dim),
                       dim, dim});
          Emit(Compute{SpAddr(a_base + ki * p_.tile_m1 + ii * dim), std::nullopt, dim, dim, true});
        }
      }
    }
  }

  void EmitMoveOut(const TileCoord& t, int64_t slot) {
    const auto& c = prog_.dram_layout.c;
    const int64_t dim = cfg_.dim;
    if (p_.mvout_big_block) {
      Emit(MoveOut{c.Addr(t.i * p_.tile_m1, t.j * p_.tile_n1), AccAddr(slot), p_.tile_m1, p_.tile_n1});
      return;
    }
    for (int64_t ii = 0; ii < p_.tile_m1 / dim; ++ii) {
      for (int64_t ji = 0; ji < p_.tile_n1 / dim; ++ji) {
        Emit(MoveOut{c.Addr(t.i * p_.tile_m1 + ii * dim, t.j * p_.tile_n1 + ji * dim),
                     AccAddr(slot + ji * p_.tile_m1 + ii * dim), dim, dim});
      }
    }
  }

  const ScheduleParams& p_;
  const AcceleratorConfig& cfg_;
  const CodegenOptions& opts_;
  Rational out_scale_;
  LoweredProgram prog_;
  Workload padded_;
  ScratchpadFootprint fp_;
  TileCounts tc_{};
  int64_t slot_rows_{0};
};

LoweredProgram Lower(const Workload& w, const ScheduleParams& p, const Rational& out_scale,
                     const AcceleratorConfig& cfg, const CodegenOptions& opts, std::string generator) {
  ValidateConfig(cfg);
  if (w.m < 1 || w.n < 1 || w.k < 1) throw ShapeMismatch("empty workload " + ToString(w));
  return TraceBuilder(w, p, out_scale, cfg, opts, std::move(generator)).Build();
}

void CheckProblemShape(const Workload& w, const QuantizedGemmProblem& q) {
  q.Check();
  if (!(q.workload() == w)) {
    throw ShapeMismatch("problem is " + ToString(q.workload()) + ", workload is " + ToString(w));
  }
}

}  // namespace

InstructionCounts ExpectedInstructionCounts(const Workload& w, const ScheduleParams& p,
                                            const AcceleratorConfig& cfg, const CodegenOptions& opts) {
  const Workload padded = PadWorkload(w, cfg);
  const TileCounts tc = CountTiles(p, padded);
  const int64_t tiles = tc.m * tc.n;
  const int64_t steps = tiles * tc.k;
  // A' is invariant along the inner output axis only when K is a single tile, likewise B'.
  int64_t a_loads, b_loads;
  if (!p.exchange_axis) {
    a_loads = tc.k == 1 ? tc.m : steps;
    b_loads = (tc.k == 1 && tc.n == 1) ? 1 : steps;
  } else {
    b_loads = tc.k == 1 ? tc.n : steps;
    a_loads = (tc.k == 1 && tc.m == 1) ? 1 : steps;
  }
  const int64_t configs = opts.naive_config ? tiles : 1;
  const int64_t blocks = (padded.m / cfg.dim) * (padded.n / cfg.dim) * (padded.k / cfg.dim);
  InstructionCounts c{};
  c[static_cast<size_t>(InstrKind::kConfigEx)] = configs;
  c[static_cast<size_t>(InstrKind::kConfigMv)] = 2 * configs;
  c[static_cast<size_t>(InstrKind::kMoveIn)] = tiles + a_loads + b_loads;
  c[static_cast<size_t>(InstrKind::kMoveOut)] =
      p.mvout_big_block ? tiles : tiles * (p.tile_m1 / cfg.dim) * (p.tile_n1 / cfg.dim);
  c[static_cast<size_t>(InstrKind::kPreload)] = blocks;
  c[static_cast<size_t>(InstrKind::kCompute)] = blocks;
  c[static_cast<size_t>(InstrKind::kFence)] = 1;
  c[static_cast<size_t>(InstrKind::kFlush)] = 0;
  return c;
}

LoweredProgram GenerateTrace(const Workload& w, const ScheduleParams& p, const QuantizedGemmProblem& q,
                             const AcceleratorConfig& cfg, const CodegenOptions& opts) {
  CheckProblemShape(w, q);
  return Lower(w, p, q.requant_scale(), cfg, opts, "tuned");
}

LoweredProgram GenerateTrace(const Workload& w, const ScheduleParams& p, const Rational& out_scale,
                             const AcceleratorConfig& cfg, const CodegenOptions& opts) {
  return Lower(w, p, out_scale, cfg, opts, "tuned");
}

ScheduleParams CiscBaselineParams(const Workload& w, const AcceleratorConfig& cfg) {
  ValidateConfig(cfg);
  const Workload padded = PadWorkload(w, cfg);
  int64_t t = cfg.dim;
  auto fits = [&](int64_t s) {
    return 2 * s * s * cfg.input_bytes() <= cfg.scratchpad_bytes() / 2 &&
           s * s * cfg.acc_bytes() <= cfg.accumulator_bytes() && s <= cfg.max_mv_rows &&
           s <= cfg.max_mv_cols;
  };
  while (fits(2 * t)) t *= 2;

  auto clip = [&](int64_t extent, int64_t limit) {
    int64_t best = cfg.dim;
    for (int64_t c : TileCandidates(extent, cfg)) {
      if (c <= limit) best = c;
    }
    return best;
  };
  ScheduleParams p;
  p.tile_m2 = p.tile_n2 = p.tile_k2 = cfg.dim;
  p.apply_double_buffer = DoubleBuffer::kBoth;
  p.dataflow = cfg.supports_ws ? Dataflow::kWS : Dataflow::kOS;
  for (; t >= cfg.dim; t /= 2) {
    p.tile_m1 = clip(padded.m, t);
    p.tile_n1 = clip(padded.n, t);
    p.tile_k1 = clip(padded.k, t);
    p.parallel_accumulations = ParallelCandidates(p.tile_m1, p.tile_n1, padded, cfg).back();
    if (IsValid(p, padded, cfg)) return p;
  }
  throw EmptySpace("no baseline tiling for " + ToString(w));
}

LoweredProgram GenerateCiscBaseline(const Workload& w, const QuantizedGemmProblem& q,
                                    const AcceleratorConfig& cfg) {
  CheckProblemShape(w, q);
  return GenerateCiscBaseline(w, q.requant_scale(), cfg);
}

LoweredProgram GenerateCiscBaseline(const Workload& w, const Rational& out_scale,
                                    const AcceleratorConfig& cfg) {
  return Lower(w, CiscBaselineParams(w, cfg), out_scale, cfg, {}, "cisc-baseline");
}

DramImage BuildDramImage(const DramLayout& layout, const QuantizedGemmProblem& q) {
  q.Check();
  if (!(q.workload() == layout.logical)) throw ShapeMismatch("problem does not match DRAM layout");
  DramImage img;
  img.layout = layout;
  img.bytes.assign(layout.total_bytes, 0);
  for (int64_t r = 0; r < q.q_a.rows; ++r) {
    for (int64_t c = 0; c < q.q_a.cols; ++c) {
      img.bytes[layout.a.Addr(r, c)] = static_cast<uint8_t>(q.q_a(r, c));
    }
  }
  for (int64_t r = 0; r < q.q_b.rows; ++r) {
    for (int64_t c = 0; c < q.q_b.cols; ++c) {
      img.bytes[layout.b.Addr(r, c)] = static_cast<uint8_t>(q.q_b(r, c));
    }
  }
  const MatrixI32 folded = FoldCorrectedBias(q);
  for (int64_t r = 0; r < folded.rows; ++r) {
    for (int64_t c = 0; c < folded.cols; ++c) {
      int32_t v = folded(r, c);
      std::memcpy(&img.bytes[layout.d.Addr(r, c)], &v, sizeof(v));
    }
  }
  return img;
}

}  // namespace gemmtune
