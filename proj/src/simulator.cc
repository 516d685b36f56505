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

#include "gemmtune/simulator.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <limits>
#include <optional>
#include <sstream>

#include <json.hpp>

namespace gemmtune {

const char* ToString(Controller c) {
  switch (c) {
    case Controller::kLoad:
      return "load";
    case Controller::kExecute:
      return "execute";
    case Controller::kStore:
      return "store";
    case Controller::kNone:
      return "none";
  }
  return "?";
}

const char* ToString(SimErrorKind k) {
  switch (k) {
    case SimErrorKind::kUninitializedRead:
      return "UninitializedRead";
    case SimErrorKind::kAddressOutOfRange:
      return "AddressOutOfRange";
    case SimErrorKind::kDeadlock:
      return "Deadlock";
    case SimErrorKind::kNoOutput:
      return "NoOutput";
    case SimErrorKind::kIllegal:
      return "Illegal";
  }
  return "?";
}

Controller ControllerOf(const Instruction& inst) {
  switch (KindOf(inst)) {
    case InstrKind::kConfigMv:
      return std::get<ConfigMv>(inst).direction == MoveDirection::kIn ? Controller::kLoad
                                                                       : Controller::kStore;
    case InstrKind::kMoveIn:
      return Controller::kLoad;
    case InstrKind::kMoveOut:
      return Controller::kStore;
    case InstrKind::kConfigEx:
    case InstrKind::kPreload:
    case InstrKind::kCompute:
      return Controller::kExecute;
    case InstrKind::kFence:
    case InstrKind::kFlush:
      return Controller::kNone;
  }
  return Controller::kNone;
}

int64_t CountOps(const Workload& w) { return 2 * w.m * w.n * w.k + w.m * w.n; }

double GopsFor(const Workload& w, int64_t cycles, const AcceleratorConfig& cfg) {
  if (cycles <= 0) return 0.0;
  return static_cast<double>(CountOps(w)) / (static_cast<double>(cycles) / cfg.timing.clock_hz) / 1e9;
}

namespace {

int64_t MoveCost(int64_t bytes, const AcceleratorConfig& cfg) {
  return cfg.timing.dma_latency_cycles +
         static_cast<int64_t>(std::ceil(static_cast<double>(bytes) / cfg.timing.dma_bytes_per_cycle));
}

/*! \brief Architectural state: scratchpad, accumulator, pipeline configuration. */
class Machine {
 public:
  Machine(const AcceleratorConfig& cfg, DramImage* dram)
      : cfg_(cfg),
        dram_(dram),
        dim_(cfg.dim),
        sp_(static_cast<size_t>(cfg.sp_rows() * cfg.dim), 0),
        sp_init_(static_cast<size_t>(cfg.sp_rows()), 0),
        acc_(static_cast<size_t>(cfg.acc_rows() * cfg.dim), 0),
        acc_init_(static_cast<size_t>(cfg.acc_rows()), 0) {}

  void Apply(size_t idx, const Instruction& inst) {
    idx_ = idx;
    std::visit([this](const auto& i) { Do(i); }, inst);
  }

  bool wrote_output() const { return wrote_output_; }

 private:
  [[noreturn]] void Fail(SimErrorKind kind, const std::string& what) const {
    throw SimulationError(kind, std::string(ToString(kind)) + " at instruction " + std::to_string(idx_) +
                                    ": " + what);
  }

  void CheckRows(const LocalAddr& a, int64_t span) const {
    int64_t limit = a.accumulator ? cfg_.acc_rows() : cfg_.sp_rows();
    if (a.row < 0 || a.row + span > limit) Fail(SimErrorKind::kAddressOutOfRange, "local rows");
  }

  void CheckInit(const LocalAddr& a, int64_t row) const {
    const auto& init = a.accumulator ? acc_init_ : sp_init_;
    if (!init[static_cast<size_t>(row)]) {
      Fail(SimErrorKind::kUninitializedRead,
           std::string(a.accumulator ? "acc" : "sp") + " row " + std::to_string(row));
    }
  }

  void CheckDram(uint64_t addr, int64_t bytes) const {
    if (addr + static_cast<uint64_t>(bytes) > dram_->bytes.size()) {
      Fail(SimErrorKind::kAddressOutOfRange, "dram address " + std::to_string(addr));
    }
  }

  // Local element (row, col) of a patch stored as column blocks of `rows` rows.
  int64_t PatchRow(const LocalAddr& base, int64_t rows, int64_t r, int64_t c) const {
    return base.row + (c / dim_) * rows + r;
  }

  void Do(const ConfigEx& c) { ex_ = c; }
  void Do(const ConfigMv& c) {
    if (c.direction == MoveDirection::kIn) {
      mv_in_ = c;
    } else {
      mv_out_ = c;
    }
  }

  void Do(const MoveIn& m) {
    if (!mv_in_) Fail(SimErrorKind::kIllegal, "move-in before its configuration");
    CheckRows(m.dst, PatchRowSpan(m.rows, m.cols, dim_));
    const int64_t elem = m.dst.accumulator ? cfg_.acc_bytes() : cfg_.input_bytes();
    const int64_t stride = mv_in_->stride_bytes;
    const Rational& scale = mv_in_->scale;
    // Zero the touched rows first so partial column blocks are defined.
    for (int64_t b = 0; b < (m.cols + dim_ - 1) / dim_; ++b) {
      for (int64_t r = 0; r < m.rows; ++r) {
        int64_t row = m.dst.row + b * m.rows + r;
        if (m.dst.accumulator) {
          std::fill_n(&acc_[static_cast<size_t>(row * dim_)], dim_, 0);
          acc_init_[static_cast<size_t>(row)] = 1;
        } else {
          std::fill_n(&sp_[static_cast<size_t>(row * dim_)], dim_, 0);
          sp_init_[static_cast<size_t>(row)] = 1;
        }
      }
    }
    for (int64_t r = 0; r < m.rows; ++r) {
      const uint64_t line = m.dram_addr + static_cast<uint64_t>(r * stride);
      CheckDram(line, m.cols * elem);
      for (int64_t c = 0; c < m.cols; ++c) {
        const int64_t row = PatchRow(m.dst, m.rows, r, c);
        const size_t at = static_cast<size_t>(row * dim_ + c % dim_);
        const uint8_t* src = &dram_->bytes[line + static_cast<uint64_t>(c * elem)];
        if (m.dst.accumulator) {
          int32_t v;
          std::memcpy(&v, src, sizeof(v));
          acc_[at] = scale.IsOne() ? v : SaturateInt32(scale.ScaleRound(v));
        } else {
          auto v = static_cast<int8_t>(*src);
          sp_[at] = scale.IsOne() ? v : SaturateInt8(scale.ScaleRound(v));
        }
      }
    }
  }

  void Do(const MoveOut& m) {
    if (!mv_out_) Fail(SimErrorKind::kIllegal, "move-out before its configuration");
    if (!m.src.accumulator) Fail(SimErrorKind::kIllegal, "move-out from scratchpad");
    CheckRows(m.src, PatchRowSpan(m.rows, m.cols, dim_));
    const Rational& scale = mv_out_->scale;
    for (int64_t r = 0; r < m.rows; ++r) {
      const uint64_t line = m.dram_addr + static_cast<uint64_t>(r * mv_out_->stride_bytes);
      CheckDram(line, m.cols);
      for (int64_t c = 0; c < m.cols; ++c) {
        const int64_t row = PatchRow(m.src, m.rows, r, c);
        CheckInit(m.src, row);
        int32_t v = acc_[static_cast<size_t>(row * dim_ + c % dim_)];
        dram_->bytes[line + static_cast<uint64_t>(c)] = static_cast<uint8_t>(SaturateInt8(scale.ScaleRound(v)));
      }
    }
    wrote_output_ = true;
  }

  void Do(const Preload& p) {
    if (!ex_) Fail(SimErrorKind::kIllegal, "preload before execution configuration");
    CheckRows(p.b, p.rows);
    CheckRows(p.c, 1);
    preload_ = p;
  }

  void Do(const Compute& c) {
    if (!ex_ || !preload_) Fail(SimErrorKind::kIllegal, "compute without configuration or preload");
    const Preload& p = *preload_;
    CheckRows(c.a, c.rows);
    CheckRows(p.c, c.rows);
    if (c.d) CheckRows(*c.d, c.rows);
    for (int64_t k = 0; k < c.cols; ++k) CheckInit(p.b, p.b.row + k);
    for (int64_t i = 0; i < c.rows; ++i) {
      CheckInit(c.a, c.a.row + i);
      if (c.d) CheckInit(*c.d, c.d->row + i);
      if (c.accumulate) CheckInit(p.c, p.c.row + i);
    }
    const Rational& scale = ex_->out_scale;
    for (int64_t i = 0; i < c.rows; ++i) {
      const int8_t* a_row = &sp_[static_cast<size_t>((c.a.row + i) * dim_)];
      int32_t* c_row = &acc_[static_cast<size_t>((p.c.row + i) * dim_)];
      for (int64_t j = 0; j < p.cols; ++j) {
        int64_t s = 0;
        for (int64_t k = 0; k < c.cols; ++k) {
          s += static_cast<int64_t>(a_row[k]) * sp_[static_cast<size_t>((p.b.row + k) * dim_ + j)];
        }
        if (!scale.IsOne()) s = scale.ScaleRound(s);
        if (c.d) {
          const size_t at = static_cast<size_t>((c.d->row + i) * dim_ + j);
          s += c.d->accumulator ? acc_[at] : sp_[at];
        }
        c_row[j] = SaturateInt32(c.accumulate ? s + c_row[j] : s);
      }
      acc_init_[static_cast<size_t>(p.c.row + i)] = 1;
    }
  }

  void Do(const Fence&) {}
  void Do(const Flush&) {}

  const AcceleratorConfig& cfg_;
  DramImage* dram_;
  int64_t dim_;
  std::vector<int8_t> sp_;
  std::vector<uint8_t> sp_init_;
  std::vector<int32_t> acc_;
  std::vector<uint8_t> acc_init_;
  std::optional<ConfigEx> ex_;
  std::optional<ConfigMv> mv_in_;
  std::optional<ConfigMv> mv_out_;
  std::optional<Preload> preload_;
  size_t idx_{0};
  bool wrote_output_{false};
};

MatrixI8 ReadOutput(const DramImage& dram) {
  const DramLayout& l = dram.layout;
  MatrixI8 out(l.logical.m, l.logical.n);
  for (int64_t r = 0; r < l.logical.m; ++r) {
    for (int64_t c = 0; c < l.logical.n; ++c) out(r, c) = static_cast<int8_t>(dram.bytes[l.c.Addr(r, c)]);
  }
  return out;
}

enum Space : uint8_t { kSp = 0, kAcc = 1, kCfg = 2 };

struct Access {
  uint8_t space;
  bool write;
  int64_t lo;
  int64_t hi;  // exclusive
};

struct AccessSet {
  std::array<Access, 6> items;
  int n{0};
  // Per-space hull of all accesses and of writes only, for a cheap disjointness test.
  std::array<std::pair<int64_t, int64_t>, 3> any_hull;
  std::array<std::pair<int64_t, int64_t>, 3> write_hull;

  void Clear() {
    n = 0;
    any_hull.fill({std::numeric_limits<int64_t>::max(), std::numeric_limits<int64_t>::min()});
    write_hull = any_hull;
  }
  void Add(uint8_t space, int64_t lo, int64_t hi, bool write) {
    items[static_cast<size_t>(n++)] = {space, write, lo, hi};
    Widen(&any_hull[space], lo, hi);
    if (write) Widen(&write_hull[space], lo, hi);
  }
  static void Widen(std::pair<int64_t, int64_t>* h, int64_t lo, int64_t hi) {
    h->first = std::min(h->first, lo);
    h->second = std::max(h->second, hi);
  }
  void Add(const LocalAddr& a, int64_t span, bool write) {
    Add(a.accumulator ? kAcc : kSp, a.row, a.row + span, write);
  }
};

bool HullsMeet(const std::pair<int64_t, int64_t>& x, const std::pair<int64_t, int64_t>& y) {
  return x.first < y.second && y.first < x.second;
}

bool Conflicts(const AccessSet& older, const AccessSet& newer) {
  bool maybe = false;
  for (size_t sp = 0; sp < 3 && !maybe; ++sp) {
    maybe = HullsMeet(older.write_hull[sp], newer.any_hull[sp]) || HullsMeet(older.any_hull[sp], newer.write_hull[sp]);
  }
  if (!maybe) return false;
  for (int i = 0; i < older.n; ++i) {
    const Access& x = older.items[static_cast<size_t>(i)];
    for (int j = 0; j < newer.n; ++j) {
      const Access& y = newer.items[static_cast<size_t>(j)];
      if (x.space == y.space && (x.write || y.write) && x.lo < y.hi && y.lo < x.hi) return true;
    }
  }
  return false;
}

struct Slot {
  size_t idx{0};
  Controller ctrl{Controller::kNone};
  AccessSet accesses;
  std::vector<std::pair<size_t, Controller>> deps;
  int64_t cost{0};
  uint64_t sp_read_banks{0};
  uint64_t sp_write_banks{0};
  int64_t enter{0};
  int64_t start{0};
  int64_t finish{0};
};

class TimingEngine {
 public:
  TimingEngine(const InstructionTrace& trace, const AcceleratorConfig& cfg, Machine* machine, bool timeline)
      : trace_(trace),
        cfg_(cfg),
        machine_(machine),
        n_(trace.instructions.size()),
        rob_cap_(static_cast<size_t>(cfg.rob_entries)),
        slots_(rob_cap_),
        done_(n_, 0),
        sp_writer_(static_cast<size_t>(cfg.sp_rows()), -1),
        acc_writer_(static_cast<size_t>(cfg.acc_rows()), -1),
        balance_(trace.is_cisc_baseline()),
        balance_limit_(cfg.timing.balance_threshold * static_cast<double>(cfg.rob_entries)) {
    for (size_t i = 0; i < rob_cap_; ++i) free_.push_back(rob_cap_ - 1 - i);
    if (timeline) report_.timeline.resize(n_);
    record_timeline_ = timeline;
  }

  SimReport Run() {
    while (retired_ < n_) {
      bool progress = Enter();
      progress = Issue() || progress;
      int64_t next = std::numeric_limits<int64_t>::max();
      for (const auto& r : running_) {
        if (r) next = std::min(next, slots_[*r].finish);
      }
      if (next == std::numeric_limits<int64_t>::max()) {
        if (!progress) {
          throw SimulationError(SimErrorKind::kDeadlock,
                                "Deadlock: no instruction can issue at cycle " + std::to_string(now_));
        }
        continue;
      }
      AccountStalls(next - now_);
      now_ = next;
      for (size_t c = 0; c < 3; ++c) {
        if (running_[c] && slots_[*running_[c]].finish == now_) {
          Retire(*running_[c]);
          running_[c].reset();
        }
      }
    }
    report_.total_cycles = now_;
    report_.workload = trace_.meta.workload;
    report_.gops = GopsFor(trace_.meta.workload, now_, cfg_);
    return std::move(report_);
  }

 private:
  uint64_t BankMask(int64_t lo, int64_t hi) const {
    if (hi <= lo) return 0;
    int64_t first = lo / cfg_.sp_bank_rows, last = (hi - 1) / cfg_.sp_bank_rows;
    if (last >= 64) return ~uint64_t{0};
    uint64_t mask = 0;
    for (int64_t b = first; b <= last; ++b) mask |= uint64_t{1} << b;
    return mask;
  }

  static int64_t MaxWriter(const std::vector<int64_t>& writers, int64_t lo, int64_t hi) {
    int64_t v = -1;
    lo = std::max<int64_t>(lo, 0);
    hi = std::min<int64_t>(hi, static_cast<int64_t>(writers.size()));
    for (int64_t r = lo; r < hi; ++r) v = std::max(v, writers[static_cast<size_t>(r)]);
    return v;
  }

  void Describe(size_t idx, Slot* s) {
    const Instruction& inst = trace_.instructions[idx];
    const int64_t dim = cfg_.dim;
    s->accesses.Clear();
    s->sp_read_banks = s->sp_write_banks = 0;
    s->ctrl = ControllerOf(inst);
    switch (KindOf(inst)) {
      case InstrKind::kConfigEx:
        s->accesses.Add(kCfg, 0, 1, true);
        s->cost = cfg_.timing.config_cycles;
        stationary_.reset();
        break;
      case InstrKind::kConfigMv: {
        const auto& c = std::get<ConfigMv>(inst);
        int64_t row = c.direction == MoveDirection::kIn ? 1 : 2;
        s->accesses.Add(kCfg, row, row + 1, true);
        s->cost = cfg_.timing.config_cycles;
        break;
      }
      case InstrKind::kMoveIn: {
        const auto& m = std::get<MoveIn>(inst);
        const int64_t span = PatchRowSpan(m.rows, m.cols, dim);
        s->accesses.Add(kCfg, 1, 2, false);
        s->accesses.Add(m.dst, span, true);
        const int64_t elem = m.dst.accumulator ? cfg_.acc_bytes() : cfg_.input_bytes();
        s->cost = MoveCost(m.rows * m.cols * elem, cfg_);
        auto& writers = m.dst.accumulator ? acc_writer_ : sp_writer_;
        for (int64_t r = std::max<int64_t>(m.dst.row, 0);
             r < std::min<int64_t>(m.dst.row + span, static_cast<int64_t>(writers.size())); ++r) {
          writers[static_cast<size_t>(r)] = static_cast<int64_t>(idx);
        }
        if (!m.dst.accumulator) s->sp_write_banks = BankMask(m.dst.row, m.dst.row + span);
        break;
      }
      case InstrKind::kMoveOut: {
        const auto& m = std::get<MoveOut>(inst);
        s->accesses.Add(kCfg, 2, 3, false);
        s->accesses.Add(m.src, PatchRowSpan(m.rows, m.cols, dim), false);
        s->cost = MoveCost(m.rows * m.cols * cfg_.input_bytes(), cfg_);
        break;
      }
      case InstrKind::kPreload: {
        const auto& p = std::get<Preload>(inst);
        s->accesses.Add(kCfg, 0, 1, false);
        s->accesses.Add(p.b, p.rows, false);
        if (!p.b.accumulator) s->sp_read_banks = BankMask(p.b.row, p.b.row + p.rows);
        // Which operand stays pinned in the array decides whether this preload refills it.
        std::pair<int64_t, int64_t> key;
        if (exec_dataflow_ == Dataflow::kWS) {
          key = {p.b.row, MaxWriter(p.b.accumulator ? acc_writer_ : sp_writer_, p.b.row, p.b.row + p.rows)};
        } else {
          key = {p.c.row, MaxWriter(acc_writer_, p.c.row, p.c.row + dim)};
        }
        bool fill = !stationary_ || *stationary_ != key;
        stationary_ = key;
        s->cost = fill ? cfg_.timing.exec_fill_cycles : 0;
        if (fill) ++report_.fill_count;
        last_preload_ = p;
        break;
      }
      case InstrKind::kCompute: {
        const auto& c = std::get<Compute>(inst);
        s->accesses.Add(kCfg, 0, 1, false);
        s->accesses.Add(c.a, c.rows, false);
        if (!c.a.accumulator) s->sp_read_banks |= BankMask(c.a.row, c.a.row + c.rows);
        if (c.d) {
          s->accesses.Add(*c.d, c.rows, false);
          if (!c.d->accumulator) s->sp_read_banks |= BankMask(c.d->row, c.d->row + c.rows);
        }
        if (last_preload_) {
          s->accesses.Add(last_preload_->b, last_preload_->rows, false);
          s->accesses.Add(last_preload_->c, c.rows, true);
          if (!last_preload_->b.accumulator) {
            s->sp_read_banks |= BankMask(last_preload_->b.row, last_preload_->b.row + last_preload_->rows);
          }
        }
        s->cost = cfg_.timing.exec_cycles_per_tile;
        break;
      }
      case InstrKind::kFence:
      case InstrKind::kFlush:
        s->cost = 0;
        break;
    }
    if (KindOf(inst) == InstrKind::kConfigEx) exec_dataflow_ = std::get<ConfigEx>(inst).dataflow;
  }

  bool OthersPending(Controller c) const {
    for (size_t k = 0; k < 3; ++k) {
      if (k != static_cast<size_t>(c) && in_rob_[k] > 0) return true;
    }
    return false;
  }

  // Moves instructions from the trace into the ROB. Returns true if anything changed.
  bool Enter() {
    bool progress = false;
    blocked_by_full_ = false;
    while (next_ < n_) {
      const Instruction& inst = trace_.instructions[next_];
      const Controller ctrl = ControllerOf(inst);
      if (ctrl == Controller::kNone) {
        // Fence / flush: wait for everything older, then complete at once.
        if (!order_.empty()) break;
        done_[next_] = 1;
        if (record_timeline_) report_.timeline[next_] = {next_, ctrl, now_, now_, now_};
        ++retired_;
        ++next_;
        progress = true;
        continue;
      }
      if (free_.empty()) {
        blocked_by_full_ = true;
        break;
      }
      if (balance_) {
        const size_t c = static_cast<size_t>(ctrl);
        if (paused_[c] && !OthersPending(ctrl)) paused_[c] = false;
        if (paused_[c]) break;
      }
      const size_t slot_id = free_.back();
      free_.pop_back();
      Slot& s = slots_[slot_id];
      s.idx = next_;
      s.deps.clear();
      Describe(next_, &s);
      for (size_t older : order_) {
        const Slot& o = slots_[older];
        // A controller runs one instruction at a time in order, so only cross-controller pairs matter.
        if (o.ctrl != s.ctrl && Conflicts(o.accesses, s.accesses)) s.deps.emplace_back(o.idx, o.ctrl);
      }
      s.enter = now_;
      order_.push_back(slot_id);
      queue_[static_cast<size_t>(ctrl)].push_back(slot_id);
      ++in_rob_[static_cast<size_t>(ctrl)];
      if (balance_ && static_cast<double>(in_rob_[static_cast<size_t>(ctrl)]) > balance_limit_) {
        paused_[static_cast<size_t>(ctrl)] = true;
      }
      ++next_;
      progress = true;
    }
    return progress;
  }

  bool Ready(const Slot& s) const {
    for (const auto& d : s.deps) {
      if (!done_[d.first]) return false;
    }
    return true;
  }

  bool Issue() {
    bool progress = false;
    for (size_t c = 0; c < 3; ++c) {
      if (running_[c] || queue_[c].empty()) continue;
      const size_t slot_id = queue_[c].front();
      Slot& s = slots_[slot_id];
      if (!Ready(s)) continue;
      queue_[c].pop_front();
      int64_t start = now_;
      // Load and execute touching the same scratchpad bank at once are serialized.
      const size_t other = c == static_cast<size_t>(Controller::kLoad)      ? static_cast<size_t>(Controller::kExecute)
                           : c == static_cast<size_t>(Controller::kExecute) ? static_cast<size_t>(Controller::kLoad)
                                                                             : 3;
      if (other < 3 && running_[other]) {
        const Slot& o = slots_[*running_[other]];
        if ((s.sp_write_banks & o.sp_read_banks) || (s.sp_read_banks & o.sp_write_banks)) {
          start = std::max(start, o.finish);
          ++report_.bank_conflict_count;
        }
      }
      if (machine_) machine_->Apply(s.idx, trace_.instructions[s.idx]);
      s.start = start;
      s.finish = start + s.cost;
      report_.busy_cycles[c] += s.cost;
      running_[c] = slot_id;
      progress = true;
    }
    return progress;
  }

  void AccountStalls(int64_t dt) {
    if (dt <= 0) return;
    if (blocked_by_full_) report_.rob_stall_cycles += dt;
    const size_t ex = static_cast<size_t>(Controller::kExecute);
    if (!running_[ex] && !queue_[ex].empty()) {
      const Slot& s = slots_[queue_[ex].front()];
      for (const auto& d : s.deps) {
        if (!done_[d.first] && d.second == Controller::kLoad) {
          report_.exec_wait_on_load_cycles += dt;
          break;
        }
      }
    }
  }

  void Retire(size_t slot_id) {
    Slot& s = slots_[slot_id];
    done_[s.idx] = 1;
    ++retired_;
    if (record_timeline_) report_.timeline[s.idx] = {s.idx, s.ctrl, s.enter, s.start, s.finish};
    const size_t c = static_cast<size_t>(s.ctrl);
    --in_rob_[c];
    if (balance_ && paused_[c] && static_cast<double>(in_rob_[c]) <= balance_limit_ - 1.0) paused_[c] = false;
    order_.erase(std::find(order_.begin(), order_.end(), slot_id));
    free_.push_back(slot_id);
  }

  const InstructionTrace& trace_;
  const AcceleratorConfig& cfg_;
  Machine* machine_;
  size_t n_;
  size_t rob_cap_;
  std::vector<Slot> slots_;
  std::vector<size_t> free_;
  std::vector<size_t> order_;  // occupied slots, oldest first
  std::array<std::deque<size_t>, 3> queue_;
  std::array<std::optional<size_t>, 3> running_;
  std::array<int64_t, 3> in_rob_{};
  std::array<bool, 3> paused_{};
  std::vector<uint8_t> done_;
  std::vector<int64_t> sp_writer_;
  std::vector<int64_t> acc_writer_;
  std::optional<std::pair<int64_t, int64_t>> stationary_;
  std::optional<Preload> last_preload_;
  Dataflow exec_dataflow_{Dataflow::kWS};
  bool balance_;
  double balance_limit_;
  bool record_timeline_{false};
  bool blocked_by_full_{false};
  size_t next_{0};
  size_t retired_{0};
  int64_t now_{0};
  SimReport report_;
};

void RequireLegal(const InstructionTrace& trace, const AcceleratorConfig& cfg) {
  auto violations = CheckLegality(trace, cfg);
  if (violations.empty()) return;
  const auto& v = violations.front();
  SimErrorKind kind =
      v.kind == ViolationKind::kAddressOutOfRange ? SimErrorKind::kAddressOutOfRange : SimErrorKind::kIllegal;
  throw SimulationError(kind, std::string(ToString(kind)) + ": instruction " + std::to_string(v.index) + " " +
                                  ToString(v.kind));
}

}  // namespace

int64_t BaseCost(const Instruction& inst, const AcceleratorConfig& cfg) {
  switch (KindOf(inst)) {
    case InstrKind::kConfigEx:
    case InstrKind::kConfigMv:
      return cfg.timing.config_cycles;
    case InstrKind::kMoveIn: {
      const auto& m = std::get<MoveIn>(inst);
      return MoveCost(m.rows * m.cols * (m.dst.accumulator ? cfg.acc_bytes() : cfg.input_bytes()), cfg);
    }
    case InstrKind::kMoveOut: {
      const auto& m = std::get<MoveOut>(inst);
      return MoveCost(m.rows * m.cols * cfg.input_bytes(), cfg);
    }
    case InstrKind::kPreload:
      return cfg.timing.exec_fill_cycles;
    case InstrKind::kCompute:
      return cfg.timing.exec_cycles_per_tile;
    case InstrKind::kFence:
    case InstrKind::kFlush:
      return 0;
  }
  return 0;
}

MatrixI8 FunctionalExecute(const InstructionTrace& trace, DramImage& dram, const AcceleratorConfig& cfg) {
  ValidateConfig(cfg);
  if (!(trace.meta.workload == dram.layout.logical)) {
    throw ShapeMismatch("trace workload " + ToString(trace.meta.workload) + " does not match DRAM image");
  }
  Machine machine(cfg, &dram);
  for (size_t i = 0; i < trace.instructions.size(); ++i) machine.Apply(i, trace.instructions[i]);
  if (!machine.wrote_output()) throw SimulationError(SimErrorKind::kNoOutput, "NoOutput: trace wrote no output");
  return ReadOutput(dram);
}

SimReport TimedExecute(const InstructionTrace& trace, DramImage& dram, const AcceleratorConfig& cfg,
                       const SimOptions& opts) {
  ValidateConfig(cfg);
  RequireLegal(trace, cfg);
  std::optional<Machine> machine;
  if (opts.functional) {
    if (!(trace.meta.workload == dram.layout.logical)) {
      throw ShapeMismatch("trace workload " + ToString(trace.meta.workload) + " does not match DRAM image");
    }
    machine.emplace(cfg, &dram);
  }
  SimReport report = TimingEngine(trace, cfg, machine ? &*machine : nullptr, opts.record_timeline).Run();
  if (machine) {
    if (!machine->wrote_output()) throw SimulationError(SimErrorKind::kNoOutput, "NoOutput: trace wrote no output");
    report.output = ReadOutput(dram);
  }
  return report;
}

SimReport TimedExecute(const InstructionTrace& trace, const AcceleratorConfig& cfg, bool record_timeline) {
  ValidateConfig(cfg);
  RequireLegal(trace, cfg);
  return TimingEngine(trace, cfg, nullptr, record_timeline).Run();
}

std::string ReportToJson(const SimReport& r, const AcceleratorConfig& cfg) {
  nlohmann::ordered_json j;
  j["workload"] = {{"m", r.workload.m}, {"n", r.workload.n}, {"k", r.workload.k}};
  j["ops"] = CountOps(r.workload);
  j["total_cycles"] = r.total_cycles;
  j["busy_cycles"] = {{"load", r.busy_cycles[0]}, {"execute", r.busy_cycles[1]}, {"store", r.busy_cycles[2]}};
  j["rob_stall_cycles"] = r.rob_stall_cycles;
  j["bank_conflict_count"] = r.bank_conflict_count;
  j["exec_wait_on_load_cycles"] = r.exec_wait_on_load_cycles;
  j["fill_count"] = r.fill_count;
  j["gops"] = r.gops;
  j["peak_gops"] = TheoreticalPeakGops(cfg);
  return j.dump(2) + "\n";
}

std::string TimelineToCsv(const SimReport& r) {
  std::ostringstream os;
  os << "index,controller,enter,start,finish\n";
  for (const auto& e : r.timeline) {
    os << e.index << ',' << ToString(e.controller) << ',' << e.enter << ',' << e.start << ',' << e.finish << '\n';
  }
  return os.str();
}

}  // namespace gemmtune
