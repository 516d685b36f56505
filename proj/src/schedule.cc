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

#include "gemmtune/schedule.h"

#include <algorithm>
#include <cstdio>

namespace gemmtune {

const char* ToString(DoubleBuffer db) {
  switch (db) {
    case DoubleBuffer::kNone:
      return "none";
    case DoubleBuffer::kAOnly:
      return "a_only";
    case DoubleBuffer::kBOnly:
      return "b_only";
    case DoubleBuffer::kBoth:
      return "both";
  }
  return "?";
}

const char* ToString(InvalidReason r) {
  switch (r) {
    case InvalidReason::kWorkloadNotPadded:
      return "WorkloadNotPadded";
    case InvalidReason::kDivisibilityViolated:
      return "DivisibilityViolated";
    case InvalidReason::kLevel2NotDim:
      return "Level2NotDim";
    case InvalidReason::kBadParallel:
      return "BadParallel";
    case InvalidReason::kScratchpadOverflow:
      return "ScratchpadOverflow";
    case InvalidReason::kBankAssignmentUnsatisfiable:
      return "BankAssignmentUnsatisfiable";
    case InvalidReason::kAccumulatorOverflow:
      return "AccumulatorOverflow";
    case InvalidReason::kMoveLimitExceeded:
      return "MoveLimitExceeded";
    case InvalidReason::kDataflowUnsupported:
      return "DataflowUnsupported";
    case InvalidReason::kBigMvoutUnsupported:
      return "BigMvoutUnsupported";
  }
  return "?";
}

std::string ToString(const ScheduleParams& p) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "t1=%lldx%lldx%lld t2=%lldx%lldx%lld par=%lld db=%s xchg=%d df=%s big=%d",
                static_cast<long long>(p.tile_m1), static_cast<long long>(p.tile_n1),
                static_cast<long long>(p.tile_k1), static_cast<long long>(p.tile_m2),
                static_cast<long long>(p.tile_n2), static_cast<long long>(p.tile_k2),
                static_cast<long long>(p.parallel_accumulations), ToString(p.apply_double_buffer),
                p.exchange_axis ? 1 : 0, ToString(p.dataflow), p.mvout_big_block ? 1 : 0);
  return buf;
}

std::string ScheduleHash(const ScheduleParams& p) {
  uint64_t h = 1469598103934665603ULL;
  for (char c : ToString(p)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Workload PadWorkload(const Workload& w, const AcceleratorConfig& cfg) {
  auto up = [&](int64_t x) { return (x + cfg.dim - 1) / cfg.dim * cfg.dim; };
  return {up(w.m), up(w.n), up(w.k)};
}

const BufferPlacement& ScratchpadFootprint::Buffer(Operand op, int copy) const {
  for (const auto& b : buffers) {
    if (b.operand == op && b.copy == copy) return b;
  }
  // Single-buffered operands alias copy 1 onto copy 0.
  for (const auto& b : buffers) {
    if (b.operand == op && b.copy == 0) return b;
  }
  throw Error("no buffer for operand");
}

namespace {

struct Request {
  Operand operand;
  int copy;
  int64_t rows;
};

bool BanksDisjoint(const BufferPlacement& a, int64_t first, int64_t last) {
  return last < a.first_bank || first > a.last_bank;
}

const BufferPlacement* Twin(const std::vector<BufferPlacement>& placed, const Request& r) {
  for (const auto& b : placed) {
    if (b.operand == r.operand && b.copy != r.copy) return &b;
  }
  return nullptr;
}

// Every buffer on banks of its own.
bool PlaceExclusive(const std::vector<Request>& reqs, const AcceleratorConfig& cfg,
                    std::vector<BufferPlacement>* out) {
  std::vector<bool> used(static_cast<size_t>(cfg.sp_banks), false);
  for (const auto& r : reqs) {
    int64_t need = (r.rows + cfg.sp_bank_rows - 1) / cfg.sp_bank_rows;
    bool placed = false;
    for (int64_t b = 0; b + need <= cfg.sp_banks && !placed; ++b) {
      bool free = true;
      for (int64_t i = b; i < b + need; ++i) free = free && !used[static_cast<size_t>(i)];
      if (!free) continue;
      for (int64_t i = b; i < b + need; ++i) used[static_cast<size_t>(i)] = true;
      out->push_back({r.operand, r.copy, b * cfg.sp_bank_rows, r.rows, b, b + need - 1});
      placed = true;
    }
    if (!placed) return false;
  }
  return true;
}

// Lowest free row range; twin copies keep disjoint banks.
bool PlaceFirstFit(const std::vector<Request>& reqs, const AcceleratorConfig& cfg,
                   std::vector<BufferPlacement>* out) {
  const int64_t total = cfg.sp_rows();
  for (const auto& r : reqs) {
    std::vector<int64_t> starts;
    starts.push_back(0);
    for (int64_t b = 1; b < cfg.sp_banks; ++b) starts.push_back(b * cfg.sp_bank_rows);
    for (const auto& p : *out) starts.push_back(p.start_row + p.rows);
    std::sort(starts.begin(), starts.end());
    const BufferPlacement* twin = Twin(*out, r);
    bool placed = false;
    for (int64_t s : starts) {
      int64_t end = s + r.rows;
      if (end > total) continue;
      bool overlap = false;
      for (const auto& p : *out) overlap = overlap || (s < p.start_row + p.rows && p.start_row < end);
      if (overlap) continue;
      int64_t first = s / cfg.sp_bank_rows;
      int64_t last = (end - 1) / cfg.sp_bank_rows;
      if (twin && !BanksDisjoint(*twin, first, last)) continue;
      out->push_back({r.operand, r.copy, s, r.rows, first, last});
      placed = true;
      break;
    }
    if (!placed) return false;
  }
  return true;
}

}  // namespace

std::optional<ScratchpadFootprint> TryScratchpadFootprint(const ScheduleParams& p,
                                                          const AcceleratorConfig& cfg) {
  ScratchpadFootprint fp;
  fp.a_tile_bytes = p.tile_m1 * p.tile_k1 * cfg.input_bits / 8;
  fp.b_tile_bytes = p.tile_k1 * p.tile_n1 * cfg.input_bits / 8;
  fp.total_bytes = fp.a_tile_bytes * (p.double_buffer_a() ? 2 : 1) +
                   fp.b_tile_bytes * (p.double_buffer_b() ? 2 : 1);
  const int64_t a_rows = PatchRowSpan(p.tile_m1, p.tile_k1, cfg.dim);
  const int64_t b_rows = PatchRowSpan(p.tile_k1, p.tile_n1, cfg.dim);
  std::vector<Request> reqs = {{Operand::kA, 0, a_rows}, {Operand::kB, 0, b_rows}};
  if (p.double_buffer_a()) reqs.push_back({Operand::kA, 1, a_rows});
  if (p.double_buffer_b()) reqs.push_back({Operand::kB, 1, b_rows});
  if (fp.total_bytes > cfg.scratchpad_bytes()) return std::nullopt;
  if (!PlaceExclusive(reqs, cfg, &fp.buffers)) {
    fp.buffers.clear();
    if (!PlaceFirstFit(reqs, cfg, &fp.buffers)) return std::nullopt;
  }
  return fp;
}

ScratchpadFootprint ComputeScratchpadFootprint(const ScheduleParams& p, const AcceleratorConfig& cfg) {
  auto fp = TryScratchpadFootprint(p, cfg);
  if (!fp) {
    throw Unsatisfiable("no conflict-free scratchpad placement for " + ToString(p));
  }
  return *fp;
}

int64_t AccumulatorFootprint(const ScheduleParams& p, const AcceleratorConfig& cfg) {
  return p.parallel_accumulations * p.tile_m1 * p.tile_n1 * cfg.acc_bits / 8;
}

bool Validity::Has(InvalidReason r) const {
  return std::find(reasons.begin(), reasons.end(), r) != reasons.end();
}

Validity IsValid(const ScheduleParams& p, const Workload& padded, const AcceleratorConfig& cfg) {
  Validity v;
  auto add = [&v](InvalidReason r) {
    if (!v.Has(r)) v.reasons.push_back(r);
  };
  if (padded.m % cfg.dim || padded.n % cfg.dim || padded.k % cfg.dim) {
    add(InvalidReason::kWorkloadNotPadded);
  }
  const int64_t t1[3] = {p.tile_m1, p.tile_n1, p.tile_k1};
  const int64_t t2[3] = {p.tile_m2, p.tile_n2, p.tile_k2};
  const int64_t ext[3] = {padded.m, padded.n, padded.k};
  bool shapes_ok = true;
  for (int i = 0; i < 3; ++i) {
    if (t1[i] < 1 || t2[i] < 1 || t1[i] % t2[i] != 0 || ext[i] % t1[i] != 0) {
      add(InvalidReason::kDivisibilityViolated);
      shapes_ok = false;
    }
    if (t2[i] != cfg.dim) add(InvalidReason::kLevel2NotDim);
  }
  if (p.parallel_accumulations < 1) add(InvalidReason::kBadParallel);
  if (shapes_ok) {
    int64_t total = p.tile_m1 * p.tile_k1 * (p.double_buffer_a() ? 2 : 1) +
                    p.tile_k1 * p.tile_n1 * (p.double_buffer_b() ? 2 : 1);
    total = total * cfg.input_bits / 8;
    if (total > cfg.scratchpad_bytes()) {
      add(InvalidReason::kScratchpadOverflow);
    } else if (!TryScratchpadFootprint(p, cfg)) {
      add(InvalidReason::kBankAssignmentUnsatisfiable);
    }
    if (AccumulatorFootprint(p, cfg) > cfg.accumulator_bytes()) {
      add(InvalidReason::kAccumulatorOverflow);
    }
    // A', B', D' move-ins and the move-outs.
    auto fits = [&](int64_t rows, int64_t cols) {
      return rows <= cfg.max_mv_rows && cols <= cfg.max_mv_cols;
    };
    bool moves_ok = fits(p.tile_m1, p.tile_k1) && fits(p.tile_k1, p.tile_n1) &&
                    fits(p.tile_m1, p.tile_n1) && fits(cfg.dim, cfg.dim);
    if (!moves_ok) add(InvalidReason::kMoveLimitExceeded);
  }
  if ((p.dataflow == Dataflow::kWS && !cfg.supports_ws) ||
      (p.dataflow == Dataflow::kOS && !cfg.supports_os)) {
    add(InvalidReason::kDataflowUnsupported);
  }
  if (p.mvout_big_block && !cfg.supports_big_mvout) add(InvalidReason::kBigMvoutUnsupported);
  return v;
}

std::vector<int64_t> TileCandidates(int64_t padded_extent, const AcceleratorConfig& cfg) {
  std::vector<int64_t> out;
  for (int64_t t = cfg.dim; t <= padded_extent; t += cfg.dim) {
    if (padded_extent % t == 0) out.push_back(t);
  }
  return out;
}

std::vector<int64_t> ParallelCandidates(int64_t tile_m1, int64_t tile_n1, const Workload& padded,
                                        const AcceleratorConfig& cfg) {
  const int64_t slot = tile_m1 * tile_n1 * cfg.acc_bits / 8;
  const int64_t capacity = slot > 0 ? cfg.accumulator_bytes() / slot : 0;
  const int64_t outputs = (padded.m / tile_m1) * (padded.n / tile_n1);
  std::vector<int64_t> out = {1};
  for (int64_t p = 2; p <= capacity && p <= outputs; p *= 2) out.push_back(p);
  return out;
}

std::vector<ScheduleParams> EnumerateValid(const Workload& padded, const AcceleratorConfig& cfg) {
  std::vector<ScheduleParams> out;
  const auto tm = TileCandidates(padded.m, cfg);
  const auto tn = TileCandidates(padded.n, cfg);
  const auto tk = TileCandidates(padded.k, cfg);
  const DoubleBuffer dbs[] = {DoubleBuffer::kNone, DoubleBuffer::kAOnly, DoubleBuffer::kBOnly,
                              DoubleBuffer::kBoth};
  std::vector<Dataflow> dataflows;
  if (cfg.supports_ws) dataflows.push_back(Dataflow::kWS);
  if (cfg.supports_os) dataflows.push_back(Dataflow::kOS);
  std::vector<bool> bigs = {false};
  if (cfg.supports_big_mvout) bigs.push_back(true);

  ScheduleParams p;
  p.tile_m2 = p.tile_n2 = p.tile_k2 = cfg.dim;
  for (int64_t m1 : tm) {
    for (int64_t n1 : tn) {
      for (int64_t k1 : tk) {
        p.tile_m1 = m1;
        p.tile_n1 = n1;
        p.tile_k1 = k1;
        for (int64_t par : ParallelCandidates(m1, n1, padded, cfg)) {
          p.parallel_accumulations = par;
          for (DoubleBuffer db : dbs) {
            p.apply_double_buffer = db;
            for (bool xchg : {false, true}) {
              p.exchange_axis = xchg;
              for (Dataflow df : dataflows) {
                p.dataflow = df;
                for (bool big : bigs) {
                  p.mvout_big_block = big;
                  if (IsValid(p, padded, cfg)) out.push_back(p);
                }
              }
            }
          }
        }
      }
    }
  }
  if (out.empty()) throw EmptySpace("no valid schedule for workload " + ToString(padded));
  return out;
}

TileCounts CountTiles(const ScheduleParams& p, const Workload& padded) {
  return {padded.m / p.tile_m1, padded.n / p.tile_n1, padded.k / p.tile_k1};
}

}  // namespace gemmtune
