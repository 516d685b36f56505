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
#include <set>

#include "gemmtune/schedule.h"

using namespace gemmtune;

namespace {

ScheduleParams Tiles(int64_t m1, int64_t n1, int64_t k1, int64_t par = 1, DoubleBuffer db = DoubleBuffer::kNone) {
  ScheduleParams p;
  p.tile_m1 = m1;
  p.tile_n1 = n1;
  p.tile_k1 = k1;
  p.parallel_accumulations = par;
  p.apply_double_buffer = db;
  return p;
}

// Filters a deliberately wider cross product with the validity rules written out directly:
// byte counts in closed form, no bank placement, no reuse of the library's candidate lists.
std::set<ScheduleParams> BruteForce(const Workload& w, const AcceleratorConfig& cfg) {
  std::set<ScheduleParams> out;
  const int64_t sp_bytes = cfg.sp_banks * cfg.sp_bank_rows * cfg.dim;
  const int64_t acc_bytes = cfg.acc_banks * cfg.acc_bank_rows * cfg.dim * 4;
  const int64_t ext_max = std::max({w.m, w.n, w.k});
  std::vector<int64_t> tile1;
  for (int64_t t = 8; t <= ext_max; t += 8) tile1.push_back(t);
  for (int64_t m1 : tile1) {
    for (int64_t n1 : tile1) {
      for (int64_t k1 : tile1) {
        for (int64_t t2 : {8, 16, 32}) {
          for (int64_t par = 1; par <= 16; ++par) {
            for (int db = 0; db < 4; ++db) {
              for (int xchg = 0; xchg < 2; ++xchg) {
                for (int df = 0; df < 2; ++df) {
                  for (int big = 0; big < 2; ++big) {
                    if (w.m % m1 || w.n % n1 || w.k % k1) continue;
                    if (t2 != cfg.dim || m1 % t2 || n1 % t2 || k1 % t2) continue;
                    if ((par & (par - 1)) != 0) continue;
                    if (par > (w.m / m1) * (w.n / n1)) continue;
                    const bool dba = db == 1 || db == 3;
                    const bool dbb = db == 2 || db == 3;
                    const int64_t sp = m1 * k1 * (dba ? 2 : 1) + k1 * n1 * (dbb ? 2 : 1);
                    if (sp > sp_bytes) continue;
                    if (par * m1 * n1 * 4 > acc_bytes) continue;
                    if (std::max({m1, n1, k1}) > 256) continue;
                    ScheduleParams p = Tiles(m1, n1, k1, par, static_cast<DoubleBuffer>(db));
                    p.tile_m2 = p.tile_n2 = p.tile_k2 = t2;
                    p.exchange_axis = xchg == 1;
                    p.dataflow = df ? Dataflow::kOS : Dataflow::kWS;
                    p.mvout_big_block = big == 1;
                    out.insert(p);
                  }
                }
              }
            }
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

TEST_SUITE("schedule") {
  TEST_CASE("padding") {
    AcceleratorConfig cfg;
    CHECK(PadWorkload({16, 16, 16}, cfg) == Workload{16, 16, 16});
    CHECK(PadWorkload({64, 1, 1216}, cfg) == Workload{64, 16, 1216});
    CHECK(PadWorkload({17, 17, 17}, cfg) == Workload{32, 32, 32});
  }

  TEST_CASE("scratchpad footprint") {
    AcceleratorConfig cfg;
    auto fp = ComputeScratchpadFootprint(Tiles(64, 64, 64), cfg);
    CHECK(fp.a_tile_bytes == 4096);
    CHECK(fp.b_tile_bytes == 4096);
    CHECK(fp.total_bytes == 8192);
    auto both = ComputeScratchpadFootprint(Tiles(64, 64, 64, 1, DoubleBuffer::kBoth), cfg);
    CHECK(both.total_bytes == 16384);
    const auto& a0 = both.Buffer(Operand::kA, 0);
    const auto& a1 = both.Buffer(Operand::kA, 1);
    CHECK((a0.last_bank < a1.first_bank || a1.last_bank < a0.first_bank));

    // One copy of each operand fills the scratchpad, so a second copy cannot fit.
    auto full = Tiles(512, 512, 256);
    CHECK(ComputeScratchpadFootprint(full, cfg).total_bytes == cfg.scratchpad_bytes());
    full.apply_double_buffer = DoubleBuffer::kBoth;
    CHECK_THROWS_AS(ComputeScratchpadFootprint(full, cfg), Unsatisfiable);
    CHECK_FALSE(TryScratchpadFootprint(full, cfg).has_value());
  }

  TEST_CASE("accumulator footprint") {
    AcceleratorConfig cfg;
    CHECK(AccumulatorFootprint(Tiles(64, 64, 16, 1), cfg) == 16384);
    CHECK(AccumulatorFootprint(Tiles(64, 64, 16, 4), cfg) == 65536);
    CHECK(AccumulatorFootprint(Tiles(64, 64, 16, 4), cfg) == cfg.accumulator_bytes());
    CHECK(AccumulatorFootprint(Tiles(64, 64, 16, 5), cfg) == 81920);
    auto v = IsValid(Tiles(64, 64, 64, 5), {512, 512, 512}, cfg);
    CHECK(v.Has(InvalidReason::kAccumulatorOverflow));
  }

  TEST_CASE("validity examples") {
    AcceleratorConfig cfg;
    CHECK(IsValid(Tiles(32, 32, 32), {32, 32, 32}, cfg));
    auto odd = IsValid(Tiles(32, 32, 24), {32, 32, 32}, cfg);
    REQUIRE_FALSE(odd.ok());
    CHECK(odd.reason() == InvalidReason::kDivisibilityViolated);
    auto huge = IsValid(Tiles(1024, 1024, 1024), {1024, 1024, 1024}, cfg);
    CHECK(huge.Has(InvalidReason::kScratchpadOverflow));
    auto t2 = Tiles(32, 32, 32);
    t2.tile_k2 = 32;
    CHECK(IsValid(t2, {32, 32, 32}, cfg).Has(InvalidReason::kLevel2NotDim));
    CHECK(IsValid(Tiles(16, 16, 16), {17, 16, 16}, cfg).Has(InvalidReason::kWorkloadNotPadded));

    AcceleratorConfig limited = cfg;
    limited.supports_os = false;
    limited.supports_big_mvout = false;
    auto p = Tiles(16, 16, 16);
    p.dataflow = Dataflow::kOS;
    p.mvout_big_block = true;
    auto v = IsValid(p, {16, 16, 16}, limited);
    CHECK(v.Has(InvalidReason::kDataflowUnsupported));
    CHECK(v.Has(InvalidReason::kBigMvoutUnsupported));
  }

  TEST_CASE("degenerate workload gives only the flag combinations") {
    AcceleratorConfig cfg = Gemmini16L2();
    auto space = EnumerateValid({16, 16, 16}, cfg);
    CHECK(space.size() == 32);
    for (const auto& p : space) {
      CHECK(p.tile_m1 == 16);
      CHECK(p.tile_n1 == 16);
      CHECK(p.tile_k1 == 16);
      CHECK(p.parallel_accumulations == 1);
    }
  }

  TEST_CASE("enumeration matches brute force") {
    AcceleratorConfig cfg = Gemmini16L2();
    for (int64_t s : {32, 64}) {
      const Workload w{s, s, s};
      const auto space = EnumerateValid(w, cfg);
      const std::set<ScheduleParams> got(space.begin(), space.end());
      CHECK(got.size() == space.size());
      CHECK(got == BruteForce(w, cfg));
    }
    CHECK(EnumerateValid({32, 32, 32}, cfg).size() == 512);
    CHECK(EnumerateValid({64, 64, 64}, cfg).size() == 2592);
  }

  TEST_CASE("enumeration is ordered, deterministic and valid") {
    AcceleratorConfig cfg = Gemmini16NoL2();
    const Workload w = PadWorkload({128, 1, 1024}, cfg);
    const auto a = EnumerateValid(w, cfg);
    const auto b = EnumerateValid(w, cfg);
    CHECK(a == b);
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());
    for (const auto& p : a) {
      REQUIRE(IsValid(p, w, cfg));
      CHECK(ComputeScratchpadFootprint(p, cfg).total_bytes <= cfg.scratchpad_bytes());
      CHECK(AccumulatorFootprint(p, cfg) <= cfg.accumulator_bytes());
    }
  }

  TEST_CASE("empty space") {
    AcceleratorConfig cfg;
    CHECK_THROWS_AS(EnumerateValid({17, 16, 16}, cfg), EmptySpace);
  }
}
