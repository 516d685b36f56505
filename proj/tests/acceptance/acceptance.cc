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
 * \file acceptance.cc
 * \brief End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits
 *        non-zero if any fails.
 */
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gemmtune/bench.h"
#include "gemmtune/codegen.h"
#include "gemmtune/quant.h"
#include "gemmtune/schedule.h"
#include "gemmtune/simulator.h"
#include "gemmtune/tuner.h"

namespace fs = std::filesystem;
using namespace gemmtune;  // NOLINT(build/namespaces)

namespace {

// Pinned tolerances.
constexpr int kQuantCases = 10000;
constexpr int kQuantMaxDim = 64;
constexpr int kQuantMaxAbsDiff = 1;
constexpr int kSchedulesPerWorkload = 100;
constexpr int64_t kTunerSpaceCap = 512;
constexpr int64_t kTunerBudget = 128;
constexpr int64_t kTunerEarlyStop = 500;
constexpr uint64_t kTunerSeed = 0;
constexpr double kTunerTolerance = 1.05;
constexpr double kPeakGops = 51.2;
constexpr double kCalibrationLow = 35.0;
constexpr double kCalibrationHigh = 50.0;
constexpr int64_t kCalibrationBudget = 256;
constexpr int kRandomTraces = 1000;
constexpr int kMonotoneSchedules = 10;
const double kBandwidths[] = {2.0, 4.0, 8.0, 16.0};

const std::vector<Workload> kTableShapes = {
    {64, 1, 1216}, {128, 1, 1024}, {512, 1, 512}, {512, 2, 512}, {1024, 4, 512}};

struct Outcome {
  bool pass;
  std::string detail;
};

// Largest gops seen on any report produced during the run.
double g_max_gops = 0.0;
size_t g_reports = 0;

void Observe(const SimReport& r) {
  g_max_gops = std::max(g_max_gops, r.gops);
  ++g_reports;
}

void Observe(const TuningResult& r) {
  for (const auto& rec : r.history) {
    g_max_gops = std::max(g_max_gops, rec.gops);
    ++g_reports;
  }
}

std::string Fmt(const char* fmt, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, a, b, c);
  return buf;
}

Outcome QuantEquivalence() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int64_t> dim(1, kQuantMaxDim);
  int64_t elements = 0, off_by_one = 0, beyond = 0, inexact_integral = 0;
  for (int i = 0; i < kQuantCases; ++i) {
    const Workload w{dim(rng), dim(rng), dim(rng)};
    RandomProblemOptions opts;
    opts.integral_zero_point_term = i % 2 == 1;
    const auto q = RandomProblem(w, rng(), opts);
    const auto ref = ReferenceQgemm(q);
    const auto folded = FoldedQgemm(q);
    for (size_t e = 0; e < ref.data.size(); ++e) {
      const int d = std::abs(ref.data[e] - folded.data[e]);
      if (d > kQuantMaxAbsDiff) ++beyond;
      if (d != 0) {
        ++off_by_one;
        if (opts.integral_zero_point_term) ++inexact_integral;
      }
    }
    elements += static_cast<int64_t>(ref.data.size());
  }
  std::ostringstream os;
  os << kQuantCases << " problems, " << elements << " elements, " << off_by_one << " differ by one, " << beyond
     << " beyond +-1, " << inexact_integral << " inexact with integral zero-point term";
  return {beyond == 0 && inexact_integral == 0, os.str()};
}

Outcome FunctionalCorrectness() {
  std::vector<Workload> shapes;
  for (int64_t s : {16, 32, 64, 128, 256}) shapes.push_back({s, s, s});
  shapes.insert(shapes.end(), kTableShapes.begin(), kTableShapes.end());
  const AcceleratorConfig cfg = Gemmini16L2();
  std::mt19937_64 rng(7);
  int64_t runs = 0, mismatches = 0;
  std::string first;
  for (const auto& w : shapes) {
    auto space = EnumerateValid(PadWorkload(w, cfg), cfg);
    std::shuffle(space.begin(), space.end(), rng);
    if (space.size() > kSchedulesPerWorkload) space.resize(kSchedulesPerWorkload);
    const auto q = RandomProblem(w, rng());
    const MatrixI8 expect = FoldedQgemm(q);
    for (const auto& p : space) {
      const auto prog = GenerateTrace(w, p, q, cfg);
      DramImage dram = BuildDramImage(prog.dram_layout, q);
      const MatrixI8 got = FunctionalExecute(prog.trace, dram, cfg);
      ++runs;
      if (!(got == expect)) {
        ++mismatches;
        if (first.empty()) first = ToString(w) + " " + ToString(p);
      }
    }
  }
  std::ostringstream os;
  os << runs << " programs over " << shapes.size() << " workloads, " << mismatches << " mismatches";
  if (!first.empty()) os << " (first: " << first << ")";
  return {mismatches == 0 && runs > 0, os.str()};
}

// The validity rules applied to a wider cross product, with byte counts in closed form.
std::set<ScheduleParams> BruteForceSpace(const Workload& w, const AcceleratorConfig& cfg) {
  std::set<ScheduleParams> out;
  const int64_t sp_bytes = cfg.sp_banks * cfg.sp_bank_rows * cfg.dim * cfg.input_bits / 8;
  const int64_t acc_bytes = cfg.acc_banks * cfg.acc_bank_rows * cfg.dim * cfg.acc_bits / 8;
  const int64_t in_b = cfg.input_bits / 8, acc_b = cfg.acc_bits / 8;
  std::vector<int64_t> sizes;
  for (int64_t t = cfg.dim / 2; t <= std::max({w.m, w.n, w.k}); t += cfg.dim / 2) sizes.push_back(t);
  for (int64_t m1 : sizes) {
    for (int64_t n1 : sizes) {
      for (int64_t k1 : sizes) {
        if (w.m % m1 || w.n % n1 || w.k % k1) continue;
        if (m1 % cfg.dim || n1 % cfg.dim || k1 % cfg.dim) continue;
        if (std::max({m1, n1, k1}) > std::min(cfg.max_mv_rows, cfg.max_mv_cols)) continue;
        for (int64_t par = 1; par <= 64; ++par) {
          if (par & (par - 1)) continue;
          if (par > (w.m / m1) * (w.n / n1)) continue;
          if (par * m1 * n1 * acc_b > acc_bytes) continue;
          for (int db = 0; db < 4; ++db) {
            const int64_t a = m1 * k1 * in_b * ((db & 1) ? 2 : 1);
            const int64_t b = k1 * n1 * in_b * ((db & 2) ? 2 : 1);
            if (a + b > sp_bytes) continue;
            for (int bits = 0; bits < 8; ++bits) {
              ScheduleParams p;
              p.tile_m1 = m1;
              p.tile_n1 = n1;
              p.tile_k1 = k1;
              p.tile_m2 = p.tile_n2 = p.tile_k2 = cfg.dim;
              p.parallel_accumulations = par;
              p.apply_double_buffer = static_cast<DoubleBuffer>(db);
              p.exchange_axis = bits & 1;
              p.dataflow = (bits & 2) ? Dataflow::kOS : Dataflow::kWS;
              p.mvout_big_block = bits & 4;
              out.insert(p);
            }
          }
        }
      }
    }
  }
  return out;
}

Outcome SpaceValidity() {
  std::vector<Workload> shapes;
  for (int64_t s : {16, 32, 64, 128}) shapes.push_back({s, s, s});
  shapes.insert(shapes.end(), kTableShapes.begin(), kTableShapes.end());
  int64_t checked = 0, failures = 0;
  std::string first;
  auto fail = [&](const std::string& what) {
    ++failures;
    if (first.empty()) first = what;
  };
  for (const AcceleratorConfig& cfg : {Gemmini16L2(), Gemmini16NoL2()}) {
    for (const auto& w : shapes) {
      const Workload padded = PadWorkload(w, cfg);
      for (const auto& p : EnumerateValid(padded, cfg)) {
        ++checked;
        const auto fp = TryScratchpadFootprint(p, cfg);
        if (!fp || fp->total_bytes > cfg.scratchpad_bytes() ||
            AccumulatorFootprint(p, cfg) > cfg.accumulator_bytes()) {
          fail("capacity " + ToString(p));
          continue;
        }
        const auto prog = GenerateTrace(w, p, Rational(1), cfg);
        if (!CheckLegality(prog.trace, cfg).empty()) {
          fail("legality " + ToString(p));
          continue;
        }
        try {
          Observe(TimedExecute(prog.trace, cfg));
        } catch (const SimulationError& e) {
          fail(std::string(e.what()) + " " + ToString(p));
        }
      }
    }
  }
  std::ostringstream os;
  os << checked << " schedules simulated, " << failures << " violations";
  bool same = true;
  for (int64_t s : {32, 64}) {
    const AcceleratorConfig cfg = Gemmini16L2();
    const Workload w{s, s, s};
    const auto space = EnumerateValid(w, cfg);
    const std::set<ScheduleParams> got(space.begin(), space.end());
    const auto oracle = BruteForceSpace(w, cfg);
    same = same && got.size() == space.size() && got == oracle;
    os << "; " << s << "^3 enumerated " << space.size() << " vs brute force " << oracle.size();
  }
  if (!first.empty()) os << " (first: " << first << ")";
  return {failures == 0 && same, os.str()};
}

Outcome TunerOptimality() {
  const std::vector<Workload> candidates = {{16, 16, 16},  {32, 32, 32},   {64, 16, 64},  {48, 48, 48},
                                            {16, 64, 256}, {32, 16, 128},  {64, 64, 16},  {16, 16, 1024},
                                            {80, 16, 80},  {16, 128, 128}, {128, 16, 32}, {96, 32, 32}};
  int spaces = 0, mg_fail = 0, rnd_fail = 0;
  double worst = 1.0;
  std::string first;
  for (const AcceleratorConfig& cfg : {Gemmini16L2(), Gemmini16NoL2()}) {
    for (const auto& w : candidates) {
      const size_t size = EnumerateValid(PadWorkload(w, cfg), cfg).size();
      if (static_cast<int64_t>(size) > kTunerSpaceCap) continue;
      ++spaces;
      TuningJob job;
      job.workload = w;
      job.cfg = cfg;
      job.strategy = Strategy::kExhaustive;
      const auto ex = Tune(job);
      Observe(ex);

      job.strategy = Strategy::kModelGuided;
      job.budget = kTunerBudget;
      job.early_stop = kTunerEarlyStop;
      job.seed = kTunerSeed;
      const auto mg = Tune(job);
      const double ratio = static_cast<double>(mg.best.cycles) / static_cast<double>(ex.best.cycles);
      worst = std::max(worst, ratio);
      if (ratio > kTunerTolerance) {
        ++mg_fail;
        if (first.empty()) first = ToString(w) + " " + cfg.label;
      }

      job.strategy = Strategy::kRandom;
      job.budget = static_cast<int64_t>(size);
      job.early_stop = static_cast<int64_t>(size);
      const auto rnd = Tune(job);
      if (rnd.best.cycles != ex.best.cycles || !(rnd.best.params == ex.best.params)) ++rnd_fail;
    }
  }
  std::ostringstream os;
  os << spaces << " spaces <= " << kTunerSpaceCap << " points, model_guided worst ratio "
     << Fmt("%.4f", worst) << ", " << mg_fail << " beyond " << Fmt("%.2f", kTunerTolerance) << ", " << rnd_fail
     << " random/exhaustive disagreements";
  if (!first.empty()) os << " (first: " << first << ")";
  return {spaces >= 4 && mg_fail == 0 && rnd_fail == 0, os.str()};
}

Outcome BaselineShape() {
  std::vector<std::pair<Workload, bool>> cells;  // workload, asserted
  for (int64_t s : {16, 32, 64, 128}) cells.push_back({{s, s, s}, true});
  for (const auto& w : kTableShapes) cells.push_back({w, true});
  for (int64_t s : {256, 512}) cells.push_back({{s, s, s}, false});
  int asserted = 0, violations = 0;
  std::ostringstream os, wins;
  for (const AcceleratorConfig& cfg : {Gemmini16NoL2(), Gemmini16L2()}) {
    for (const auto& [w, assert_it] : cells) {
      const auto cmp = CompareBaseline(w, cfg);
      Observe(cmp.tuned);
      Observe(cmp.cisc);
      const bool base_wins = cmp.cisc.total_cycles < cmp.tuned.best.cycles;
      if (assert_it) {
        ++asserted;
        if (base_wins) ++violations;
      }
      if (base_wins) wins << " " << ToString(w) << "/" << cfg.label;
      std::cout << "    " << cfg.label << " " << ToString(w) << ": tuned " << cmp.tuned.best.cycles
                << " cycles, baseline " << cmp.cisc.total_cycles << " cycles, speedup "
                << Fmt("%.3f", static_cast<double>(cmp.cisc.total_cycles) / static_cast<double>(cmp.tuned.best.cycles))
                << (base_wins ? "  baseline wins" : "") << (assert_it ? "" : "  (reported only)") << "\n";
    }
  }
  os << asserted << " asserted cells, " << violations << " where the baseline wins; baseline wins overall:"
     << (wins.str().empty() ? " none" : wins.str());
  return {violations == 0, os.str()};
}

Outcome PeakAndCalibration() {
  TuningJob job;
  job.workload = {1024, 1024, 1024};
  job.cfg = Gemmini16L2();
  job.strategy = Strategy::kModelGuided;
  job.budget = kCalibrationBudget;
  job.seed = kTunerSeed;
  const auto r = Tune(job);
  Observe(r);
  const double g = r.best.gops;
  std::ostringstream os;
  os << "max gops " << Fmt("%.3f", g_max_gops) << " over " << g_reports << " measurements (bound "
     << Fmt("%.1f", kPeakGops) << "); square-1024 l2 best " << Fmt("%.3f", g) << " gops, window ["
     << Fmt("%.0f, %.0f", kCalibrationLow, kCalibrationHigh) << "], " << ToString(r.best.params);
  return {g_max_gops <= kPeakGops && g >= kCalibrationLow && g <= kCalibrationHigh, os.str()};
}

int64_t UnionLength(std::vector<std::pair<int64_t, int64_t>> iv) {
  std::sort(iv.begin(), iv.end());
  int64_t total = 0, s0 = 0, e0 = -1;
  for (const auto& [s, e] : iv) {
    if (s >= e) continue;
    if (s > e0) {
      if (e0 > s0) total += e0 - s0;
      s0 = s;
      e0 = e;
    } else {
      e0 = std::max(e0, e);
    }
  }
  if (e0 > s0) total += e0 - s0;
  return total;
}

Outcome TimingProperties() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int64_t> dim(1, 64);
  const AcceleratorConfig configs[] = {Gemmini16L2(), Gemmini16NoL2()};
  int agreement = 0, conservation = 0, monotone = 0;
  for (int i = 0; i < kRandomTraces; ++i) {
    const AcceleratorConfig& cfg = configs[i % 2];
    const Workload w{dim(rng), dim(rng), dim(rng)};
    const auto space = EnumerateValid(PadWorkload(w, cfg), cfg);
    const auto& p = space[rng() % space.size()];
    const auto q = RandomProblem(w, rng());
    const auto prog = (rng() % 8 == 0) ? GenerateCiscBaseline(w, q, cfg) : GenerateTrace(w, p, q, cfg);
    DramImage d1 = BuildDramImage(prog.dram_layout, q);
    DramImage d2 = d1;
    const MatrixI8 functional = FunctionalExecute(prog.trace, d1, cfg);
    SimOptions opts;
    opts.record_timeline = true;
    const SimReport rep = TimedExecute(prog.trace, d2, cfg, opts);
    Observe(rep);
    if (!(rep.output == functional) || d1.bytes != d2.bytes) ++agreement;
    for (Controller c : {Controller::kLoad, Controller::kExecute, Controller::kStore}) {
      std::vector<std::pair<int64_t, int64_t>> iv;
      for (const auto& e : rep.timeline) {
        if (e.controller == c) iv.emplace_back(e.start, e.finish);
      }
      const int64_t busy = rep.busy_cycles[static_cast<size_t>(c)];
      if (UnionLength(iv) != busy || busy + rep.idle_cycles(c) != rep.total_cycles || rep.idle_cycles(c) < 0) {
        ++conservation;
      }
    }
  }
  int pairs = 0;
  for (int i = 0; i < kMonotoneSchedules; ++i) {
    const AcceleratorConfig& base = configs[i % 2];
    const int64_t s = int64_t{64} << (i % 3);
    const Workload w{s, s, s};
    const auto space = EnumerateValid(w, base);
    const auto& p = space[rng() % space.size()];
    int64_t prev = INT64_MAX;
    for (double bw : kBandwidths) {
      AcceleratorConfig cfg = base;
      cfg.timing.dma_bytes_per_cycle = bw;
      const SimReport rep = TimedExecute(GenerateTrace(w, p, Rational(1), cfg).trace, cfg);
      Observe(rep);
      if (rep.total_cycles > prev) ++monotone;
      prev = rep.total_cycles;
      ++pairs;
    }
  }
  std::ostringstream os;
  os << kRandomTraces << " traces: " << agreement << " functional/timed disagreements, " << conservation
     << " conservation violations; " << kMonotoneSchedules << " schedules x " << std::size(kBandwidths)
     << " bandwidths: " << monotone << " monotonicity violations";
  return {agreement == 0 && conservation == 0 && monotone == 0, os.str()};
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome Determinism(const fs::path& scratch) {
#ifndef GEMMTUNE_CLI
  (void)scratch;
  return {false, "built without the command-line tool"};
#else
  std::vector<fs::path> dirs = {scratch / "run1", scratch / "run2"};
  for (const auto& d : dirs) {
    fs::remove_all(d);
    const std::string cmd = std::string("\"") + GEMMTUNE_CLI + "\" bench run --suite deepbench --seed 0 --out \"" +
                            d.string() + "\" > \"" + (scratch / (d.filename().string() + ".log")).string() +
                            "\" 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "bench run failed: " + cmd};
  }
  int files = 0, differ = 0;
  for (const auto& e : fs::directory_iterator(dirs[0])) {
    if (e.path().extension() != ".csv") continue;
    ++files;
    const fs::path twin = dirs[1] / e.path().filename();
    if (!fs::exists(twin) || Slurp(e.path()) != Slurp(twin)) ++differ;
  }
  std::ostringstream os;
  os << "two deepbench runs: " << files << " CSVs compared, " << differ << " differ";
  return {files == 4 && differ == 0, os.str()};
#endif
}

}  // namespace

int main(int argc, char** argv) {
  fs::path scratch = fs::temp_directory_path() / "gemmtune_acceptance";
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--scratch") scratch = argv[i + 1];
  }
  fs::create_directories(scratch);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"quantization equivalence", QuantEquivalence},
      {"end-to-end functional correctness", FunctionalCorrectness},
      {"space validity", SpaceValidity},
      {"tuner optimality", TunerOptimality},
      {"baseline comparison", BaselineShape},
      {"peak bound and calibration", PeakAndCalibration},
      {"timing-model properties", TimingProperties},
      {"determinism", [&] { return Determinism(scratch); }},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail
              << Fmt(" [%.1f s]", secs) << std::endl;
    failed += o.pass ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
