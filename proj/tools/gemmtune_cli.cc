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
 * \file gemmtune_cli.cc
 * \brief Command-line front end: enumerate, codegen, simulate, tune, bench.
 */
#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

#include "gemmtune/bench.h"
#include "gemmtune/codegen.h"
#include "gemmtune/quant.h"
#include "gemmtune/schedule.h"
#include "gemmtune/simulator.h"
#include "gemmtune/tuner.h"

namespace {

using namespace gemmtune;  // NOLINT(build/namespaces)

Workload ParseWorkload(const std::string& text) {
  static const std::regex re(R"((\d+)[x,](\d+)[x,](\d+))");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw ParseError("workload must look like MxNxK, got '" + text + "'");
  Workload w{std::stoll(m[1].str()), std::stoll(m[2].str()), std::stoll(m[3].str())};
  if (w.m < 1 || w.n < 1 || w.k < 1) throw ParseError("workload dimensions must be positive");
  return w;
}

AcceleratorConfig ResolveConfig(const std::string& name) {
  if (name.empty() || name == "l2") return Gemmini16L2();
  if (name == "nol2") return Gemmini16NoL2();
  return LoadConfigFile(name);
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteOrPrint(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

struct ProgramArgs {
  std::string workload;
  std::string config;
  std::string schedule;
  bool baseline{false};
  uint64_t seed{0};

  void Add(CLI::App* app) {
    app->add_option("-w,--workload", workload, "GEMM shape MxNxK")->required();
    app->add_option("-c,--config", config, "accelerator config file, or l2 / nol2");
    app->add_option("-s,--schedule", schedule, "schedule file written by tune");
    app->add_flag("--baseline", baseline, "use the fixed-tiling baseline schedule");
    app->add_option("--seed", seed, "seed for random operands");
  }

  LoweredProgram Lower(const QuantizedGemmProblem& q, const AcceleratorConfig& cfg) const {
    const Workload w = ParseWorkload(workload);
    if (baseline) return GenerateCiscBaseline(w, q, cfg);
    if (schedule.empty()) throw Error("give --schedule FILE or --baseline");
    ScheduleFile f = LoadScheduleFile(schedule);
    if (!(f.workload == w)) {
      throw ShapeMismatch("schedule was tuned for " + ToString(f.workload) + ", not " + ToString(w));
    }
    return GenerateTrace(w, f.params, q, cfg);
  }
};

int RunEnumerate(const std::string& workload, const std::string& config, bool count_only, bool json) {
  const AcceleratorConfig cfg = ResolveConfig(config);
  const Workload padded = PadWorkload(ParseWorkload(workload), cfg);
  const auto space = EnumerateValid(padded, cfg);
  if (count_only) {
    std::cout << space.size() << "\n";
    return 0;
  }
  for (const auto& p : space) std::cout << (json ? ParamsToJson(p) : ToString(p)) << "\n";
  return 0;
}

int RunCodegen(const ProgramArgs& args, const std::string& emit_trace) {
  const AcceleratorConfig cfg = ResolveConfig(args.config);
  const auto q = RandomProblem(ParseWorkload(args.workload), args.seed);
  const LoweredProgram prog = args.Lower(q, cfg);
  WriteOrPrint(emit_trace, RenderListing(prog.trace));
  if (!emit_trace.empty() && emit_trace != "-") {
    const auto counts = CountInstructions(prog.trace);
    std::cerr << prog.trace.instructions.size() << " instructions";
    for (int k = 0; k < kNumInstrKinds; ++k) {
      std::cerr << " " << ToString(static_cast<InstrKind>(k)) << "=" << counts[static_cast<size_t>(k)];
    }
    std::cerr << "\n";
  }
  return 0;
}

int RunSimulate(const ProgramArgs& args, const std::string& trace_path, const std::string& timeline,
                const std::string& report) {
  const AcceleratorConfig cfg = ResolveConfig(args.config);
  SimReport rep;
  if (!trace_path.empty()) {
    // A bare listing carries no operands, so only timing is available.
    rep = TimedExecute(ParseListing(ReadFile(trace_path)), cfg, !timeline.empty());
  } else {
    const auto q = RandomProblem(ParseWorkload(args.workload), args.seed);
    const LoweredProgram prog = args.Lower(q, cfg);
    DramImage dram = BuildDramImage(prog.dram_layout, q);
    SimOptions opts;
    opts.record_timeline = !timeline.empty();
    rep = TimedExecute(prog.trace, dram, cfg, opts);
    const bool match = rep.output.data == FoldedQgemm(q).data;
    std::cerr << "output " << (match ? "matches" : "DIFFERS FROM") << " the integer reference\n";
    if (!match) return 2;
  }
  if (!timeline.empty()) WriteOrPrint(timeline, TimelineToCsv(rep));
  WriteOrPrint(report, ReportToJson(rep, cfg));
  return 0;
}

int RunTune(TuningJob job, const std::string& workload, const std::string& config, const std::string& strategy,
            const std::string& history, const std::string& out) {
  job.workload = ParseWorkload(workload);
  job.cfg = ResolveConfig(config);
  job.strategy = ParseStrategy(strategy);
  const TuningResult r = Tune(job);
  if (!history.empty()) WriteOrPrint(history, HistoryToJsonl(r.history));
  ScheduleFile f{job.workload, r.best.params, job.cfg.label, r.best.cycles};
  if (!out.empty()) SaveScheduleFile(f, out);
  std::cout << "space " << r.space_size << ", measured " << r.history.size() << "\n"
            << "best " << ToString(r.best.params) << "\n"
            << "cycles " << r.best.cycles << ", gops " << r.best.gops << "\n";
  return 0;
}

int RunBench(const std::string& suite_name, const std::vector<std::string>& configs, const std::string& out,
             bool full, int jobs, const CompareOptions& strategy) {
  BenchmarkSuite suite = BuiltinSuite(suite_name);
  if (!configs.empty()) {
    suite.configs.clear();
    for (const auto& c : configs) suite.configs.push_back(ResolveConfig(c));
  }
  if (!full && suite.name == "square") {
    auto& ws = suite.workloads;
    ws.erase(std::remove_if(ws.begin(), ws.end(), [](const SuiteWorkload& w) { return w.workload.m > 512; }),
             ws.end());
  }
  suite.strategy = strategy;
  const SuiteResult r = RunSuite(suite, out, {jobs});
  std::cout << SummaryTable(r);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GEMM schedule tuning for a systolic-array accelerator model"};
  app.require_subcommand(1);

  std::string workload, config;
  auto* enumerate = app.add_subcommand("enumerate", "list the valid schedules of a workload");
  bool count_only = false, as_json = false;
  enumerate->add_option("-w,--workload", workload, "GEMM shape MxNxK")->required();
  enumerate->add_option("-c,--config", config, "accelerator config file, or l2 / nol2");
  enumerate->add_flag("--count", count_only, "print only the number of schedules");
  enumerate->add_flag("--json", as_json, "one JSON object per schedule");

  ProgramArgs codegen_args;
  std::string emit_trace;
  auto* codegen = app.add_subcommand("codegen", "lower a schedule to an instruction listing");
  codegen_args.Add(codegen);
  codegen->add_option("--emit-trace", emit_trace, "listing output path (default stdout)");

  ProgramArgs sim_args;
  std::string trace_path, timeline, report;
  auto* simulate = app.add_subcommand("simulate", "run a program on the timing model");
  sim_args.Add(simulate);
  simulate->get_option("--workload")->required(false);
  simulate->add_option("--trace", trace_path, "simulate an existing listing (timing only)");
  simulate->add_option("--timeline", timeline, "write per-instruction timeline CSV");
  simulate->add_option("--report", report, "write the JSON report here instead of stdout");

  TuningJob job;
  std::string strategy = "model_guided", history, best_out;
  auto* tune = app.add_subcommand("tune", "search the schedule space");
  tune->add_option("-w,--workload", workload, "GEMM shape MxNxK")->required();
  tune->add_option("-c,--config", config, "accelerator config file, or l2 / nol2");
  tune->add_option("--strategy", strategy, "exhaustive | random | model_guided")->capture_default_str();
  tune->add_option("--budget", job.budget, "maximum measurements")->capture_default_str();
  tune->add_option("--early-stop", job.early_stop, "non-improving trials before stopping")->capture_default_str();
  tune->add_option("--seed", job.seed, "search seed")->capture_default_str();
  tune->add_option("--parallelism", job.parallelism, "measurement batch size")->capture_default_str();
  tune->add_option("--history", history, "write the trial history as JSON lines");
  tune->add_option("-o,--out", best_out, "write the best schedule file");

  auto* bench = app.add_subcommand("bench", "benchmark suites");
  bench->require_subcommand(1);
  std::string suite_name = "square", out_dir = "results";
  std::vector<std::string> bench_configs;
  bool full = false;
  int jobs = 1;
  CompareOptions strategy_opts;
  auto* bench_run = bench->add_subcommand("run", "tune and compare against the baseline, write CSVs");
  bench_run->add_option("--suite", suite_name, "square | deepbench")->capture_default_str();
  bench_run->add_option("-c,--config", bench_configs, "config file(s); default: both presets");
  bench_run->add_option("-o,--out", out_dir, "output directory")->capture_default_str();
  bench_run->add_flag("--full", full, "include the 1024 square workload");
  bench_run->add_option("-j,--jobs", jobs, "cells run concurrently")->capture_default_str();
  bench_run->add_option("--seed", strategy_opts.seed, "tuning seed")->capture_default_str();
  bench_run->add_option("--budget", strategy_opts.budget, "model-guided budget")->capture_default_str();
  bench_run->add_option("--exhaustive-cap", strategy_opts.exhaustive_cap, "largest space searched exhaustively")
      ->capture_default_str();
  auto* bench_report = bench->add_subcommand("report", "print the tables of a results directory");
  bench_report->add_option("dir", out_dir, "results directory")->capture_default_str();
  bench_report->add_option("-o,--out", out_dir, "results directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*enumerate) return RunEnumerate(workload, config, count_only, as_json);
    if (*codegen) return RunCodegen(codegen_args, emit_trace);
    if (*simulate) {
      if (trace_path.empty() && sim_args.workload.empty()) throw Error("give --workload or --trace");
      return RunSimulate(sim_args, trace_path, timeline, report);
    }
    if (*tune) return RunTune(job, workload, config, strategy, history, best_out);
    if (*bench_run) return RunBench(suite_name, bench_configs, out_dir, full, jobs, strategy_opts);
    if (*bench_report) {
      std::cout << RenderReport(out_dir);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
