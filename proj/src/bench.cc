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

#include "gemmtune/bench.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace gemmtune {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::vector<BenchmarkSuite> BuiltinSuites() {
  const std::vector<AcceleratorConfig> configs = {Gemmini16NoL2(), Gemmini16L2()};
  BenchmarkSuite square{"square", {}, configs, {}};
  for (int64_t s : {16, 32, 64, 128, 256, 512, 1024}) square.workloads.push_back({std::to_string(s), {s, s, s}});
  BenchmarkSuite deepbench{"deepbench",
                           {{"15", {64, 1, 1216}},
                            {"49", {128, 1, 1024}},
                            {"63", {512, 1, 512}},
                            {"73", {512, 2, 512}},
                            {"84", {1024, 4, 512}}},
                           configs,
                           {}};
  return {square, deepbench};
}

BenchmarkSuite BuiltinSuite(const std::string& name) {
  for (auto& s : BuiltinSuites()) {
    if (s.name == name) return s;
  }
  throw Error("unknown suite '" + name + "' (expected square or deepbench)");
}

namespace {

std::string FormatGops(double g) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", g);
  return buf;
}

std::vector<std::string> Labels(const SuiteResult& r) {
  std::vector<std::string> labels;
  for (const auto& c : r.cells) {
    if (std::find(labels.begin(), labels.end(), c.config_label) == labels.end()) labels.push_back(c.config_label);
  }
  return labels;
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void WriteOutputs(const SuiteResult& r, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& label : Labels(r)) {
    WriteFile(dir / (r.suite + "_tuned_" + label + ".csv"), SeriesCsv(r, label, true));
    WriteFile(dir / (r.suite + "_baseline_" + label + ".csv"), SeriesCsv(r, label, false));
  }
  WriteFile(dir / (r.suite + "_summary.txt"), SummaryTable(r));
  WriteFile(dir / (r.suite + "_report.json"), ReportJson(r));
}

}  // namespace

SuiteResult RunSuite(const BenchmarkSuite& suite, const std::string& out_dir, const RunOptions& opts) {
  if (suite.workloads.empty() || suite.configs.empty()) throw Error("suite '" + suite.name + "' is empty");
  for (const auto& cfg : suite.configs) ValidateConfig(cfg);

  struct Cell {
    size_t w;
    size_t c;
  };
  std::vector<Cell> cells;
  for (size_t c = 0; c < suite.configs.size(); ++c) {
    for (size_t w = 0; w < suite.workloads.size(); ++w) cells.push_back({w, c});
  }
  std::vector<std::optional<CellResult>> done(cells.size());
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto work = [&]() {
    for (size_t i = next++; i < cells.size(); i = next++) {
      {
        std::lock_guard<std::mutex> lock(mu);
        if (error) return;
      }
      try {
        const auto& sw = suite.workloads[cells[i].w];
        const auto& cfg = suite.configs[cells[i].c];
        CellResult r{sw, cfg.label, CompareBaseline(sw.workload, cfg, suite.strategy)};
        std::lock_guard<std::mutex> lock(mu);
        done[i] = std::move(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const size_t workers = std::clamp<size_t>(static_cast<size_t>(std::max(opts.jobs, 1)), 1, cells.size());
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  SuiteResult result{suite.name, {}};
  for (auto& d : done) {
    if (d) result.cells.push_back(std::move(*d));
  }
  if (!out_dir.empty()) WriteOutputs(result, out_dir);
  if (error) std::rethrow_exception(error);
  return result;
}

std::string SeriesCsv(const SuiteResult& r, const std::string& label, bool tuned) {
  std::string out = "workload,gops\n";
  for (const auto& c : r.cells) {
    if (c.config_label != label) continue;
    const double g = tuned ? c.comparison.tuned.best.gops : c.comparison.cisc.gops;
    out += c.workload.id + "," + FormatGops(g) + "\n";
  }
  return out;
}

std::string SummaryTable(const SuiteResult& r) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-10s %-8s %-16s %12s %12s %10s %10s %8s  %s\n", "workload", "config", "shape",
                "tuned_cyc", "base_cyc", "tuned_gops", "base_gops", "speedup", "note");
  os << "suite " << r.suite << "\n" << line;
  for (const auto& c : r.cells) {
    const auto& t = c.comparison.tuned.best;
    const auto& b = c.comparison.cisc;
    std::snprintf(line, sizeof(line), "%-10s %-8s %-16s %12lld %12lld %10.4f %10.4f %8.3f  %s\n",
                  c.workload.id.c_str(), c.config_label.c_str(), ToString(c.workload.workload).c_str(),
                  static_cast<long long>(t.cycles), static_cast<long long>(b.total_cycles), t.gops, b.gops,
                  static_cast<double>(b.total_cycles) / static_cast<double>(t.cycles),
                  c.baseline_wins() ? "baseline wins" : "");
    os << line;
  }
  size_t wins = 0;
  for (const auto& c : r.cells) wins += c.baseline_wins() ? 1 : 0;
  os << "baseline wins in " << wins << " of " << r.cells.size() << " cells\n";
  return os.str();
}

std::string ReportJson(const SuiteResult& r) {
  ordered_json cells = ordered_json::array();
  for (const auto& c : r.cells) {
    const auto& w = c.workload.workload;
    const auto& t = c.comparison.tuned;
    cells.push_back({{"workload", c.workload.id},
                     {"m", w.m},
                     {"n", w.n},
                     {"k", w.k},
                     {"ops", CountOps(w)},
                     {"config", c.config_label},
                     {"tuned",
                      {{"strategy", ToString(t.strategy)},
                       {"space_size", t.space_size},
                       {"trials", t.history.size()},
                       {"cycles", t.best.cycles},
                       {"gops", t.best.gops},
                       {"params", ordered_json::parse(ParamsToJson(t.best.params))}}},
                     {"baseline",
                      {{"cycles", c.comparison.cisc.total_cycles},
                       {"gops", c.comparison.cisc.gops},
                       {"params", ordered_json::parse(ParamsToJson(c.comparison.cisc_params))}}},
                     {"baseline_wins", c.baseline_wins()}});
  }
  ordered_json j{{"suite", r.suite}, {"cells", cells}};
  return j.dump(2) + "\n";
}

std::string RenderReport(const std::string& out_dir) {
  std::vector<fs::path> reports;
  if (!fs::is_directory(out_dir)) throw Error("no such results directory " + out_dir);
  for (const auto& e : fs::directory_iterator(out_dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() > 12 && name.compare(name.size() - 12, 12, "_report.json") == 0) reports.push_back(e.path());
  }
  if (reports.empty()) throw Error("no *_report.json in " + out_dir);
  std::sort(reports.begin(), reports.end());
  std::ostringstream os;
  char line[256];
  for (const auto& path : reports) {
    std::ifstream in(path);
    ordered_json j;
    try {
      j = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
    os << "suite " << j.value("suite", std::string("?")) << "\n";
    std::snprintf(line, sizeof(line), "%-10s %-8s %10s %10s %8s  %s\n", "workload", "config", "tuned", "baseline",
                  "speedup", "note");
    os << line;
    for (const auto& c : j.at("cells")) {
      const double tg = c.at("tuned").at("gops").get<double>();
      const double bg = c.at("baseline").at("gops").get<double>();
      std::snprintf(line, sizeof(line), "%-10s %-8s %10.4f %10.4f %8.3f  %s\n",
                    c.at("workload").get<std::string>().c_str(), c.at("config").get<std::string>().c_str(), tg, bg,
                    bg > 0 ? tg / bg : 0.0, c.value("baseline_wins", false) ? "baseline wins" : "");
      os << line;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace gemmtune
