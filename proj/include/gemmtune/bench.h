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
 * \file gemmtune/bench.h
 * \brief Benchmark suites: tuned schedule vs. fixed-tiling baseline across workloads and configs.
 */
#ifndef GEMMTUNE_BENCH_H_
#define GEMMTUNE_BENCH_H_

#include <string>
#include <vector>

#include "gemmtune/accel_config.h"
#include "gemmtune/tuner.h"

namespace gemmtune {

struct SuiteWorkload {
  /*! \brief Row id in the CSVs: the size for square workloads, the table id otherwise. */
  std::string id;
  Workload workload;
};

struct BenchmarkSuite {
  std::string name;
  std::vector<SuiteWorkload> workloads;
  std::vector<AcceleratorConfig> configs;
  CompareOptions strategy;
};

/*! \brief "square" (16 ... 1024) and "deepbench", both on the L2 and no-L2 presets. */
std::vector<BenchmarkSuite> BuiltinSuites();

/*! \throws Error for an unknown name. */
BenchmarkSuite BuiltinSuite(const std::string& name);

struct CellResult {
  SuiteWorkload workload;
  std::string config_label;
  BaselineComparison comparison;

  bool baseline_wins() const { return comparison.cisc.total_cycles < comparison.tuned.best.cycles; }
};

struct SuiteResult {
  std::string suite;
  std::vector<CellResult> cells;
};

struct RunOptions {
  /*! \brief Concurrent (workload, config) cells. */
  int jobs{1};
};

/*!
 * \brief Runs every (workload, config) cell and writes, into `out_dir`:
 *        `<suite>_<tuned|baseline>_<label>.csv`, `<suite>_summary.txt`, `<suite>_report.json`.
 *
 * Cells that completed are written even when another cell fails; the failure is rethrown.
 * \throws Error on an empty suite.
 */
SuiteResult RunSuite(const BenchmarkSuite& suite, const std::string& out_dir, const RunOptions& opts = {});

std::string SeriesCsv(const SuiteResult& r, const std::string& label, bool tuned);
std::string SummaryTable(const SuiteResult& r);
std::string ReportJson(const SuiteResult& r);

/*! \brief Text table from every `*_report.json` in `out_dir`. */
std::string RenderReport(const std::string& out_dir);

}  // namespace gemmtune

#endif  // GEMMTUNE_BENCH_H_
