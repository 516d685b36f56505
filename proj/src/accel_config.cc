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

#include "gemmtune/accel_config.h"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gemmtune {

using nlohmann::json;

const char* ToString(ConfigIssue issue) {
  switch (issue) {
    case ConfigIssue::kZeroDimension:
      return "ZeroDimension";
    case ConfigIssue::kMoveLimitBelowDim:
      return "MoveLimitBelowDim";
    case ConfigIssue::kEmptyMemory:
      return "EmptyMemory";
    case ConfigIssue::kBadBitWidth:
      return "BadBitWidth";
    case ConfigIssue::kBadRob:
      return "BadRob";
    case ConfigIssue::kBadTiming:
      return "BadTiming";
    case ConfigIssue::kExecBelowArrayRate:
      return "ExecBelowArrayRate";
  }
  return "?";
}

namespace {

std::string JoinIssues(const std::vector<ConfigIssue>& issues) {
  std::string out = "invalid accelerator config:";
  for (ConfigIssue i : issues) {
    out += ' ';
    out += ToString(i);
  }
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : Error(JoinIssues(issues)), issues_(std::move(issues)) {}

std::vector<ConfigIssue> ConfigIssues(const AcceleratorConfig& cfg) {
  std::vector<ConfigIssue> issues;
  if (cfg.dim < 1) issues.push_back(ConfigIssue::kZeroDimension);
  if (cfg.max_mv_rows < cfg.dim || cfg.max_mv_cols < cfg.dim || cfg.max_mv_rows < 1 ||
      cfg.max_mv_cols < 1) {
    issues.push_back(ConfigIssue::kMoveLimitBelowDim);
  }
  if (cfg.sp_banks < 1 || cfg.sp_bank_rows < 1 || cfg.acc_banks < 1 || cfg.acc_bank_rows < 1) {
    issues.push_back(ConfigIssue::kEmptyMemory);
  }
  if (cfg.input_bits != 8 || cfg.acc_bits != 32) issues.push_back(ConfigIssue::kBadBitWidth);
  if (cfg.rob_entries < 1) issues.push_back(ConfigIssue::kBadRob);
  const TimingParams& t = cfg.timing;
  if (!(t.clock_hz > 0) || !(t.dma_bytes_per_cycle > 0) || t.dma_latency_cycles < 0 ||
      t.exec_fill_cycles < 0 || t.exec_cycles_per_tile < 0 || t.config_cycles < 0 ||
      !(t.balance_threshold > 0 && t.balance_threshold <= 1)) {
    issues.push_back(ConfigIssue::kBadTiming);
  }
  // A block product can never beat one column of operands per cycle.
  if (cfg.dim >= 1 && t.exec_cycles_per_tile < cfg.dim) {
    issues.push_back(ConfigIssue::kExecBelowArrayRate);
  }
  return issues;
}

const AcceleratorConfig& ValidateConfig(const AcceleratorConfig& cfg) {
  auto issues = ConfigIssues(cfg);
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return cfg;
}

double TheoreticalPeakGops(const AcceleratorConfig& cfg) {
  return 2.0 * static_cast<double>(cfg.dim) * static_cast<double>(cfg.dim) * cfg.timing.clock_hz /
         1e9;
}

AcceleratorConfig Gemmini16L2() {
  AcceleratorConfig cfg;
  cfg.label = "l2";
  cfg.timing.l2_enabled = true;
  cfg.timing.dma_bytes_per_cycle = 8.0;
  cfg.timing.dma_latency_cycles = 40;
  return cfg;
}

AcceleratorConfig Gemmini16NoL2() {
  AcceleratorConfig cfg;
  cfg.label = "nol2";
  cfg.timing.l2_enabled = false;
  cfg.timing.dma_bytes_per_cycle = 4.0;
  cfg.timing.dma_latency_cycles = 100;
  return cfg;
}

namespace {

template <typename T>
void Read(const json& j, const char* key, T* out) {
  if (j.contains(key)) *out = j.at(key).get<T>();
}

}  // namespace

AcceleratorConfig ParseConfig(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  AcceleratorConfig cfg;
  try {
    Read(j, "label", &cfg.label);
    Read(j, "dim", &cfg.dim);
    Read(j, "input_bits", &cfg.input_bits);
    Read(j, "acc_bits", &cfg.acc_bits);
    Read(j, "sp_banks", &cfg.sp_banks);
    Read(j, "sp_bank_rows", &cfg.sp_bank_rows);
    Read(j, "acc_banks", &cfg.acc_banks);
    Read(j, "acc_bank_rows", &cfg.acc_bank_rows);
    Read(j, "max_mv_rows", &cfg.max_mv_rows);
    Read(j, "max_mv_cols", &cfg.max_mv_cols);
    Read(j, "rob_entries", &cfg.rob_entries);
    Read(j, "supports_ws", &cfg.supports_ws);
    Read(j, "supports_os", &cfg.supports_os);
    Read(j, "supports_big_mvout", &cfg.supports_big_mvout);
    if (j.contains("timing")) {
      const json& t = j.at("timing");
      Read(t, "clock_hz", &cfg.timing.clock_hz);
      Read(t, "dma_bytes_per_cycle", &cfg.timing.dma_bytes_per_cycle);
      Read(t, "dma_latency_cycles", &cfg.timing.dma_latency_cycles);
      Read(t, "exec_fill_cycles", &cfg.timing.exec_fill_cycles);
      Read(t, "exec_cycles_per_tile", &cfg.timing.exec_cycles_per_tile);
      Read(t, "config_cycles", &cfg.timing.config_cycles);
      Read(t, "l2_enabled", &cfg.timing.l2_enabled);
      Read(t, "balance_threshold", &cfg.timing.balance_threshold);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  ValidateConfig(cfg);
  return cfg;
}

AcceleratorConfig LoadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str());
}

std::string DumpConfig(const AcceleratorConfig& cfg) {
  json t = {{"clock_hz", cfg.timing.clock_hz},
            {"dma_bytes_per_cycle", cfg.timing.dma_bytes_per_cycle},
            {"dma_latency_cycles", cfg.timing.dma_latency_cycles},
            {"exec_fill_cycles", cfg.timing.exec_fill_cycles},
            {"exec_cycles_per_tile", cfg.timing.exec_cycles_per_tile},
            {"config_cycles", cfg.timing.config_cycles},
            {"l2_enabled", cfg.timing.l2_enabled},
            {"balance_threshold", cfg.timing.balance_threshold}};
  json j = {{"label", cfg.label},
            {"dim", cfg.dim},
            {"input_bits", cfg.input_bits},
            {"acc_bits", cfg.acc_bits},
            {"sp_banks", cfg.sp_banks},
            {"sp_bank_rows", cfg.sp_bank_rows},
            {"acc_banks", cfg.acc_banks},
            {"acc_bank_rows", cfg.acc_bank_rows},
            {"max_mv_rows", cfg.max_mv_rows},
            {"max_mv_cols", cfg.max_mv_cols},
            {"rob_entries", cfg.rob_entries},
            {"supports_ws", cfg.supports_ws},
            {"supports_os", cfg.supports_os},
            {"supports_big_mvout", cfg.supports_big_mvout},
            {"timing", t}};
  return j.dump(2) + "\n";
}

}  // namespace gemmtune
