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
 * \file gemmtune/accel_config.h
 * \brief Static description of the modeled systolic-array accelerator.
 *
 * All capacity arithmetic is exact integer arithmetic. A config is immutable
 * once validated and may be shared read-only between tuner workers.
 */
#ifndef GEMMTUNE_ACCEL_CONFIG_H_
#define GEMMTUNE_ACCEL_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "gemmtune/error.h"

namespace gemmtune {

/*! \brief Parameters of the substitute timing model. */
struct TimingParams {
  double clock_hz{100e6};
  double dma_bytes_per_cycle{8.0};
  int64_t dma_latency_cycles{40};
  /*! \brief Extra cycles paid when the stationary operand of the array changes. */
  int64_t exec_fill_cycles{16};
  /*! \brief Steady-state cycles of one dim x dim x dim block product. */
  int64_t exec_cycles_per_tile{18};
  int64_t config_cycles{4};
  bool l2_enabled{true};
  /*! \brief ROB share above which the load-balancing FSM pauses a category. */
  double balance_threshold{0.5};
};

struct AcceleratorConfig {
  /*! \brief Free-form name used to label result series ("l2", "nol2"). */
  std::string label{"default"};
  int64_t dim{16};
  int64_t input_bits{8};
  int64_t acc_bits{32};
  int64_t sp_banks{4};
  int64_t sp_bank_rows{4096};
  int64_t acc_banks{1};
  int64_t acc_bank_rows{1024};
  int64_t max_mv_rows{256};
  int64_t max_mv_cols{256};
  int64_t rob_entries{16};
  bool supports_ws{true};
  bool supports_os{true};
  bool supports_big_mvout{true};
  TimingParams timing;

  int64_t sp_rows() const { return sp_banks * sp_bank_rows; }
  int64_t acc_rows() const { return acc_banks * acc_bank_rows; }
  int64_t input_bytes() const { return input_bits / 8; }
  int64_t acc_bytes() const { return acc_bits / 8; }
  int64_t sp_row_bytes() const { return dim * input_bits / 8; }
  int64_t acc_row_bytes() const { return dim * acc_bits / 8; }
  int64_t scratchpad_bytes() const { return sp_banks * sp_bank_rows * dim * input_bits / 8; }
  int64_t accumulator_bytes() const { return acc_banks * acc_bank_rows * dim * acc_bits / 8; }
};

enum class ConfigIssue {
  kZeroDimension,
  kMoveLimitBelowDim,
  kEmptyMemory,
  kBadBitWidth,
  kBadRob,
  kBadTiming,
  kExecBelowArrayRate,
};

const char* ToString(ConfigIssue issue);

/*! \brief Raised by ValidateConfig; carries every violated invariant. */
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

/*! \brief All invariant violations of `cfg`; empty when the config is usable. */
std::vector<ConfigIssue> ConfigIssues(const AcceleratorConfig& cfg);

/*! \brief Returns `cfg` unchanged if it is valid, otherwise throws ConfigError. */
const AcceleratorConfig& ValidateConfig(const AcceleratorConfig& cfg);

/*! \brief 2 * dim^2 * clock / 1e9. */
double TheoreticalPeakGops(const AcceleratorConfig& cfg);

/*! \brief Reference 16x16 configuration with the L2-backed memory path. */
AcceleratorConfig Gemmini16L2();
/*! \brief Same array, memory path going straight to DRAM. */
AcceleratorConfig Gemmini16NoL2();

/*!
 * \brief Load a config document (JSON). Missing keys keep their defaults.
 * \throws ParseError on malformed text, ConfigError if the result fails validation.
 */
AcceleratorConfig LoadConfigFile(const std::string& path);
AcceleratorConfig ParseConfig(const std::string& text);
std::string DumpConfig(const AcceleratorConfig& cfg);

}  // namespace gemmtune

#endif  // GEMMTUNE_ACCEL_CONFIG_H_
