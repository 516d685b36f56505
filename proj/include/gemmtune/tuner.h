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
 * \file gemmtune/tuner.h
 * \brief Schedule search: exhaustive, random and surrogate-guided tuning.
 */
#ifndef GEMMTUNE_TUNER_H_
#define GEMMTUNE_TUNER_H_

#include <cstdint>
#include <string>
#include <vector>

#include "gemmtune/accel_config.h"
#include "gemmtune/schedule.h"
#include "gemmtune/simulator.h"

namespace gemmtune {

enum class Strategy { kExhaustive, kRandom, kModelGuided };

const char* ToString(Strategy s);
Strategy ParseStrategy(const std::string& name);

struct TuningJob {
  /*! \brief Logical workload; padding happens inside. */
  Workload workload;
  AcceleratorConfig cfg;
  Strategy strategy{Strategy::kModelGuided};
  /*! \brief Maximum measurements. Exhaustive search ignores it. */
  int64_t budget{256};
  /*! \brief Stop after this many consecutive non-improving measurements. Exhaustive ignores it. */
  int64_t early_stop{500};
  uint64_t seed{0};
  /*! \brief Measurement batch size and worker count. Results depend on it only as batch size. */
  int parallelism{8};
  /*! \brief Probability of replacing a surrogate proposal with a random unmeasured point. */
  double epsilon{0.05};
};

struct TuningRecord {
  ScheduleParams params;
  int64_t cycles{0};
  double gops{0.0};
  int64_t trial_index{0};
  /*! \brief Seconds since the start of the search; not reproducible. */
  double timestamp{0.0};
};

struct TuningResult {
  TuningRecord best;
  std::vector<TuningRecord> history;
  size_t space_size{0};
  Strategy strategy{Strategy::kExhaustive};
};

class InvalidJob : public Error {
 public:
  using Error::Error;
};

/*! \brief Simulated cycles of schedule `p` on logical workload `w`. */
int64_t MeasureCycles(const Workload& w, const ScheduleParams& p, const AcceleratorConfig& cfg);

/*!
 * \throws InvalidJob for budget/early_stop/parallelism below one, EmptySpace if nothing is valid.
 */
TuningResult Tune(const TuningJob& job);

struct CompareOptions {
  /*! \brief Spaces up to this many points are searched exhaustively. */
  size_t exhaustive_cap{512};
  int64_t budget{256};
  int64_t early_stop{500};
  uint64_t seed{0};
  int parallelism{8};
};

struct BaselineComparison {
  TuningResult tuned;
  ScheduleParams cisc_params;
  SimReport cisc;
};

BaselineComparison CompareBaseline(const Workload& w, const AcceleratorConfig& cfg, const CompareOptions& opts = {});

/*! \brief One JSON object per line, in trial order. */
std::string HistoryToJsonl(const std::vector<TuningRecord>& history);

std::string ParamsToJson(const ScheduleParams& p);
ScheduleParams ParamsFromJson(const std::string& text);

/*! \brief A reusable tuned schedule: the workload it was tuned for plus the parameters. */
struct ScheduleFile {
  Workload workload;
  ScheduleParams params;
  std::string config_label;
  int64_t cycles{0};
};

std::string DumpScheduleFile(const ScheduleFile& f);
ScheduleFile ParseScheduleFile(const std::string& text);
ScheduleFile LoadScheduleFile(const std::string& path);
void SaveScheduleFile(const ScheduleFile& f, const std::string& path);

}  // namespace gemmtune

#endif  // GEMMTUNE_TUNER_H_
