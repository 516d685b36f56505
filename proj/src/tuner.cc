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

#include "gemmtune/tuner.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "gemmtune/codegen.h"
#include "gemmtune/surrogate.h"

namespace gemmtune {

using nlohmann::ordered_json;

const char* ToString(Strategy s) {
  switch (s) {
    case Strategy::kExhaustive:
      return "exhaustive";
    case Strategy::kRandom:
      return "random";
    case Strategy::kModelGuided:
      return "model_guided";
  }
  return "?";
}

Strategy ParseStrategy(const std::string& name) {
  if (name == "exhaustive") return Strategy::kExhaustive;
  if (name == "random") return Strategy::kRandom;
  if (name == "model_guided" || name == "model-guided") return Strategy::kModelGuided;
  throw ParseError("unknown strategy '" + name + "'");
}

int64_t MeasureCycles(const Workload& w, const ScheduleParams& p, const AcceleratorConfig& cfg) {
  return TimedExecute(GenerateTrace(w, p, Rational(1), cfg).trace, cfg).total_cycles;
}

namespace {

bool Better(const TuningRecord& a, const TuningRecord& b) {
  return a.cycles < b.cycles || (a.cycles == b.cycles && a.params < b.params);
}

class Search {
 public:
  explicit Search(const TuningJob& job)
      : job_(job), padded_(PadWorkload(job.workload, job.cfg)), t0_(std::chrono::steady_clock::now()) {
    space_ = EnumerateValid(padded_, job.cfg);
    measured_.assign(space_.size(), 0);
    result_.space_size = space_.size();
    result_.strategy = job.strategy;
  }

  TuningResult Run() {
    switch (job_.strategy) {
      case Strategy::kExhaustive:
        RunExhaustive();
        break;
      case Strategy::kRandom:
        RunRandom();
        break;
      case Strategy::kModelGuided:
        RunModelGuided();
        break;
    }
    return std::move(result_);
  }

 private:
  size_t Limit() const {
    return std::min(space_.size(), static_cast<size_t>(job_.budget));
  }

  void RunExhaustive() {
    std::vector<size_t> ids(space_.size());
    std::iota(ids.begin(), ids.end(), size_t{0});
    Measure(ids, false);
  }

  void RunRandom() {
    std::vector<size_t> ids(space_.size());
    std::iota(ids.begin(), ids.end(), size_t{0});
    std::mt19937_64 rng(job_.seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(Limit());
    Measure(ids, true);
  }

  void RunModelGuided() {
    std::mt19937_64 rng(job_.seed);
    std::vector<std::vector<double>> features;
    features.reserve(space_.size());
    for (const auto& p : space_) features.push_back(ScheduleFeatures(p, padded_, job_.cfg));

    const size_t batch = static_cast<size_t>(job_.parallelism);
    const size_t limit = Limit();
    std::vector<size_t> order(space_.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(std::min(limit, std::max<size_t>(2 * batch, 16)));
    if (!Measure(order, true)) return;

    std::uniform_real_distribution<double> coin(0.0, 1.0);
    GradientBoostedTrees model;
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    while (result_.history.size() < limit) {
      x.clear();
      y.clear();
      for (const auto& r : result_.history) {
        x.push_back(features[index_of_.at(r.trial_index)]);
        y.push_back(std::log(static_cast<double>(r.cycles)));
      }
      model.Fit(x, y);

      std::vector<std::pair<double, size_t>> ranked;
      for (size_t i = 0; i < space_.size(); ++i) {
        if (!measured_[i]) ranked.emplace_back(model.Predict(features[i]), i);
      }
      std::sort(ranked.begin(), ranked.end());
      const size_t want = std::min({batch, limit - result_.history.size(), ranked.size()});
      std::vector<uint8_t> picked(space_.size(), 0);
      std::vector<size_t> proposals;
      size_t cursor = 0;
      while (proposals.size() < want) {
        size_t id;
        if (coin(rng) < job_.epsilon) {
          std::uniform_int_distribution<size_t> any(0, ranked.size() - 1);
          id = ranked[any(rng)].second;
        } else {
          while (picked[ranked[cursor].second]) ++cursor;
          id = ranked[cursor].second;
        }
        if (picked[id]) continue;
        picked[id] = 1;
        proposals.push_back(id);
      }
      if (!Measure(proposals, true)) return;
    }
  }

  /*! \brief Measures `ids` in batches; returns false once early stopping fired. */
  bool Measure(const std::vector<size_t>& ids, bool early_stop) {
    const size_t batch = static_cast<size_t>(job_.parallelism);
    for (size_t lo = 0; lo < ids.size(); lo += batch) {
      const size_t hi = std::min(ids.size(), lo + batch);
      std::vector<int64_t> cycles = MeasureParallel(ids, lo, hi);
      for (size_t i = lo; i < hi; ++i) {
        if (!Record(ids[i], cycles[i - lo], early_stop)) return false;
      }
    }
    return true;
  }

  std::vector<int64_t> MeasureParallel(const std::vector<size_t>& ids, size_t lo, size_t hi) {
    std::vector<int64_t> out(hi - lo, 0);
    const size_t workers =
        std::min<size_t>({hi - lo, static_cast<size_t>(job_.parallelism),
                          std::max<size_t>(1, std::thread::hardware_concurrency())});
    std::atomic<size_t> next{lo};
    std::exception_ptr error;
    std::mutex error_mu;
    auto work = [&]() {
      for (size_t i = next++; i < hi; i = next++) {
        try {
          out[i - lo] = MeasureCycles(job_.workload, space_[ids[i]], job_.cfg);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    };
    if (workers <= 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (size_t w = 0; w < workers; ++w) pool.emplace_back(work);
      for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    return out;
  }

  bool Record(size_t id, int64_t cycles, bool early_stop) {
    TuningRecord r;
    r.params = space_[id];
    r.cycles = cycles;
    r.gops = GopsFor(job_.workload, cycles, job_.cfg);
    r.trial_index = static_cast<int64_t>(result_.history.size());
    r.timestamp = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    measured_[id] = 1;
    index_of_.push_back(id);
    result_.history.push_back(r);
    if (result_.history.size() == 1 || Better(r, result_.best)) {
      result_.best = r;
      since_improvement_ = 0;
      return true;
    }
    ++since_improvement_;
    return !(early_stop && since_improvement_ >= job_.early_stop);
  }

  const TuningJob& job_;
  Workload padded_;
  std::chrono::steady_clock::time_point t0_;
  std::vector<ScheduleParams> space_;
  std::vector<uint8_t> measured_;
  std::vector<size_t> index_of_;  // trial index -> space index
  int64_t since_improvement_{0};
  TuningResult result_;
};

DoubleBuffer ParseDoubleBuffer(const std::string& s) {
  for (auto d : {DoubleBuffer::kNone, DoubleBuffer::kAOnly, DoubleBuffer::kBOnly, DoubleBuffer::kBoth}) {
    if (s == ToString(d)) return d;
  }
  throw ParseError("unknown double-buffer mode '" + s + "'");
}

Dataflow ParseDataflow(const std::string& s) {
  if (s == "WS") return Dataflow::kWS;
  if (s == "OS") return Dataflow::kOS;
  throw ParseError("unknown dataflow '" + s + "'");
}

ordered_json ParamsJson(const ScheduleParams& p) {
  return ordered_json{{"tile_m1", p.tile_m1},
                      {"tile_n1", p.tile_n1},
                      {"tile_k1", p.tile_k1},
                      {"tile_m2", p.tile_m2},
                      {"tile_n2", p.tile_n2},
                      {"tile_k2", p.tile_k2},
                      {"parallel_accumulations", p.parallel_accumulations},
                      {"apply_double_buffer", ToString(p.apply_double_buffer)},
                      {"exchange_axis", p.exchange_axis},
                      {"dataflow", ToString(p.dataflow)},
                      {"mvout_big_block", p.mvout_big_block}};
}

ScheduleParams ParamsFrom(const ordered_json& j) {
  ScheduleParams p;
  p.tile_m1 = j.at("tile_m1").get<int64_t>();
  p.tile_n1 = j.at("tile_n1").get<int64_t>();
  p.tile_k1 = j.at("tile_k1").get<int64_t>();
  p.tile_m2 = j.value("tile_m2", p.tile_m2);
  p.tile_n2 = j.value("tile_n2", p.tile_n2);
  p.tile_k2 = j.value("tile_k2", p.tile_k2);
  p.parallel_accumulations = j.value("parallel_accumulations", int64_t{1});
  p.apply_double_buffer = ParseDoubleBuffer(j.value("apply_double_buffer", std::string("none")));
  p.exchange_axis = j.value("exchange_axis", false);
  p.dataflow = ParseDataflow(j.value("dataflow", std::string("WS")));
  p.mvout_big_block = j.value("mvout_big_block", false);
  return p;
}

}  // namespace

TuningResult Tune(const TuningJob& job) {
  if (job.budget < 1) throw InvalidJob("budget must be at least 1");
  if (job.early_stop < 1) throw InvalidJob("early_stop must be at least 1");
  if (job.parallelism < 1) throw InvalidJob("parallelism must be at least 1");
  if (job.epsilon < 0.0 || job.epsilon > 1.0) throw InvalidJob("epsilon must lie in [0, 1]");
  ValidateConfig(job.cfg);
  return Search(job).Run();
}

BaselineComparison CompareBaseline(const Workload& w, const AcceleratorConfig& cfg, const CompareOptions& opts) {
  TuningJob job;
  job.workload = w;
  job.cfg = cfg;
  job.budget = opts.budget;
  job.early_stop = opts.early_stop;
  job.seed = opts.seed;
  job.parallelism = opts.parallelism;
  const size_t space = EnumerateValid(PadWorkload(w, cfg), cfg).size();
  job.strategy = space <= opts.exhaustive_cap ? Strategy::kExhaustive : Strategy::kModelGuided;

  BaselineComparison out;
  out.tuned = Tune(job);
  out.cisc_params = CiscBaselineParams(w, cfg);
  out.cisc = TimedExecute(GenerateCiscBaseline(w, Rational(1), cfg).trace, cfg);
  return out;
}

std::string HistoryToJsonl(const std::vector<TuningRecord>& history) {
  std::string out;
  for (const auto& r : history) {
    ordered_json j{{"trial", r.trial_index},
                   {"cycles", r.cycles},
                   {"gops", r.gops},
                   {"timestamp", r.timestamp},
                   {"params", ParamsJson(r.params)}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string ParamsToJson(const ScheduleParams& p) { return ParamsJson(p).dump(); }

ScheduleParams ParamsFromJson(const std::string& text) {
  try {
    return ParamsFrom(ordered_json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad schedule parameters: ") + e.what());
  }
}

std::string DumpScheduleFile(const ScheduleFile& f) {
  ordered_json j{{"workload", {{"m", f.workload.m}, {"n", f.workload.n}, {"k", f.workload.k}}},
                 {"config", f.config_label},
                 {"cycles", f.cycles},
                 {"params", ParamsJson(f.params)}};
  return j.dump(2) + "\n";
}

ScheduleFile ParseScheduleFile(const std::string& text) {
  try {
    const ordered_json j = ordered_json::parse(text);
    ScheduleFile f;
    const auto& w = j.at("workload");
    f.workload = {w.at("m").get<int64_t>(), w.at("n").get<int64_t>(), w.at("k").get<int64_t>()};
    f.config_label = j.value("config", std::string());
    f.cycles = j.value("cycles", int64_t{0});
    f.params = ParamsFrom(j.at("params"));
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad schedule file: ") + e.what());
  }
}

ScheduleFile LoadScheduleFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open schedule file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseScheduleFile(ss.str());
}

void SaveScheduleFile(const ScheduleFile& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write schedule file " + path);
  out << DumpScheduleFile(f);
}

}  // namespace gemmtune
