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
 * \file gemmtune/surrogate.h
 * \brief Cost surrogate used by model-guided tuning.
 */
#ifndef GEMMTUNE_SURROGATE_H_
#define GEMMTUNE_SURROGATE_H_

#include <cstdint>
#include <vector>

#include "gemmtune/accel_config.h"
#include "gemmtune/schedule.h"

namespace gemmtune {

/*!
 * \brief Fixed feature vector of a schedule: log2 tile sizes and tile counts, one-hot flags,
 *        scratchpad and accumulator footprint ratios.
 */
std::vector<double> ScheduleFeatures(const ScheduleParams& p, const Workload& padded, const AcceleratorConfig& cfg);

/*! \brief Least-squares gradient boosting over depth-limited regression trees. */
class GradientBoostedTrees {
 public:
  struct Options {
    int num_trees{48};
    int max_depth{4};
    double learning_rate{0.25};
    int min_leaf{2};
  };

  GradientBoostedTrees() = default;
  explicit GradientBoostedTrees(Options opts) : opts_(opts) {}

  void Fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y);
  double Predict(const std::vector<double>& x) const;
  bool fitted() const { return fitted_; }

 private:
  struct Node {
    int feature{-1};
    double threshold{0.0};
    int left{-1};
    int right{-1};
    double value{0.0};
  };
  using Tree = std::vector<Node>;

  int Grow(const std::vector<std::vector<double>>& x, const std::vector<double>& r, std::vector<size_t>& rows,
           size_t lo, size_t hi, int depth, Tree* tree) const;
  static double Eval(const Tree& t, const std::vector<double>& x);

  Options opts_;
  double base_{0.0};
  std::vector<Tree> trees_;
  bool fitted_{false};
};

}  // namespace gemmtune

#endif  // GEMMTUNE_SURROGATE_H_
