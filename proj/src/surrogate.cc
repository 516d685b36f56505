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

#include "gemmtune/surrogate.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gemmtune {

std::vector<double> ScheduleFeatures(const ScheduleParams& p, const Workload& padded, const AcceleratorConfig& cfg) {
  const TileCounts tc = CountTiles(p, padded);
  std::vector<double> f;
  f.reserve(24);
  f.push_back(std::log2(static_cast<double>(p.tile_m1)));
  f.push_back(std::log2(static_cast<double>(p.tile_n1)));
  f.push_back(std::log2(static_cast<double>(p.tile_k1)));
  f.push_back(std::log2(static_cast<double>(p.parallel_accumulations)));
  f.push_back(std::log2(static_cast<double>(tc.m)));
  f.push_back(std::log2(static_cast<double>(tc.n)));
  f.push_back(std::log2(static_cast<double>(tc.k)));
  for (int d = 0; d < 4; ++d) f.push_back(static_cast<int>(p.apply_double_buffer) == d ? 1.0 : 0.0);
  f.push_back(p.exchange_axis ? 1.0 : 0.0);
  f.push_back(p.dataflow == Dataflow::kOS ? 1.0 : 0.0);
  f.push_back(p.mvout_big_block ? 1.0 : 0.0);
  const auto fp = TryScratchpadFootprint(p, cfg);
  f.push_back(fp ? static_cast<double>(fp->total_bytes) / static_cast<double>(cfg.scratchpad_bytes()) : 1.0);
  f.push_back(static_cast<double>(AccumulatorFootprint(p, cfg)) / static_cast<double>(cfg.accumulator_bytes()));
  // Operand bytes moved per block product, the reuse the tiling buys.
  const double tm = static_cast<double>(p.tile_m1), tn = static_cast<double>(p.tile_n1),
               tk = static_cast<double>(p.tile_k1);
  f.push_back(std::log2((tm * tk + tk * tn) / (tm * tn * tk) * static_cast<double>(cfg.dim)));
  // Total DMA traffic implied by the loop nest, and its split between operands.
  const double steps = static_cast<double>(tc.m * tc.n * tc.k);
  const bool a_reused = p.exchange_axis ? (tc.k == 1 && tc.m == 1) : tc.k == 1;
  const bool b_reused = p.exchange_axis ? tc.k == 1 : (tc.k == 1 && tc.n == 1);
  const double a_loads = a_reused ? (p.exchange_axis ? 1.0 : static_cast<double>(tc.m)) : steps;
  const double b_loads = b_reused ? (p.exchange_axis ? static_cast<double>(tc.n) : 1.0) : steps;
  const double a_bytes = a_loads * tm * tk, b_bytes = b_loads * tk * tn;
  const double d_bytes = static_cast<double>(padded.m * padded.n * cfg.acc_bytes());
  f.push_back(std::log2(a_bytes + b_bytes + d_bytes));
  f.push_back(std::log2(steps));
  return f;
}

void GradientBoostedTrees::Fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
  trees_.clear();
  fitted_ = false;
  if (x.empty()) return;
  base_ = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  std::vector<double> pred(y.size(), base_);
  std::vector<double> resid(y.size());
  std::vector<size_t> rows(y.size());
  for (int t = 0; t < opts_.num_trees; ++t) {
    for (size_t i = 0; i < y.size(); ++i) resid[i] = y[i] - pred[i];
    std::iota(rows.begin(), rows.end(), size_t{0});
    Tree tree;
    Grow(x, resid, rows, 0, rows.size(), 0, &tree);
    for (auto& node : tree) node.value *= opts_.learning_rate;
    for (size_t i = 0; i < y.size(); ++i) pred[i] += Eval(tree, x[i]);
    trees_.push_back(std::move(tree));
  }
  fitted_ = true;
}

int GradientBoostedTrees::Grow(const std::vector<std::vector<double>>& x, const std::vector<double>& r,
                               std::vector<size_t>& rows, size_t lo, size_t hi, int depth, Tree* tree) const {
  const int id = static_cast<int>(tree->size());
  tree->push_back({});
  double sum = 0.0;
  for (size_t i = lo; i < hi; ++i) sum += r[rows[i]];
  const double n = static_cast<double>(hi - lo);
  (*tree)[static_cast<size_t>(id)].value = sum / n;
  if (depth >= opts_.max_depth || hi - lo < 2 * static_cast<size_t>(opts_.min_leaf)) return id;

  // Best split by squared-error reduction; ties keep the first feature/threshold seen.
  const size_t num_features = x[rows[lo]].size();
  double best_gain = 1e-12;
  int best_feature = -1;
  double best_threshold = 0.0;
  std::vector<std::pair<double, double>> col(hi - lo);
  for (size_t f = 0; f < num_features; ++f) {
    for (size_t i = lo; i < hi; ++i) col[i - lo] = {x[rows[i]][f], r[rows[i]]};
    std::sort(col.begin(), col.end());
    double left_sum = 0.0;
    for (size_t i = 0; i + 1 < col.size(); ++i) {
      left_sum += col[i].second;
      if (col[i].first == col[i + 1].first) continue;
      const double nl = static_cast<double>(i + 1), nr = n - nl;
      if (nl < opts_.min_leaf || nr < opts_.min_leaf) continue;
      const double right_sum = sum - left_sum;
      const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - sum * sum / n;
      if (gain > best_gain) {
        best_gain = gain;
        best_feature = static_cast<int>(f);
        best_threshold = 0.5 * (col[i].first + col[i + 1].first);
      }
    }
  }
  if (best_feature < 0) return id;

  auto mid = std::stable_partition(rows.begin() + static_cast<std::ptrdiff_t>(lo),
                                   rows.begin() + static_cast<std::ptrdiff_t>(hi), [&](size_t row) {
                                     return x[row][static_cast<size_t>(best_feature)] < best_threshold;
                                   });
  const size_t split = static_cast<size_t>(mid - rows.begin());
  const int left = Grow(x, r, rows, lo, split, depth + 1, tree);
  const int right = Grow(x, r, rows, split, hi, depth + 1, tree);
  Node& node = (*tree)[static_cast<size_t>(id)];
  node.feature = best_feature;
  node.threshold = best_threshold;
  node.left = left;
  node.right = right;
  return id;
}

double GradientBoostedTrees::Eval(const Tree& t, const std::vector<double>& x) {
  int i = 0;
  while (t[static_cast<size_t>(i)].feature >= 0) {
    const Node& n = t[static_cast<size_t>(i)];
    i = x[static_cast<size_t>(n.feature)] < n.threshold ? n.left : n.right;
  }
  return t[static_cast<size_t>(i)].value;
}

double GradientBoostedTrees::Predict(const std::vector<double>& x) const {
  double v = base_;
  for (const auto& t : trees_) v += Eval(t, x);
  return v;
}

}  // namespace gemmtune
