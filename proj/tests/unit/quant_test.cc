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

#include <doctest.h>

#include <fstream>
#include <random>

#include <json.hpp>

#include "gemmtune/quant.h"

using namespace gemmtune;

namespace {

QuantizedGemmProblem OneByTwo() {
  QuantizedGemmProblem q;
  q.q_a = MatrixI8(1, 2);
  q.q_a(0, 0) = 3;
  q.q_a(0, 1) = 5;
  q.q_b = MatrixI8(2, 1);
  q.q_b(0, 0) = 4;
  q.q_b(1, 0) = 6;
  q.q_d = MatrixI32(1, 1, 0);
  q.zp_a = 2;
  return q;
}

template <typename T>
Matrix<T> FromJson(const nlohmann::json& rows) {
  Matrix<T> m(static_cast<int64_t>(rows.size()), static_cast<int64_t>(rows.at(0).size()));
  for (int64_t r = 0; r < m.rows; ++r) {
    for (int64_t c = 0; c < m.cols; ++c) m(r, c) = rows.at(r).at(c).get<T>();
  }
  return m;
}

}  // namespace

TEST_SUITE("quant") {
  TEST_CASE("hand examples") {
    auto q = OneByTwo();
    CHECK(ReferenceQgemm(q)(0, 0) == 22);
    CHECK(FoldedQgemm(q)(0, 0) == 22);

    q.zp_c = 5;
    q.s_d = Rational(1);
    q.s_c = Rational(2);
    CHECK(ReferenceQgemm(q)(0, 0) == 16);

    // Column sum of B is 10; with D = 7 the folded bias is 7 - 20 + 2*5.
    q.q_d(0, 0) = 7;
    CHECK(FoldCorrectedBias(q)(0, 0) == -3);
    CHECK(FoldedAccumulator(q)(0, 0) == 39);
    CHECK(FoldedQgemm(q)(0, 0) == 20);
    CHECK(ReferenceQgemm(q)(0, 0) == 20);
  }

  TEST_CASE("zero points vanish") {
    auto q = RandomProblem({5, 7, 9}, 4);
    q.zp_a = 0;
    q.zp_c = 0;
    CHECK(FoldCorrectedBias(q) == q.q_d);
    q.s_d = q.s_c = Rational(1);
    q.q_d = MatrixI32(5, 7, 0);
    const auto c = ReferenceQgemm(q);
    for (int64_t i = 0; i < 5; ++i) {
      for (int64_t j = 0; j < 7; ++j) {
        int64_t acc = 0;
        for (int64_t t = 0; t < 9; ++t) acc += int64_t{q.q_a(i, t)} * q.q_b(t, j);
        CHECK(c(i, j) == SaturateInt8(acc));
        CHECK(FoldedQgemm(q)(i, j) == c(i, j));
      }
    }
  }

  TEST_CASE("fixture vectors computed in exact arithmetic") {
    std::ifstream in(GEMMTUNE_SOURCE_DIR "/tests/fixtures/quant_vectors.json");
    REQUIRE(in);
    const auto cases = nlohmann::json::parse(in);
    REQUIRE(cases.size() == 64);
    for (const auto& c : cases) {
      QuantizedGemmProblem q;
      q.q_a = FromJson<int8_t>(c.at("a"));
      q.q_b = FromJson<int8_t>(c.at("b"));
      q.q_d = FromJson<int32_t>(c.at("d"));
      q.zp_a = c.at("zp_a").get<int32_t>();
      q.zp_c = c.at("zp_c").get<int32_t>();
      q.s_d = Rational::Parse(c.at("s_d").get<std::string>());
      q.s_c = Rational::Parse(c.at("s_c").get<std::string>());
      const auto expect = FromJson<int8_t>(c.at("c"));
      CHECK(ReferenceQgemm(q) == expect);
      const auto folded = FoldedQgemm(q);
      for (size_t i = 0; i < expect.data.size(); ++i) CHECK(std::abs(folded.data[i] - expect.data[i]) <= 1);
    }
  }

  TEST_CASE("folded form within one step, exact for integral zero-point term") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 300; ++i) {
      const Workload w{static_cast<int64_t>(rng() % 12 + 1), static_cast<int64_t>(rng() % 12 + 1),
                       static_cast<int64_t>(rng() % 40 + 1)};
      RandomProblemOptions opts;
      opts.integral_zero_point_term = i % 2 == 0;
      const auto q = RandomProblem(w, rng(), opts);
      const auto ref = ReferenceQgemm(q);
      const auto folded = FoldedQgemm(q);
      for (size_t e = 0; e < ref.data.size(); ++e) {
        CHECK(std::abs(ref.data[e] - folded.data[e]) <= 1);
        CHECK(ref.data[e] >= -128);
        CHECK(ref.data[e] <= 127);
      }
      if (opts.integral_zero_point_term) {
        CHECK((q.s_c / q.s_d * Rational(q.zp_c)).IsInteger());
        CHECK(ref == folded);
      }
    }
  }

  TEST_CASE("saturation") {
    QuantizedGemmProblem q;
    q.q_a = MatrixI8(1, 4, 127);
    q.q_b = MatrixI8(4, 2, 127);
    q.q_b(0, 1) = q.q_b(1, 1) = q.q_b(2, 1) = q.q_b(3, 1) = -128;
    q.q_d = MatrixI32(1, 2, 0);
    const auto c = ReferenceQgemm(q);
    CHECK(c(0, 0) == 127);
    CHECK(c(0, 1) == -128);
    CHECK(FoldedQgemm(q) == c);
  }

  TEST_CASE("correction term does not depend on A") {
    auto q = RandomProblem({6, 5, 11}, 21);
    const auto bias = FoldCorrectedBias(q);
    auto other = q;
    for (auto& v : other.q_a.data) v = static_cast<int8_t>(-v / 2 + 3);
    CHECK(FoldCorrectedBias(other) == bias);
    for (int64_t j = 0; j < 5; ++j) {
      int64_t colsum = 0;
      for (int64_t t = 0; t < 11; ++t) colsum += q.q_b(t, j);
      const int64_t corr = bias(0, j) - q.q_d(0, j);
      for (int64_t i = 1; i < 6; ++i) CHECK(bias(i, j) - q.q_d(i, j) == corr);
      const Rational zp_term = q.s_c / q.s_d * Rational(q.zp_c);
      CHECK(std::abs(corr + q.zp_a * colsum - zp_term.ToDouble()) <= 0.5 + 1e-9);
    }
  }

  TEST_CASE("shape checks") {
    auto q = RandomProblem({4, 4, 4}, 0);
    q.q_b = MatrixI8(5, 4);
    CHECK_THROWS_AS(ReferenceQgemm(q), ShapeMismatch);
    CHECK_THROWS_AS(FoldedQgemm(q), ShapeMismatch);
    auto neg = RandomProblem({4, 4, 4}, 0);
    neg.s_c = Rational(-1);
    CHECK_THROWS_AS(neg.Check(), Error);
  }
}
