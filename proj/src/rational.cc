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

#include "gemmtune/rational.h"

#include <cmath>
#include <numeric>

#include "gemmtune/error.h"

namespace gemmtune {

int64_t DivRoundHalfAway(__int128 num, __int128 den) {
  if (num >= 0) return static_cast<int64_t>((2 * num + den) / (2 * den));
  return -static_cast<int64_t>((-2 * num + den) / (2 * den));
}

Rational::Rational(int64_t num, int64_t den) {
  if (den == 0) throw Error("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  int64_t g = std::gcd(num < 0 ? -num : num, den);
  if (g == 0) g = 1;
  num_ = num / g;
  den_ = den / g;
}

Rational Rational::FromDouble(double value, int64_t max_den) {
  if (!std::isfinite(value)) throw Error("non-finite scale factor");
  bool negative = value < 0;
  double x = std::fabs(value);
  // Convergents h/k of the continued fraction of x.
  int64_t h_prev = 1, h = static_cast<int64_t>(std::floor(x));
  int64_t k_prev = 0, k = 1;
  double frac = x - std::floor(x);
  while (frac > 1e-15) {
    double inv = 1.0 / frac;
    auto a = static_cast<int64_t>(std::floor(inv));
    if (a > max_den) break;
    int64_t k_next = a * k + k_prev;
    if (k_next > max_den) break;
    int64_t h_next = a * h + h_prev;
    h_prev = h;
    h = h_next;
    k_prev = k;
    k = k_next;
    if (std::fabs(static_cast<double>(h) / static_cast<double>(k) - x) == 0.0) break;
    frac = inv - std::floor(inv);
  }
  return Rational(negative ? -h : h, k);
}

Rational Rational::Parse(const std::string& text) {
  try {
    auto slash = text.find('/');
    if (slash == std::string::npos) {
      if (text.find('.') != std::string::npos) return FromDouble(std::stod(text));
      return Rational(std::stoll(text), 1);
    }
    return Rational(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
  } catch (const std::logic_error&) {
    throw ParseError("bad rational '" + text + "'");
  }
}

Rational Rational::Reciprocal() const {
  if (num_ == 0) throw Error("reciprocal of zero");
  return Rational(den_, num_);
}

std::string Rational::ToString() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational operator*(const Rational& a, const Rational& b) {
  // Cross-reduce first to keep intermediates in range.
  int64_t g1 = std::gcd(a.num_ < 0 ? -a.num_ : a.num_, b.den_);
  int64_t g2 = std::gcd(b.num_ < 0 ? -b.num_ : b.num_, a.den_);
  if (g1 == 0) g1 = 1;
  if (g2 == 0) g2 = 1;
  return Rational((a.num_ / g1) * (b.num_ / g2), (a.den_ / g2) * (b.den_ / g1));
}

Rational operator/(const Rational& a, const Rational& b) { return a * b.Reciprocal(); }

}  // namespace gemmtune
