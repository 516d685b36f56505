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
 * \file gemmtune/rational.h
 * \brief Exact rational scale factors and the rounding used on every requantization path.
 */
#ifndef GEMMTUNE_RATIONAL_H_
#define GEMMTUNE_RATIONAL_H_

#include <cstdint>
#include <string>

namespace gemmtune {

/*!
 * \brief Integer division rounded half away from zero. `den` must be positive.
 */
int64_t DivRoundHalfAway(__int128 num, __int128 den);

/*! \brief Saturate to the signed 8-bit range. */
inline int8_t SaturateInt8(int64_t v) {
  if (v > 127) return 127;
  if (v < -128) return -128;
  return static_cast<int8_t>(v);
}

/*! \brief Saturate to the signed 32-bit range. */
inline int32_t SaturateInt32(int64_t v) {
  if (v > INT32_MAX) return INT32_MAX;
  if (v < INT32_MIN) return INT32_MIN;
  return static_cast<int32_t>(v);
}

/*!
 * \brief Normalized fraction num/den with den > 0 and gcd(num, den) = 1.
 */
class Rational {
 public:
  Rational() = default;
  Rational(int64_t num, int64_t den = 1);  // NOLINT(runtime/explicit)

  /*!
   * \brief Closest fraction to `value` with denominator at most `max_den`
   *        (continued-fraction expansion; exact for dyadic values that fit).
   */
  static Rational FromDouble(double value, int64_t max_den = int64_t{1} << 20);

  /*! \brief Parse "p/q" or "p". */
  static Rational Parse(const std::string& text);

  int64_t num() const { return num_; }
  int64_t den() const { return den_; }
  double ToDouble() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  bool IsInteger() const { return den_ == 1; }
  bool IsOne() const { return num_ == 1 && den_ == 1; }

  Rational Reciprocal() const;

  /*! \brief round_half_away(x * this). */
  int64_t ScaleRound(int64_t x) const { return DivRoundHalfAway(static_cast<__int128>(x) * num_, den_); }

  /*! \brief "p/q", or "p" when the denominator is one. */
  std::string ToString() const;

  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator<(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
  }

 private:
  int64_t num_{1};
  int64_t den_{1};
};

}  // namespace gemmtune

#endif  // GEMMTUNE_RATIONAL_H_
