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
 * \file gemmtune/matrix.h
 * \brief Dense row-major matrix used for operands and results.
 */
#ifndef GEMMTUNE_MATRIX_H_
#define GEMMTUNE_MATRIX_H_

#include <cstdint>
#include <vector>

namespace gemmtune {

template <typename T>
struct Matrix {
  int64_t rows{0};
  int64_t cols{0};
  std::vector<T> data;

  Matrix() = default;
  Matrix(int64_t r, int64_t c, T fill = T{})
      : rows(r), cols(c), data(static_cast<size_t>(r * c), fill) {}

  T& operator()(int64_t r, int64_t c) { return data[static_cast<size_t>(r * cols + c)]; }
  const T& operator()(int64_t r, int64_t c) const {
    return data[static_cast<size_t>(r * cols + c)];
  }
  bool empty() const { return data.empty(); }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
  }
};

using MatrixI8 = Matrix<int8_t>;
using MatrixI32 = Matrix<int32_t>;

}  // namespace gemmtune

#endif  // GEMMTUNE_MATRIX_H_
