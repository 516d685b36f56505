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
 * \file gemmtune/error.h
 * \brief Exception types shared by every gemmtune module.
 */
#ifndef GEMMTUNE_ERROR_H_
#define GEMMTUNE_ERROR_H_

#include <stdexcept>
#include <string>
#include <vector>

namespace gemmtune {

/*! \brief Base class of all errors raised by the library. */
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/*! \brief Operand shapes disagree with each other or with the workload. */
class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/*! \brief A schedule space (or tuning job) has no valid point. */
class EmptySpace : public Error {
 public:
  using Error::Error;
};

/*! \brief Malformed input file or listing. */
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace gemmtune

#endif  // GEMMTUNE_ERROR_H_
