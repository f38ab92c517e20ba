// Copyright 2026 The zoneppi Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ZONEPPI_ERROR_H_
#define ZONEPPI_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace zoneppi {

// Base class for recoverable data and runtime failures. Precondition
// violations on API arguments throw std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A required input column is missing or the header is malformed.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// The input as a whole is unusable (empty, unreadable, inconsistent).
class DatasetError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::size_t lambda_index)
      : Error(what), lambda_index_(lambda_index) {}
  std::size_t lambda_index() const { return lambda_index_; }

 private:
  std::size_t lambda_index_;
};

}  // namespace zoneppi

#endif  // ZONEPPI_ERROR_H_
