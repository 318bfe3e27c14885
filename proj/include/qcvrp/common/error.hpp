// Copyright 2026 The qcvrp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace qcvrp {

// Root of all errors raised by the core library. The C API maps each
// subclass onto a distinct status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor extents do not fit the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A caller broke a precondition (bad index, wrong length, missing key).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Invalid or inconsistent configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// No feasible action exists where one is required.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Amplitude embedding could not be formed (zero norm or too few qubits).
class EmbeddingError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite values appeared during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace qcvrp
