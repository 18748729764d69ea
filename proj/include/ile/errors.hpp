// Copyright 2026 The ile Authors
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

#ifndef ILE_ERRORS_HPP
#define ILE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ile {

/// Caller supplied something that violates a precondition.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical procedure failed to reach its tolerance.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

/// Multimode expansion grew past the configured term cap.
class TermCapExceeded : public SolverError {
 public:
  explicit TermCapExceeded(const std::string& what) : SolverError(what) {}
};

/// Time stepping did not show the expected convergence order.
class IntegratorError : public SolverError {
 public:
  explicit IntegratorError(const std::string& what) : SolverError(what) {}
};

}  // namespace ile

#endif  // ILE_ERRORS_HPP
