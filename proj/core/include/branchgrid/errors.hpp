// Copyright 2026 The branchgrid Authors.
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

#ifndef BRANCHGRID_ERRORS_HPP_
#define BRANCHGRID_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace branchgrid {

// Input text could not be parsed. The message carries line context where
// one exists.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parsed input violates a documented invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad run configuration (unknown keys, missing paths, incompatible
// checkpoint). Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The conic solver did not reach the requested tolerance.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, int iterations)
      : std::runtime_error(what), iterations_(iterations) {}
  int iterations() const { return iterations_; }

 private:
  int iterations_;
};

// Replay buffer holds fewer transitions than requested.
class Underfilled : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace branchgrid

#endif  // BRANCHGRID_ERRORS_HPP_
