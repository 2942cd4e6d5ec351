/*
 * Copyright 2026 The msngo Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace msngo {

// Base for every error raised by the library. Derived types name the failure
// class so callers (and the CLI) can map them to diagnostics.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A configuration value is outside its documented range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input text or binary payload.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Inputs are individually well formed but inconsistent with each other
// (unknown GO ids, misaligned protein tables, ...).
class IngestError : public Error {
 public:
  using Error::Error;
};

// NaN/inf encountered where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

inline std::string at_line(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

}  // namespace msngo
