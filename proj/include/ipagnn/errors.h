// Copyright 2026 The ipagnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace ipagnn {

// Root of every error the library raises. The CLI maps subclasses to exit
// codes through `Error::category()`.
class Error : public std::runtime_error {
 public:
  enum class Category { kData, kNumeric, kUsage };

  explicit Error(const std::string& what, Category category = Category::kData)
      : std::runtime_error(what), category_(category) {}

  Category category() const { return category_; }

 private:
  Category category_;
};

class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string& message)
      : Error("parse error at " + std::to_string(line) + ":" +
              std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class IndentationError : public ParseError {
 public:
  IndentationError(int line, int column, const std::string& message)
      : ParseError(line, column, "indentation: " + message) {}
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

class CfgError : public Error {
 public:
  using Error::Error;
};

class ExecutionError : public Error {
 public:
  using Error::Error;
};

class StepLimitExceeded : public ExecutionError {
 public:
  explicit StepLimitExceeded(long long limit)
      : ExecutionError("step limit exceeded: " + std::to_string(limit)) {}
};

class UndefinedVariable : public ExecutionError {
 public:
  UndefinedVariable(int var, int node)
      : ExecutionError("undefined variable v" + std::to_string(var) +
                       " at node " + std::to_string(node)) {}
};

class SchemaError : public Error {
 public:
  SchemaError(const std::string& field, const std::string& message)
      : Error("schema violation in field '" + field + "': " + message),
        field_(field) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what)
      : Error(what, Category::kNumeric) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(what, Category::kNumeric) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what)
      : Error(what, Category::kUsage) {}
};

}  // namespace ipagnn
