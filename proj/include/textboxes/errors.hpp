// Copyright 2026 The TextBoxes-Desk Authors. All Rights Reserved.
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

namespace textboxes {

// Base of all library errors. The CLI maps each subclass to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor/layer shape disagreement. Messages carry both shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Caller supplied an argument outside an operation's domain.
class InputError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated file contents. Messages name the file and,
// where meaningful, the line.
class ParseError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf reached a place where only finite values are legal.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace textboxes
