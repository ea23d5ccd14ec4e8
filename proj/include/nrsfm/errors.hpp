// Copyright 2026 The nrsfm Authors
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

namespace nrsfm {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite or otherwise malformed input data.
class DataValidationError : public Error {
 public:
  using Error::Error;
};

// Operand dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A camera block violates row orthonormality.
class RotationValidityError : public Error {
 public:
  RotationValidityError(int frame, const std::string& what)
      : Error(what), frame_(frame) {}
  int frame() const noexcept { return frame_; }

 private:
  int frame_;
};

// A camera block is rank deficient and cannot be projected.
class DegenerateRotationError : public Error {
 public:
  DegenerateRotationError(int frame, const std::string& what)
      : Error(what), frame_(frame) {}
  int frame() const noexcept { return frame_; }

 private:
  int frame_;
};

class UnsupportedOrderError : public Error {
 public:
  using Error::Error;
};

// The regularized normal system is singular.
class RankDeficiencyError : public Error {
 public:
  using Error::Error;
};

// Tracks do not carry enough motion for rigid factorization.
class DegenerateMotionError : public Error {
 public:
  using Error::Error;
};

class EstimationFailureError : public Error {
 public:
  using Error::Error;
};

// A ground-truth frame has zero norm after centering.
class NormalizationError : public Error {
 public:
  using Error::Error;
};

// File-system or format failure while reading or writing datasets.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace nrsfm
