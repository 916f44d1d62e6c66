// Copyright 2026 The Orchestra Authors.
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

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "orchestra/error.hpp"

namespace orchestra {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorX<double>;
using Matrix = MatrixX<double>;
// Storage precision for persisted state.
using VectorF = VectorX<float>;
using MatrixF = MatrixX<float>;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.derived().array().isFinite().all();
}

template <typename DA, typename DB>
void require_same_size(const Eigen::DenseBase<DA>& a, const Eigen::DenseBase<DB>& b,
                       const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": dimension mismatch (" + std::to_string(a.rows()) +
                     "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
  }
}

/// Cosine similarity of two equally sized arrays, computed in double.
/// A zero operand yields 0.
template <typename DA, typename DB>
double cosine(const Eigen::DenseBase<DA>& a, const Eigen::DenseBase<DB>& b) {
  require_same_size(a, b, "cosine");
  const auto ad = a.derived().template cast<double>();
  const auto bd = b.derived().template cast<double>();
  const double na = std::sqrt(ad.array().square().sum());
  const double nb = std::sqrt(bd.array().square().sum());
  if (na == 0.0 || nb == 0.0) return 0.0;
  return (ad.array() * bd.array()).sum() / (na * nb);
}

/// Column-major flattening of any dense expression into a vector.
template <typename Derived>
VectorX<typename Derived::Scalar> flatten(const Eigen::DenseBase<Derived>& m) {
  VectorX<typename Derived::Scalar> out(m.size());
  Eigen::Map<MatrixX<typename Derived::Scalar>>(out.data(), m.rows(), m.cols()) = m;
  return out;
}

}  // namespace orchestra
