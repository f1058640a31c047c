// Copyright 2026 The eXmY Authors
// SPDX-License-Identifier: Apache-2.0
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

#ifndef EXMY_TENSOR_HPP_
#define EXMY_TENSOR_HPP_

// Dense 2D tensor types. Everything in the library blocks, packs and
// serializes row-major (R, C) views; higher-rank shapes are flattened to
// (product of leading dims, last dim).

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace exmy {

using Index = Eigen::Index;

template <typename Scalar>
using Tensor2 =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Tensor2f = Tensor2<float>;
using Tensor2bf = Tensor2<Eigen::bfloat16>;
// Staged codes, one element per value, low k bits significant.
using CodeMatrix = Tensor2<std::uint32_t>;

using Dims = std::vector<std::uint32_t>;

struct Shape2D {
  Index rows = 0;
  Index cols = 0;
};

// (leading-dims product, last dim). Rank 0 is a single element.
inline Shape2D view_2d(const Dims& dims) {
  if (dims.empty()) return {1, 1};
  Index rows = 1;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) rows *= dims[i];
  return {rows, static_cast<Index>(dims.back())};
}

inline std::uint64_t element_count(const Dims& dims) {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

// Widen to fp32. Exact for float and bfloat16 inputs.
template <typename Derived>
Tensor2f to_float(const Eigen::MatrixBase<Derived>& t) {
  return t.template cast<float>();
}

}  // namespace exmy

#endif  // EXMY_TENSOR_HPP_
