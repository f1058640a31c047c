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

#ifndef EXMY_EXMY_HPP_
#define EXMY_EXMY_HPP_

#include "exmy/analysis.hpp"
#include "exmy/bitpack.hpp"
#include "exmy/block.hpp"
#include "exmy/codec.hpp"
#include "exmy/container.hpp"
#include "exmy/error.hpp"
#include "exmy/format.hpp"
#include "exmy/tensor.hpp"

#endif  // EXMY_EXMY_HPP_
