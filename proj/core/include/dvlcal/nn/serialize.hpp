// Copyright 2026 The dvlcal Authors
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

#include <iosfwd>
#include <vector>

#include "dvlcal/nn/grad_check.hpp"

namespace dvlcal::nn {

/// Text records, one per parameter:
///   tensor <name> <rank> <d0> ... <d(rank-1)>
///   <row-major values, 17 significant digits, space separated>
/// Reading back reproduces every value bit-exactly.
void write_tensors(std::ostream& out, const std::vector<NamedTensor>& tensors);

/// Reads records until end of stream or a line that does not start with "tensor".
/// Throws DomainError on malformed input.
std::vector<NamedTensor> read_tensors(std::istream& in);

}  // namespace dvlcal::nn
