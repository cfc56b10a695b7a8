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

#include "dvlcal/nn/serialize.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "dvlcal/errors.hpp"
#include "dvlcal/kv_file.hpp"

namespace dvlcal::nn {

void write_tensors(std::ostream& out, const std::vector<NamedTensor>& tensors) {
  for (const auto& [name, t] : tensors) {
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
      throw DomainError("tensor name must be a non-empty token: '" + name + "'");
    }
    out << "tensor " << name << ' ' << t.rank();
    for (const auto d : t.shape()) out << ' ' << d;
    out << '\n';
    const auto values = t.values();
    for (std::size_t i = 0; i < values.size(); ++i) out << (i ? " " : "") << format_double(values[i]);
    out << '\n';
  }
}

std::vector<NamedTensor> read_tensors(std::istream& in) {
  std::vector<NamedTensor> out;
  std::string header;
  while (std::getline(in, header)) {
    if (header.empty()) continue;
    std::istringstream hs(header);
    std::string tag, name;
    std::size_t rank = 0;
    if (!(hs >> tag) || tag != "tensor") break;
    if (!(hs >> name >> rank)) throw DomainError("malformed tensor header: " + header);
    Shape shape(rank);
    for (auto& d : shape) {
      if (!(hs >> d)) throw DomainError("malformed tensor shape: " + header);
    }
    std::string line;
    if (!std::getline(in, line)) throw DomainError("missing values for tensor " + name);
    std::vector<double> values;
    values.reserve(shape_numel(shape));
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw DomainError("malformed value in tensor " + name);
      values.push_back(v);
      p = ptr;
    }
    if (values.size() != shape_numel(shape)) {
      throw DomainError("tensor " + name + " has " + std::to_string(values.size()) + " values, shape " +
                        shape_string(shape) + " needs " + std::to_string(shape_numel(shape)));
    }
    out.push_back({name, Tensor(std::move(shape), std::move(values))});
  }
  return out;
}

}  // namespace dvlcal::nn
