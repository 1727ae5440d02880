// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#include "entryfuzz/mutator.hpp"

#include <numeric>
#include <stdexcept>

namespace efz::mutate {

MutationDirective parse_directive(std::span<const uint8_t> slice,
                                  std::span<const uint32_t> weights) {
  if (slice.size() < kDirectiveSliceBytes)
    throw std::invalid_argument("short-input: directive needs 16 bytes");
  if (!weights.empty() && weights.size() != catalog().size())
    throw std::invalid_argument("weight table must cover the catalog");

  size_t pos = 0;
  auto next = [&]() -> uint8_t {
    return pos < slice.size() ? slice[pos++] : 0;
  };

  uint64_t total_weight = 0;
  if (!weights.empty())
    total_weight = std::accumulate(weights.begin(), weights.end(),
                                   uint64_t{0});

  MutationDirective d;
  int field_count = next() % 3 + 1;
  d.fields.reserve(field_count);
  for (int f = 0; f < field_count; ++f) {
    uint16_t sel = next();
    sel = static_cast<uint16_t>(sel | next() << 8);
    uint16_t field;
    if (total_weight == 0) {
      field = sel % kFieldCount;
    } else {
      uint64_t r = sel % total_weight;
      field = 0;
      for (uint16_t i = 0; i < weights.size(); ++i) {
        if (r < weights[i]) {
          field = i;
          break;
        }
        r -= weights[i];
      }
    }
    FieldMutation fm;
    fm.field = field;
    int bit_count = next() % 8 + 1;
    uint8_t width = catalog()[field].width;
    fm.bits.reserve(bit_count);
    for (int b = 0; b < bit_count; ++b) fm.bits.push_back(next() % width);
    d.fields.push_back(std::move(fm));
  }
  return d;
}

VmState mutate(VmState s, const MutationDirective& d) {
  for (const auto& fm : d.fields) {
    uint64_t v = s.read(fm.field);
    for (uint8_t bit : fm.bits) v ^= 1ull << bit;
    s.write(fm.field, v);
  }
  return s;
}

std::string describe(const MutationDirective& d) {
  std::string out;
  for (const auto& fm : d.fields) {
    if (!out.empty()) out += "; ";
    out += catalog()[fm.field].name;
    out += " bits";
    for (uint8_t b : fm.bits) {
      out += ' ';
      out += std::to_string(b);
    }
  }
  return out;
}

}  // namespace efz::mutate
