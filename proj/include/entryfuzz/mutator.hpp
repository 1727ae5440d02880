// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "entryfuzz/state.hpp"

namespace efz::mutate {

// One to three fields, one to eight bit positions each. Duplicate
// (field, bit) selections are legal and cancel through xor.
struct FieldMutation {
  uint16_t field;
  std::vector<uint8_t> bits;  // positions, each below the field width
};

struct MutationDirective {
  std::vector<FieldMutation> fields;
};

inline constexpr int kDirectiveSliceBytes = 16;

// Decodes a directive from fuzz bytes:
//   byte 0                 field count (mod 3, plus 1)
//   per field: 2 bytes     field selector (little endian)
//              1 byte      bit count (mod 8, plus 1)
//              <count> bytes  bit positions (mod field width)
// Bytes past the end of the slice read as zero. Throws
// std::invalid_argument when fewer than 16 bytes are supplied.
//
// `weights` optionally biases field selection; entries are per-field
// weights over the catalog and default to uniform.
MutationDirective parse_directive(std::span<const uint8_t> slice,
                                  std::span<const uint32_t> weights = {});

// Flips the selected bits. Involution: applying a directive twice
// restores the input.
VmState mutate(VmState s, const MutationDirective& d);

// Directive pretty-printer for crash reports.
std::string describe(const MutationDirective& d);

}  // namespace efz::mutate
