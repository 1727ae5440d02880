// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#include <doctest.h>

#include <bit>
#include <random>
#include <set>

#include "entryfuzz/state.hpp"

using namespace efz;

namespace {

VmState random_state(std::mt19937_64& rng) {
  VmState s;
  for (uint16_t f = 0; f < kFieldCount; ++f) s.write(f, rng());
  return s;
}

// Independent distance oracle: popcount over the xor of the encodings.
int blob_hamming(const VmState& a, const VmState& b) {
  StateBlob ba = encode(a), bb = encode(b);
  int bits = 0;
  for (size_t i = 0; i < ba.size(); ++i)
    bits += std::popcount(uint8_t(ba[i] ^ bb[i]));
  return bits;
}

}  // namespace

TEST_CASE("catalog has 165 fields over exactly 8000 bits") {
  CHECK(catalog().size() == 165);
  CHECK(catalog().total_bits() == 8000);
  CHECK(catalog()[0].id == 0);

  std::set<uint16_t> ids;
  std::set<std::string> names;
  int width_sum = 0;
  for (const auto& f : catalog()) {
    CHECK((f.width == 16 || f.width == 32 || f.width == 64));
    ids.insert(f.id);
    names.insert(f.name);
    width_sum += f.width;
  }
  CHECK(ids.size() == 165);
  CHECK(*ids.rbegin() == 164);  // dense in [0, 165)
  CHECK(names.size() == 165);
  CHECK(width_sum == 8000);
}

TEST_CASE("two catalog constructions are field-for-field identical") {
  FieldCatalog a = make_catalog();
  FieldCatalog b = make_catalog();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i)
    CHECK(a[uint16_t(i)] == b[uint16_t(i)]);
}

TEST_CASE("field accessors mask to width") {
  VmState zero;
  for (uint16_t f = 0; f < kFieldCount; ++f) CHECK(read_field(zero, f) == 0);

  // 16-bit field truncation: the masking oracle is modular arithmetic.
  uint16_t f16 = uint16_t(catalog().find("VIRTUAL_PROCESSOR_ID"));
  VmState s = write_field(zero, f16, 0x1FFFF);
  CHECK(read_field(s, f16) == (0x1FFFFull % (1ull << 16)));
  CHECK(read_field(s, f16) == 0xFFFF);

  // Writing 2^width stores zero.
  VmState t = write_field(zero, f16, 1ull << 16);
  CHECK(read_field(t, f16) == 0);

  CHECK_THROWS(read_field(zero, 165));
  CHECK_THROWS(write_field(zero, 165, 1));
}

TEST_CASE("writes are identities and commute on distinct fields") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    VmState s = random_state(rng);
    uint16_t f = uint16_t(rng() % kFieldCount);
    CHECK(write_field(s, f, read_field(s, f)) == s);

    uint16_t g = uint16_t(rng() % kFieldCount);
    if (f == g) continue;
    uint64_t vf = rng(), vg = rng();
    VmState ab = write_field(write_field(s, f, vf), g, vg);
    VmState ba = write_field(write_field(s, g, vg), f, vf);
    CHECK(ab == ba);
  }

  // No operation can produce a value at or above 2^width.
  std::mt19937_64 rng2(8);
  VmState s = random_state(rng2);
  for (const auto& f : catalog())
    CHECK(s.read(f.id) <= f.value_mask());
}

TEST_CASE("blob codec round-trips 10000 random states") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 10000; ++i) {
    VmState s = random_state(rng);
    CHECK(decode(encode(s)) == s);
  }
  VmState zero;
  StateBlob z = encode(zero);
  for (uint8_t b : z) CHECK(b == 0);

  std::vector<uint8_t> short_blob(999, 0);
  CHECK_THROWS(decode(short_blob));
}

TEST_CASE("flipping one blob bit changes exactly one field by one bit") {
  std::mt19937_64 rng(43);
  for (int i = 0; i < 500; ++i) {
    VmState s = random_state(rng);
    StateBlob blob = encode(s);
    size_t byte = rng() % blob.size();
    int bit = int(rng() % 8);
    blob[byte] ^= uint8_t(1u << bit);
    VmState t = decode(blob);
    int fields_changed = 0;
    for (uint16_t f = 0; f < kFieldCount; ++f) {
      uint64_t diff = s.read(f) ^ t.read(f);
      if (diff) {
        ++fields_changed;
        CHECK(std::popcount(diff) == 1);
      }
    }
    CHECK(fields_changed == 1);
  }
}

TEST_CASE("hamming distance is a metric and matches the blob oracle") {
  std::mt19937_64 rng(44);
  VmState zero;

  // Analytic example: one 16-bit field holding 0x0F vs 0xF0 differs by 8.
  uint16_t f16 = uint16_t(catalog().find("GUEST_INTERRUPT_STATUS"));
  VmState a = write_field(zero, f16, 0x0F);
  VmState b = write_field(zero, f16, 0xF0);
  CHECK(hamming_distance(a, b) == 8);

  for (int i = 0; i < 300; ++i) {
    VmState x = random_state(rng);
    VmState y = random_state(rng);
    VmState z = random_state(rng);
    CHECK(hamming_distance(x, x) == 0);
    CHECK(hamming_distance(x, y) == hamming_distance(y, x));
    CHECK(hamming_distance(x, y) > 0);  // equality is astronomically unlikely
    CHECK(hamming_distance(x, z) <=
          hamming_distance(x, y) + hamming_distance(y, z));
    CHECK(hamming_distance(x, y) == blob_hamming(x, y));
  }
}
