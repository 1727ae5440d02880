// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "entryfuzz/check_ids.hpp"
#include "entryfuzz/state.hpp"

namespace efz::vmcheck {

enum class CheckKind : uint8_t {
  Protocol,  // VMX instruction-sequencing rejection, not a state predicate
  State,     // predicate over VM-state fields
};

struct CheckInfo {
  CheckId id;
  std::string_view name;
  FieldGroup group;
  CheckKind kind;
  std::string_view description;
};

// The full check catalog, ordered by id. Ids double as evaluation order
// within each group. docs/checks.md carries the normative rule text.
const std::vector<CheckInfo>& check_catalog();

const CheckInfo& check_info(CheckId id);
std::string_view check_name(CheckId id);

// Check-catalog dump (id, name, group, kind, description, fields) as JSON.
std::string check_catalog_json();

}  // namespace efz::vmcheck
