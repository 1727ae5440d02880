// Copyright 2026 the entryfuzz authors. All rights reserved.
// Use of this source code is governed by the Apache-2.0 license that can be
// found in the LICENSE file.

#include <json.hpp>

#include "entryfuzz/caps.hpp"
#include "entryfuzz/checks.hpp"
#include "entryfuzz/harness.hpp"
#include "entryfuzz/oracle.hpp"
#include "entryfuzz/state.hpp"
#include "entryfuzz/validator.hpp"

namespace efz {

using json = nlohmann::json;

std::string catalog_json() {
  json fields = json::array();
  for (const auto& f : catalog()) {
    json checks = json::array();
    for (uint16_t c : f.constraint_ids)
      checks.push_back(
          std::string(vmcheck::check_name(static_cast<CheckId>(c))));
    fields.push_back({{"id", f.id},
                      {"name", f.name},
                      {"width", f.width},
                      {"group", std::string(to_string(f.group))},
                      {"checks", checks}});
  }
  json j;
  j["field_count"] = catalog().size();
  j["total_bits"] = catalog().total_bits();
  j["fields"] = fields;
  return j.dump(2);
}

}  // namespace efz

namespace efz::vmcheck {

std::string check_catalog_json() {
  json checks = json::array();
  for (const auto& info : check_catalog()) {
    json fields = json::array();
    for (const auto& f : catalog())
      for (uint16_t c : f.constraint_ids)
        if (c == info.id) fields.push_back(f.name);
    checks.push_back(
        {{"id", static_cast<int>(info.id)},
         {"name", std::string(info.name)},
         {"group", std::string(to_string(info.group))},
         {"kind", info.kind == CheckKind::Protocol ? "protocol" : "state"},
         {"description", std::string(info.description)},
         {"fields", fields}});
  }
  json j;
  j["check_count"] = check_catalog().size();
  j["checks"] = checks;
  return j.dump(2);
}

std::string report_json(const ValidationReport& r) {
  json violations = json::array();
  for (const auto& v : r.violations) {
    json fields = json::array();
    for (uint16_t f : v.fields) fields.push_back(catalog()[f].name);
    violations.push_back({{"check", std::string(check_name(v.check))},
                          {"fields", fields},
                          {"observed", v.detail}});
  }
  json j;
  j["valid"] = r.ok();
  j["violations"] = violations;
  return j.dump(2);
}

}  // namespace efz::vmcheck

namespace efz::caps {

std::string profile_json(const CapabilityProfile& p) {
  json features = json::array();
  for (int f = 0; f < kFeatureCount; ++f)
    if (p.feature_bits >> f & 1)
      features.push_back(
          std::string(feature_name(static_cast<FeatureId>(f))));
  auto mask = [](const ControlMask& m) {
    char a0[20], a1[20];
    std::snprintf(a0, sizeof a0, "0x%llx",
                  static_cast<unsigned long long>(m.allowed0));
    std::snprintf(a1, sizeof a1, "0x%llx",
                  static_cast<unsigned long long>(m.allowed1));
    return json{{"allowed0", a0}, {"allowed1", a1}};
  };
  json j;
  j["feature_bits"] = p.feature_bits;
  j["features"] = features;
  j["phys_addr_width"] = p.phys_addr_width;
  j["masks"] = {{"pin", mask(p.pin)},
                {"primary", mask(p.primary)},
                {"secondary", mask(p.secondary)},
                {"entry", mask(p.entry)},
                {"exit", mask(p.exit)}};
  return j.dump(2);
}

}  // namespace efz::caps

namespace efz::oracle {

std::string bug_catalog_json() {
  json bugs = json::array();
  for (const auto& b : seeded_bug_catalog())
    bugs.push_back({{"id", static_cast<int>(b.id)},
                    {"name", std::string(b.name)},
                    {"mapped_check",
                     std::string(vmcheck::check_name(b.mapped_check))},
                    {"detection", b.detection == BugDetection::Crash
                                      ? "crash"
                                      : "diagnostic-pattern"},
                    {"trigger", std::string(b.trigger)}});
  json j;
  j["bug_count"] = seeded_bug_catalog().size();
  j["bugs"] = bugs;
  return j.dump(2);
}

std::string edge_table_json() {
  json edges = json::object();
  auto put = [&](uint32_t domain, uint32_t a, uint32_t b,
                 const std::string& name) {
    uint16_t slot = edge_slot(domain, a, b);
    std::string key = std::to_string(slot);
    if (edges.contains(key))
      edges[key] = edges[key].get<std::string>() + "|" + name;
    else
      edges[key] = name;
  };

  static const char* check_branch[] = {"pass", "fail", "gate-skip",
                                       "bug-skip", "feature-skip"};
  for (const auto& info : vmcheck::check_catalog())
    for (uint32_t b = 0; b < 5; ++b)
      put(ED_CHECK, info.id, b,
          "check/" + std::string(info.name) + "/" + check_branch[b]);

  static const char* op_status[] = {"ok", "vmfail", "accept", "reject",
                                    "crash"};
  for (uint32_t op = 0; op < 7; ++op)
    for (uint32_t s = 0; s < 5; ++s) {
      std::string base = "op/";
      base += harness::op_name(static_cast<harness::OpCode>(op));
      put(ED_OP, op, s, base + "/" + op_status[s]);
      put(ED_OP, op, s + 8, base + "/post-launch-" + op_status[s]);
    }

  static const char* entry_sites[] = {"entry-start",   "silent-round",
                                      "translate",     "reject-inject",
                                      "resume-cached", "late-diagnostic",
                                      "feature-dispatch"};
  for (uint32_t site = 0; site < 7; ++site) {
    if (site == 1) {
      for (const auto& f : catalog())
        put(ED_ENTRY, site, f.id,
            std::string("entry/silent-round/") + f.name);
      continue;
    }
    uint32_t branches = 2;
    if (site == 2) branches = 16;  // translate flavor bits
    if (site == 6) branches = 2 * caps::kFeatureCount;
    for (uint32_t b = 0; b < branches; ++b)
      put(ED_ENTRY, site, b,
          std::string("entry/") + entry_sites[site] + "/" +
              std::to_string(b));
  }

  for (uint32_t k = 0; k < harness::kTriggerKinds; ++k)
    for (uint32_t sub = 0; sub < 16; ++sub)
      for (uint32_t b = 0; b < 2; ++b)
        put(ED_TRIGGER, k * 16 + sub, b,
            "trigger/" +
                std::string(harness::trigger_name(
                    static_cast<harness::TriggerKind>(k))) +
                "/" + std::to_string(sub) + (b ? "/exit" : "/no-exit"));

  for (uint32_t b = 0; b < kBugCount; ++b)
    put(ED_BUG, b, 0,
        "bug/" + std::string(bug_name(static_cast<BugId>(b))));

  json j;
  j["slots"] = edges;
  return j.dump(2);
}

}  // namespace efz::oracle
