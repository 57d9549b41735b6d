#pragma once

#include <nlohmann/json.hpp>

#include <ostream>
#include <span>
#include <string>

#include "sik/eval.hpp"
#include "sik/io.hpp"

namespace sik {

// Report records. The first eight fields are fixed: method, psi, t, seed,
// auroc, fit_seconds, score_seconds, feature_bytes. `contamination` follows.

inline nlohmann::ordered_json to_json(const ExperimentReport& r) {
  nlohmann::ordered_json j;
  j["method"] = std::string(to_string(r.method));
  j["psi"] = r.psi;
  j["t"] = r.t;
  j["seed"] = r.seed;
  j["auroc"] = r.auroc;
  j["fit_seconds"] = r.fit_seconds;
  j["score_seconds"] = r.score_seconds;
  j["feature_bytes"] = r.feature_bytes;
  j["contamination"] = r.contamination;
  return j;
}

inline nlohmann::ordered_json to_json(const ScalingRow& r) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["sik_fit_seconds"] = r.sik_fit_seconds;
  j["sik_score_seconds"] = r.sik_score_seconds;
  j["idk_fit_seconds"] = r.idk_fit_seconds;
  j["idk_score_seconds"] = r.idk_score_seconds;
  j["sik_feature_bytes"] = r.sik_feature_bytes;
  j["ik_dense_feature_bytes"] = r.ik_dense_feature_bytes;
  return j;
}

template <typename Record>
void write_jsonl(std::ostream& out, std::span<const Record> records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

/// CSV with a header row taken from the JSON field order.
template <typename Record>
void write_csv(std::ostream& out, std::span<const Record> records) {
  if (records.empty()) return;
  bool first = true;
  const auto header = to_json(records.front());
  for (const auto& item : header.items()) {
    out << (first ? "" : ",") << item.key();
    first = false;
  }
  out << '\n';
  for (const auto& r : records) {
    first = true;
    const auto row = to_json(r);
    for (const auto& item : row.items()) {
      out << (first ? "" : ",");
      first = false;
      const auto& v = item.value();
      if (v.is_string()) {
        out << v.template get<std::string>();
      } else if (v.is_number_float()) {
        out << detail::format_double(v.template get<double>());
      } else {
        out << v.dump();
      }
    }
    out << '\n';
  }
}

}  // namespace sik
