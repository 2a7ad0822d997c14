#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace driftlab {

// Every failure the library raises carries one of these codes. The CLI maps
// them onto process exit codes (validation -> 2, runtime -> 3, io -> 4).
enum class Errc {
  invalid_spec,
  invalid_query,
  scenario_exhausted,
  insufficient_catalog,
  unsupported_topic,
  parse,
  remote_unavailable,
  seed_starvation,
  contract,
  insufficient_data,
  cohort_empty,
  fixture_shape,
  validation,
  io,
};

inline std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_spec: return "invalid-spec";
    case Errc::invalid_query: return "invalid-query";
    case Errc::scenario_exhausted: return "scenario-exhausted";
    case Errc::insufficient_catalog: return "insufficient-catalog";
    case Errc::unsupported_topic: return "unsupported-topic";
    case Errc::parse: return "parse";
    case Errc::remote_unavailable: return "remote-unavailable";
    case Errc::seed_starvation: return "seed-starvation";
    case Errc::contract: return "contract";
    case Errc::insufficient_data: return "insufficient-data";
    case Errc::cohort_empty: return "cohort-empty";
    case Errc::fixture_shape: return "fixture-shape";
    case Errc::validation: return "validation";
    case Errc::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

inline int exit_code_for(Errc c) {
  switch (c) {
    case Errc::invalid_spec:
    case Errc::invalid_query:
    case Errc::unsupported_topic:
    case Errc::cohort_empty:
    case Errc::fixture_shape:
    case Errc::validation:
      return 2;
    case Errc::io:
      return 4;
    default:
      return 3;
  }
}

}  // namespace driftlab
