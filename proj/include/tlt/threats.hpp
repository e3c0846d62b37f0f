#pragma once

// Scripted threat scenarios. Each run builds a fresh authority, store,
// manufacturer and devices, plays the attack, and checks the verifier's
// verdict and gate against the expected outcome.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tlt/verifier.hpp"

namespace tlt::threats {

enum class ThreatId : std::uint8_t {
  HonestControl,
  TA01,  // biometric harvesting
  TA02,  // credential collection
  TA03,  // reverse exploit of app
  TA04,  // reprogrammed device
  TA05,  // impostor device
  TA06,  // re-/mis-configured device
};

enum class Control : std::uint8_t {
  C01,  // proof of key possession
  C02,  // proof of installed firmware
  C03,  // firmware update verification
  C04,  // secure / trusted boot
  C05,  // proof of configuration
  C06,  // TLT check
};

std::string_view threat_name(ThreatId id);
std::string_view threat_description(ThreatId id);
std::optional<ThreatId> threat_from_name(std::string_view name);
std::string_view control_name(Control c);
const std::vector<ThreatId>& all_scenarios();

// Controls the threat model assigns to each threat. Empty for the control case.
std::set<Control> mapped_controls(ThreatId id);

struct ScenarioReport {
  ThreatId id = ThreatId::HonestControl;
  bool passed = false;
  std::string expected;
  std::string observed;
  bool gate = false;
  std::set<Control> controls_fired;
  std::optional<Uuid> device_uuid;
  std::vector<std::string> notes;
};

// With a seed the run is fully deterministic; without, the system CSPRNG is
// used. ScenarioError if the harness itself cannot be set up.
ScenarioReport run_scenario(ThreatId id, std::optional<std::uint64_t> seed = std::nullopt);

std::vector<ScenarioReport> run_all(std::optional<std::uint64_t> seed = std::nullopt);

// First line: "SCENARIO <id> result=<PASS|FAIL> expected=... observed=...
// gate=<0|1> controls=<list|-> uuid=<hex|->", followed by indented notes.
std::string format_report(const ScenarioReport& report);

}  // namespace tlt::threats
