#ifndef THERMON_SIMULATOR_HPP
#define THERMON_SIMULATOR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "thermon/telemetry.hpp"

namespace thermon {

struct RoomLayout {
    int aisles = 1;
    int racks_per_aisle = 8;
    double setpoint = 24.0;     // degrees C
    std::int64_t period = 60;   // seconds between samples
    std::vector<SensorMeta> sensors;
};

// Placement: an ambient sensor at rack positions 0, 4, 8, ... in each cold
// aisle, and top/middle/bottom intake sensors on each of those instrumented
// racks. Throws SetpointOutOfRange outside [15, 35].
RoomLayout build_layout(int aisles, int racks_per_aisle, double setpoint, std::int64_t period);

enum class InjectionKind { random, malfunction, bias, drift, hotspot_attack, cooling_degradation };

std::string to_string(InjectionKind kind);
InjectionKind injection_kind_from_string(const std::string& s);

// Targets are sensor ids, "rack:<aisle>:<rack>" or "aisle:<aisle>".
struct Injection {
    InjectionKind kind = InjectionKind::bias;
    std::vector<std::string> targets;
    std::int64_t start = 0;      // sample index
    std::int64_t duration = 0;   // samples
    double magnitude = 0.0;      // degrees C
};

struct BaselineSpec {
    double setpoint = 24.0;          // overridden by the layout setpoint
    double noise_sigma = 0.3;        // stationary AR(1) deviation
    double diurnal_amplitude = 0.5;  // degrees C over 24 h
    double ar1_coefficient = 0.9;
};

struct ScenarioSpec {
    std::int64_t duration = 600;  // samples
    std::uint64_t seed = 1;
    BaselineSpec baseline;
    std::vector<Injection> injections;
};

// Deterministic labeled trace: per sensor, setpoint + diurnal sinusoid +
// AR(1) noise, plus additive injection deltas. A sample is labeled with the
// injection kind exactly when its value differs from the no-injection
// counterfactual. Throws UnknownTarget for unresolvable targets.
LabeledTrace simulate(const RoomLayout& layout, const ScenarioSpec& scenario);

}  // namespace thermon

#endif
