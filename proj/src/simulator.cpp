#include "thermon/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <set>

#include "thermon/errors.hpp"
#include "thermon/rng.hpp"

namespace thermon {

namespace {

std::string pad2(int v) {
    std::string s = std::to_string(v);
    return s.size() < 2 ? "0" + s : s;
}

std::string ambient_id(int aisle, int rack) {
    return "amb-a" + std::to_string(aisle) + "-r" + pad2(rack);
}

std::string intake_id(int aisle, int rack, RackHeight h) {
    const char* suffix = h == RackHeight::top ? "top" : h == RackHeight::middle ? "mid" : "bot";
    return "in-a" + std::to_string(aisle) + "-r" + pad2(rack) + "-" + suffix;
}

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kHotspotAmbientBleed = 0.3;
constexpr double kHotspotRampFraction = 0.25;
constexpr int kRandomFlips = 2;       // isolated samples per random injection
constexpr int kMalfunctionFlips = 10; // classifier default theta (5) + 5

}  // namespace

RoomLayout build_layout(int aisles, int racks_per_aisle, double setpoint, std::int64_t period) {
    if (aisles < 1 || racks_per_aisle < 1 || period < 1)
        throw ConfigError("layout arguments must be positive");
    if (setpoint < 15.0 || setpoint > 35.0) throw SetpointOutOfRange(setpoint);
    RoomLayout layout;
    layout.aisles = aisles;
    layout.racks_per_aisle = racks_per_aisle;
    layout.setpoint = setpoint;
    layout.period = period;
    for (int a = 0; a < aisles; ++a) {
        // Ambient sensor at every fourth rack position; the same racks carry
        // the top/middle/bottom intake sensors.
        for (int r = 0; r < racks_per_aisle; r += 4) {
            layout.sensors.push_back({ambient_id(a, r), SensorKind::ambient_temp, "",
                                      Location{a, r, RackHeight::middle}});
            for (RackHeight h : {RackHeight::top, RackHeight::middle, RackHeight::bottom})
                layout.sensors.push_back({intake_id(a, r, h), SensorKind::rack_inlet_temp, "",
                                          Location{a, r, h}});
        }
    }
    return layout;
}

std::string to_string(InjectionKind kind) {
    switch (kind) {
        case InjectionKind::random: return "random";
        case InjectionKind::malfunction: return "malfunction";
        case InjectionKind::bias: return "bias";
        case InjectionKind::drift: return "drift";
        case InjectionKind::hotspot_attack: return "hotspot_attack";
        case InjectionKind::cooling_degradation: return "cooling_degradation";
    }
    return "bias";
}

InjectionKind injection_kind_from_string(const std::string& s) {
    if (s == "random") return InjectionKind::random;
    if (s == "malfunction") return InjectionKind::malfunction;
    if (s == "bias") return InjectionKind::bias;
    if (s == "drift") return InjectionKind::drift;
    if (s == "hotspot_attack") return InjectionKind::hotspot_attack;
    if (s == "cooling_degradation") return InjectionKind::cooling_degradation;
    throw ConfigError("unknown injection kind: " + s);
}

namespace {

Label label_for(InjectionKind kind) {
    switch (kind) {
        case InjectionKind::random: return Label::random;
        case InjectionKind::malfunction: return Label::malfunction;
        case InjectionKind::bias: return Label::bias;
        case InjectionKind::drift: return Label::drift;
        case InjectionKind::hotspot_attack: return Label::hotspot_attack;
        case InjectionKind::cooling_degradation: return Label::cooling_degradation;
    }
    return Label::normal;
}

struct TargetSet {
    std::vector<std::size_t> sensors;       // direct victims
    std::vector<std::size_t> bleed_ambient; // aisle ambients for hotspot bleed
};

TargetSet resolve_targets(const RoomLayout& layout, const Injection& inj) {
    TargetSet ts;
    std::set<std::size_t> direct, bleed;
    auto sensor_index = [&](const std::string& id) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < layout.sensors.size(); ++i)
            if (layout.sensors[i].sensor_id == id) return i;
        return std::nullopt;
    };
    for (const auto& target : inj.targets) {
        if (target.rfind("rack:", 0) == 0) {
            int aisle, rack;
            if (std::sscanf(target.c_str(), "rack:%d:%d", &aisle, &rack) != 2)
                throw UnknownTarget(target);
            bool found = false;
            for (std::size_t i = 0; i < layout.sensors.size(); ++i) {
                const auto& m = layout.sensors[i];
                if (!m.location || m.location->aisle != aisle || m.location->rack != rack)
                    continue;
                if (m.kind == SensorKind::rack_inlet_temp) {
                    direct.insert(i);
                    found = true;
                }
            }
            if (!found) throw UnknownTarget(target);
            if (inj.kind == InjectionKind::hotspot_attack) {
                for (std::size_t i = 0; i < layout.sensors.size(); ++i) {
                    const auto& m = layout.sensors[i];
                    if (m.kind == SensorKind::ambient_temp && m.location &&
                        m.location->aisle == aisle)
                        bleed.insert(i);
                }
            }
        } else if (target.rfind("aisle:", 0) == 0) {
            int aisle;
            if (std::sscanf(target.c_str(), "aisle:%d", &aisle) != 1)
                throw UnknownTarget(target);
            bool found = false;
            for (std::size_t i = 0; i < layout.sensors.size(); ++i) {
                const auto& m = layout.sensors[i];
                if (m.location && m.location->aisle == aisle) {
                    direct.insert(i);
                    found = true;
                }
            }
            if (!found) throw UnknownTarget(target);
        } else {
            auto idx = sensor_index(target);
            if (!idx) throw UnknownTarget(target);
            direct.insert(*idx);
        }
    }
    ts.sensors.assign(direct.begin(), direct.end());
    ts.bleed_ambient.assign(bleed.begin(), bleed.end());
    return ts;
}

// Picks `count` pairwise non-adjacent sample offsets within [0, duration).
std::vector<std::int64_t> scattered_offsets(std::int64_t duration, int count, Xoshiro256& rng) {
    std::vector<std::int64_t> candidates(static_cast<std::size_t>(duration));
    for (std::int64_t i = 0; i < duration; ++i) candidates[static_cast<std::size_t>(i)] = i;
    // Fisher-Yates with the portable generator.
    for (std::size_t i = candidates.size(); i > 1; --i)
        std::swap(candidates[i - 1], candidates[rng.below(i)]);
    std::vector<std::int64_t> picked;
    std::set<std::int64_t> taken;
    for (std::int64_t c : candidates) {
        if (static_cast<int>(picked.size()) >= count) break;
        if (taken.count(c - 1) || taken.count(c) || taken.count(c + 1)) continue;
        taken.insert(c);
        picked.push_back(c);
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

}  // namespace

LabeledTrace simulate(const RoomLayout& layout, const ScenarioSpec& scenario) {
    if (scenario.duration < 1) throw ConfigError("scenario duration must be positive");
    for (const auto& inj : scenario.injections) {
        if (inj.magnitude <= 0.0) throw ConfigError("injection magnitude must be positive");
        if (inj.start < 0 || inj.duration < 1 || inj.start + inj.duration > scenario.duration)
            throw ConfigError("injection window outside trace duration");
    }

    const std::size_t n_sensors = layout.sensors.size();
    const std::size_t n_samples = static_cast<std::size_t>(scenario.duration);
    const BaselineSpec& base = scenario.baseline;
    const double innovation =
        base.noise_sigma * std::sqrt(std::max(0.0, 1.0 - base.ar1_coefficient * base.ar1_coefficient));

    std::vector<std::vector<double>> values(n_sensors, std::vector<double>(n_samples));
    for (std::size_t s = 0; s < n_sensors; ++s) {
        // One independent, reproducible stream per sensor.
        Xoshiro256 rng(scenario.seed ^ fnv1a64(layout.sensors[s].sensor_id));
        double noise = base.noise_sigma * rng.gaussian();
        for (std::size_t i = 0; i < n_samples; ++i) {
            if (i > 0) noise = base.ar1_coefficient * noise + innovation * rng.gaussian();
            const double t_sec = static_cast<double>(static_cast<std::int64_t>(i) * layout.period);
            const double diurnal =
                base.diurnal_amplitude * std::sin(2.0 * kPi * t_sec / 86400.0);
            values[s][i] = layout.setpoint + diurnal + noise;
        }
    }

    LabeledTrace trace;
    std::vector<std::vector<double>> delta(n_sensors, std::vector<double>(n_samples, 0.0));
    std::vector<std::vector<Label>> label(n_sensors, std::vector<Label>(n_samples, Label::normal));

    for (std::size_t k = 0; k < scenario.injections.size(); ++k) {
        const Injection& inj = scenario.injections[k];
        const TargetSet targets = resolve_targets(layout, inj);
        Xoshiro256 inj_rng(scenario.seed ^ fnv1a64("injection:" + std::to_string(k)));
        auto apply = [&](std::size_t sensor, std::int64_t t, double d) {
            if (d == 0.0) return;
            delta[sensor][static_cast<std::size_t>(t)] += d;
            label[sensor][static_cast<std::size_t>(t)] = label_for(inj.kind);
        };
        switch (inj.kind) {
            case InjectionKind::bias:
                for (std::size_t s : targets.sensors)
                    for (std::int64_t t = inj.start; t < inj.start + inj.duration; ++t)
                        apply(s, t, inj.magnitude);
                break;
            case InjectionKind::drift:
                for (std::size_t s : targets.sensors)
                    for (std::int64_t t = inj.start; t < inj.start + inj.duration; ++t)
                        apply(s, t,
                              inj.magnitude * static_cast<double>(t - inj.start) /
                                  static_cast<double>(inj.duration));
                break;
            case InjectionKind::random:
            case InjectionKind::malfunction: {
                const int count = inj.kind == InjectionKind::random
                                      ? kRandomFlips
                                      : kMalfunctionFlips;
                for (std::size_t s : targets.sensors) {
                    for (std::int64_t off : scattered_offsets(inj.duration, count, inj_rng)) {
                        const double sign = inj_rng.uniform() < 0.5 ? -1.0 : 1.0;
                        apply(s, inj.start + off, sign * inj.magnitude);
                    }
                }
                break;
            }
            case InjectionKind::hotspot_attack:
                for (std::int64_t t = inj.start; t < inj.start + inj.duration; ++t) {
                    const double ramp_len =
                        std::max(1.0, kHotspotRampFraction * static_cast<double>(inj.duration));
                    const double d = inj.magnitude *
                                     std::min(1.0, static_cast<double>(t - inj.start) / ramp_len);
                    for (std::size_t s : targets.sensors) apply(s, t, d);
                    for (std::size_t s : targets.bleed_ambient)
                        apply(s, t, kHotspotAmbientBleed * d);
                }
                break;
            case InjectionKind::cooling_degradation:
                for (std::size_t s : targets.sensors)
                    for (std::int64_t t = inj.start; t < inj.start + inj.duration; ++t)
                        apply(s, t,
                              inj.magnitude * static_cast<double>(t - inj.start) /
                                  static_cast<double>(inj.duration));
                break;
        }
    }

    trace.readings.reserve(n_sensors * n_samples);
    for (std::size_t s = 0; s < n_sensors; ++s) {
        const std::string& id = layout.sensors[s].sensor_id;
        for (std::size_t i = 0; i < n_samples; ++i) {
            const std::int64_t t = static_cast<std::int64_t>(i) * layout.period;
            trace.readings.push_back(
                {id, t, values[s][i] + delta[s][i], std::nullopt, std::nullopt});
            if (label[s][i] != Label::normal) trace.labels[{id, t}] = label[s][i];
        }
    }
    validate_trace(trace);
    return trace;
}

}  // namespace thermon
