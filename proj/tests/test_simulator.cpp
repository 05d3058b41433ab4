#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"

#include "thermon/errors.hpp"
#include "thermon/simulator.hpp"

using namespace thermon;

namespace {

ScenarioSpec base_scenario(std::uint64_t seed, std::int64_t duration = 300) {
    ScenarioSpec spec;
    spec.duration = duration;
    spec.seed = seed;
    return spec;
}

// Value lookup keyed by (sensor, t) for counterfactual comparisons.
std::map<std::pair<std::string, std::int64_t>, double> by_key(const LabeledTrace& trace) {
    std::map<std::pair<std::string, std::int64_t>, double> out;
    for (const auto& r : trace.readings) out[{r.sensor_id, r.t}] = r.value;
    return out;
}

}  // namespace

TEST_CASE("layout sensor counts") {
    auto small = build_layout(1, 8, 24.0, 60);
    CHECK(small.sensors.size() == 8);  // ambient at racks 0 and 4, 3 intakes each

    auto two_aisles = build_layout(2, 4, 24.0, 60);
    CHECK(two_aisles.sensors.size() == 8);  // per aisle: 1 ambient + 3 intake
    int ambient = 0;
    for (const auto& s : two_aisles.sensors)
        if (s.kind == SensorKind::ambient_temp) ++ambient;
    CHECK(ambient == 2);

    auto degenerate = build_layout(1, 1, 24.0, 60);
    CHECK(degenerate.sensors.size() == 4);

    CHECK_THROWS_AS(build_layout(1, 8, 40.0, 60), SetpointOutOfRange);
}

TEST_CASE("instrumented racks carry three intake heights") {
    auto layout = build_layout(1, 8, 24.0, 60);
    std::set<RackHeight> heights;
    for (const auto& s : layout.sensors)
        if (s.kind == SensorKind::rack_inlet_temp && s.location->rack == 4)
            heights.insert(s.location->height);
    CHECK(heights == std::set<RackHeight>{RackHeight::top, RackHeight::middle,
                                          RackHeight::bottom});
}

TEST_CASE("same seed gives identical traces") {
    auto layout = build_layout(1, 8, 24.0, 60);
    auto a = simulate(layout, base_scenario(42));
    auto b = simulate(layout, base_scenario(42));
    REQUIRE(a.readings.size() == b.readings.size());
    for (std::size_t i = 0; i < a.readings.size(); ++i) {
        CHECK(a.readings[i].sensor_id == b.readings[i].sensor_id);
        CHECK(a.readings[i].t == b.readings[i].t);
        CHECK(a.readings[i].value == b.readings[i].value);
    }
    CHECK(a.labels == b.labels);

    auto c = simulate(layout, base_scenario(43));
    bool any_diff = false;
    for (std::size_t i = 0; i < a.readings.size(); ++i)
        any_diff |= a.readings[i].value != c.readings[i].value;
    CHECK(any_diff);
}

TEST_CASE("zero-injection traces stay unlabeled and bounded") {
    auto layout = build_layout(1, 4, 24.0, 60);
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        auto trace = simulate(layout, base_scenario(seed, 200));
        CHECK(trace.labels.empty());
        const double bound = 0.5 + 6.0 * 0.3;  // diurnal amplitude + 6 sigma
        for (const auto& r : trace.readings) {
            CHECK(r.value <= 24.0 + bound);
            CHECK(r.value >= 24.0 - bound);
        }
    }
}

TEST_CASE("bias injection shifts the counterfactual by exactly the magnitude") {
    auto layout = build_layout(1, 8, 24.0, 60);
    auto clean = by_key(simulate(layout, base_scenario(7)));

    auto spec = base_scenario(7);
    spec.injections.push_back(
        {InjectionKind::bias, {"in-a0-r00-top"}, 100, 50, 7.0});
    auto biased = simulate(layout, spec);

    for (const auto& r : biased.readings) {
        const double delta = r.value - clean.at({r.sensor_id, r.t});
        const std::int64_t idx = r.t / 60;
        if (r.sensor_id == "in-a0-r00-top" && idx >= 100 && idx < 150) {
            CHECK(delta == doctest::Approx(7.0));
            CHECK(biased.labels.at({r.sensor_id, r.t}) == Label::bias);
        } else {
            CHECK(delta == 0.0);
            CHECK(!biased.labels.count({r.sensor_id, r.t}));
        }
    }
}

TEST_CASE("drift ramps linearly and every changed sample is labeled") {
    auto layout = build_layout(1, 8, 24.0, 60);
    auto clean = by_key(simulate(layout, base_scenario(11)));
    auto spec = base_scenario(11);
    spec.injections.push_back({InjectionKind::drift, {"amb-a0-r04"}, 50, 100, 4.0});
    auto trace = simulate(layout, spec);
    for (const auto& r : trace.readings) {
        const double delta = r.value - clean.at({r.sensor_id, r.t});
        const std::int64_t idx = r.t / 60;
        const bool labeled = trace.labels.count({r.sensor_id, r.t}) > 0;
        CHECK(labeled == (delta != 0.0));  // label soundness
        if (r.sensor_id == "amb-a0-r04" && idx > 50 && idx < 150)
            CHECK(delta == doctest::Approx(4.0 * (idx - 50) / 100.0));
    }
}

TEST_CASE("hotspot hits intake sensors and bleeds into aisle ambients") {
    auto layout = build_layout(2, 8, 24.0, 60);
    auto clean = by_key(simulate(layout, base_scenario(13)));
    auto spec = base_scenario(13);
    spec.injections.push_back({InjectionKind::hotspot_attack, {"rack:0:4"}, 100, 40, 8.0});
    auto trace = simulate(layout, spec);

    bool saw_full = false, saw_bleed = false;
    for (const auto& r : trace.readings) {
        const double delta = r.value - clean.at({r.sensor_id, r.t});
        const std::int64_t idx = r.t / 60;
        if (idx < 100 || idx >= 140) {
            CHECK(delta == 0.0);
            continue;
        }
        if (r.sensor_id.rfind("in-a0-r04", 0) == 0) {
            CHECK(delta >= 0.0);
            if (delta == doctest::Approx(8.0)) saw_full = true;
        } else if (r.sensor_id.rfind("amb-a0", 0) == 0) {
            CHECK(delta <= 8.0 * 0.3 + 1e-12);
            if (delta > 0.0) saw_bleed = true;
        } else if (r.sensor_id.find("-a1-") != std::string::npos) {
            CHECK(delta == 0.0);  // other aisle untouched
        }
    }
    CHECK(saw_full);
    CHECK(saw_bleed);
}

TEST_CASE("random and malfunction flips are sparse and non-contiguous") {
    auto layout = build_layout(1, 8, 24.0, 60);
    auto clean = by_key(simulate(layout, base_scenario(17)));
    auto spec = base_scenario(17);
    spec.injections.push_back({InjectionKind::random, {"in-a0-r04-mid"}, 50, 60, 6.0});
    spec.injections.push_back({InjectionKind::malfunction, {"in-a0-r04-bot"}, 50, 60, 6.0});
    auto trace = simulate(layout, spec);

    std::vector<std::int64_t> random_hits, malfunction_hits;
    for (const auto& r : trace.readings) {
        const double delta = r.value - clean.at({r.sensor_id, r.t});
        if (delta == 0.0) continue;
        CHECK(std::abs(delta) == doctest::Approx(6.0));
        if (r.sensor_id == "in-a0-r04-mid") random_hits.push_back(r.t / 60);
        if (r.sensor_id == "in-a0-r04-bot") malfunction_hits.push_back(r.t / 60);
    }
    CHECK(random_hits.size() == 2);
    CHECK(malfunction_hits.size() == 10);
    std::sort(malfunction_hits.begin(), malfunction_hits.end());
    for (std::size_t i = 1; i < malfunction_hits.size(); ++i)
        CHECK(malfunction_hits[i] - malfunction_hits[i - 1] >= 2);  // non-contiguous
}

TEST_CASE("unknown targets are rejected") {
    auto layout = build_layout(1, 4, 24.0, 60);
    auto spec = base_scenario(1);
    spec.injections.push_back({InjectionKind::bias, {"no-such-sensor"}, 0, 10, 1.0});
    CHECK_THROWS_AS(simulate(layout, spec), UnknownTarget);

    spec.injections[0].targets = {"rack:0:99"};
    CHECK_THROWS_AS(simulate(layout, spec), UnknownTarget);
}

TEST_CASE("aisle target covers every located sensor in the aisle") {
    auto layout = build_layout(2, 4, 24.0, 60);
    auto clean = by_key(simulate(layout, base_scenario(19)));
    auto spec = base_scenario(19);
    spec.injections.push_back(
        {InjectionKind::cooling_degradation, {"aisle:1"}, 100, 100, 5.0});
    auto trace = simulate(layout, spec);
    std::set<std::string> touched;
    for (const auto& r : trace.readings)
        if (r.value != clean.at({r.sensor_id, r.t})) touched.insert(r.sensor_id);
    std::set<std::string> aisle1;
    for (const auto& s : layout.sensors)
        if (s.location && s.location->aisle == 1) aisle1.insert(s.sensor_id);
    CHECK(touched == aisle1);
}

TEST_CASE("injection kind string round trip") {
    for (auto kind : {InjectionKind::random, InjectionKind::malfunction, InjectionKind::bias,
                      InjectionKind::drift, InjectionKind::hotspot_attack,
                      InjectionKind::cooling_degradation})
        CHECK(injection_kind_from_string(to_string(kind)) == kind);
    CHECK_THROWS_AS(injection_kind_from_string("frost"), ConfigError);
}
