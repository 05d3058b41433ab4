#include <cstdint>
#include <memory>
#include <random>
#include <span>

#include "doctest.h"

#include "thermon/errors.hpp"
#include "thermon/faultclass.hpp"

using namespace thermon;

namespace {

FaultWindow window_from_flags(const std::vector<bool>& flags, double residual_value = 7.0) {
    FaultWindow w;
    w.values.assign(flags.size(), 20.0);
    w.fault_state = flags;
    w.residuals.assign(flags.size(), 0.0);
    for (std::size_t i = 0; i < flags.size(); ++i)
        if (flags[i]) w.residuals[i] = residual_value;
    return w;
}

}  // namespace

TEST_CASE("is_continuous") {
    CHECK(!is_continuous({false, true, false, false, true, false}, 3));
    CHECK(is_continuous({false, true, true, true, false}, 3));
    CHECK(!is_continuous({false, false, false}, 2));
    CHECK_THROWS_AS(is_continuous({}, 3), EmptyInput);
}

TEST_CASE("is_constant") {
    CHECK(is_constant(std::vector<double>{7.0, 7.0, 7.0}, 0.1));
    CHECK(!is_constant(std::vector<double>{1.0, 2.0, 3.0}, 0.1));
    CHECK(is_constant(std::vector<double>{7.0, 7.05}, 0.1));
    CHECK_THROWS_AS(is_constant(std::vector<double>{}, 0.1), EmptyInput);
}

TEST_CASE("classify_fault decision tree") {
    ClassifierParams params;
    params.theta = 5;
    params.min_run = 3;
    params.delta = 0.1;
    params.window = 60;

    SUBCASE("no faults -> None") {
        auto report = classify_fault(window_from_flags(std::vector<bool>(60, false)), params);
        CHECK(report.fault_class == FaultClass::None);
        CHECK(report.evidence.fault_count == 0);
    }
    SUBCASE("two isolated faults -> Random") {
        std::vector<bool> flags(60, false);
        flags[3] = flags[47] = true;
        auto report = classify_fault(window_from_flags(flags), params);
        CHECK(report.fault_class == FaultClass::Random);
        CHECK(report.evidence.fault_count == 2);
        CHECK(!report.evidence.continuous);
    }
    SUBCASE("12 scattered faults -> Malfunction") {
        std::vector<bool> flags(60, false);
        for (int i = 0; i < 12; ++i) flags[i * 5] = true;
        auto report = classify_fault(window_from_flags(flags), params);
        CHECK(report.fault_class == FaultClass::Malfunction);
        CHECK(report.evidence.fault_count == 12);
    }
    SUBCASE("run with constant residuals -> Bias") {
        std::vector<bool> flags(60, false);
        for (int i = 10; i <= 40; ++i) flags[i] = true;
        auto report = classify_fault(window_from_flags(flags, 7.0), params);
        CHECK(report.fault_class == FaultClass::Bias);
        CHECK(report.evidence.continuous);
        CHECK(report.evidence.constant);
    }
    SUBCASE("run with increasing residuals -> Drift") {
        std::vector<bool> flags(60, false);
        FaultWindow w = window_from_flags(flags);
        double r = 1.0;
        for (int i = 10; i <= 40; ++i) {
            w.fault_state[i] = true;
            w.residuals[i] = r;
            r += 0.5;
        }
        auto report = classify_fault(w, params);
        CHECK(report.fault_class == FaultClass::Drift);
        CHECK(report.evidence.continuous);
        CHECK(!report.evidence.constant);
    }
    SUBCASE("window shorter than L throws") {
        CHECK_THROWS_AS(classify_fault(window_from_flags({true, false}), params),
                        WindowTooShort);
    }
}

TEST_CASE("a long run beats scattered faults (continuity wins)") {
    ClassifierParams params;
    params.theta = 2;
    params.min_run = 3;
    params.delta = 0.1;
    std::vector<bool> flags(30, false);
    for (int i = 5; i < 10; ++i) flags[i] = true;  // run of 5
    flags[20] = flags[25] = flags[28] = true;      // plus scattered ones
    auto report = classify_fault(window_from_flags(flags, 7.0), params);
    CHECK(report.fault_class == FaultClass::Bias);
}

TEST_CASE("classification is exhaustive and exclusive") {
    std::mt19937 rng(11);
    ClassifierParams params;
    params.theta = 5;
    params.min_run = 3;
    params.delta = 0.5;
    for (int trial = 0; trial < 500; ++trial) {
        FaultWindow w;
        const int n = 10 + static_cast<int>(rng() % 50);
        w.values.assign(n, 20.0);
        w.fault_state.assign(n, false);
        w.residuals.assign(n, 0.0);
        for (int i = 0; i < n; ++i)
            if (rng() % 4 == 0) {
                w.fault_state[i] = true;
                w.residuals[i] = std::uniform_real_distribution<>(0.0, 10.0)(rng);
            }
        auto report = classify_fault(w, params);
        const bool has_fault = report.evidence.fault_count > 0;
        CHECK((report.fault_class == FaultClass::None) == !has_fault);
    }
}

TEST_CASE("value translation never changes the class") {
    std::mt19937 rng(13);
    ClassifierParams params;
    for (int trial = 0; trial < 100; ++trial) {
        FaultWindow w;
        const int n = 20;
        w.values.assign(n, 0.0);
        w.fault_state.assign(n, false);
        w.residuals.assign(n, 0.0);
        for (int i = 0; i < n; ++i) {
            w.values[i] = std::uniform_real_distribution<>(15.0, 30.0)(rng);
            if (rng() % 3 == 0) {
                w.fault_state[i] = true;
                w.residuals[i] = std::uniform_real_distribution<>(0.0, 5.0)(rng);
            }
        }
        auto before = classify_fault(w, params);
        for (auto& v : w.values) v += 1000.0;
        auto after = classify_fault(w, params);
        CHECK(before.fault_class == after.fault_class);
    }
}

TEST_CASE("linear drift with slope above delta/T always classifies Drift") {
    std::mt19937 rng(17);
    ClassifierParams params;
    params.delta = 0.5;
    params.min_run = 3;
    for (int trial = 0; trial < 200; ++trial) {
        const int T = 10 + static_cast<int>(rng() % 90);
        const double k =
            params.delta / T + std::uniform_real_distribution<>(0.1, 2.0)(rng);
        FaultWindow w;
        w.values.assign(T, 20.0);
        w.fault_state.assign(T, true);
        w.residuals.resize(T);
        for (int t = 0; t < T; ++t) w.residuals[t] = k * t;
        auto report = classify_fault(w, params);
        CHECK(report.fault_class == FaultClass::Drift);
    }
}

TEST_CASE("raising theta only moves Malfunction to Random") {
    std::mt19937 rng(19);
    for (int trial = 0; trial < 200; ++trial) {
        FaultWindow w;
        const int n = 40;
        w.values.assign(n, 20.0);
        w.fault_state.assign(n, false);
        w.residuals.assign(n, 0.0);
        for (int i = 0; i < n; i += 2)
            if (rng() % 2) {
                w.fault_state[i] = true;
                w.residuals[i] = 1.0;
            }
        ClassifierParams lo, hi;
        lo.theta = 3;
        hi.theta = 8;
        auto c_lo = classify_fault(w, lo).fault_class;
        auto c_hi = classify_fault(w, hi).fault_class;
        if (c_lo == FaultClass::Malfunction)
            CHECK((c_hi == FaultClass::Malfunction || c_hi == FaultClass::Random));
        else
            CHECK(c_lo == c_hi);
    }
}

TEST_CASE("classify_stream slides windows and stamps the window end") {
    ClassifierParams params;
    params.window = 10;
    params.slide = 5;
    params.min_run = 3;
    params.theta = 2;
    params.delta = 0.1;
    const int n = 20;
    std::vector<std::int64_t> ts(n);
    for (int i = 0; i < n; ++i) ts[i] = 100 + 60 * i;
    std::vector<double> values(n, 20.0);
    auto flags = std::make_unique<bool[]>(n);
    std::vector<double> residuals(n, 0.0);
    for (int i = 13; i < 17; ++i) {
        flags[i] = true;
        residuals[i] = 7.0;
    }
    auto reports = classify_stream("s1", ts, values,
                                   std::span<const bool>(flags.get(), n), residuals, params);
    REQUIRE(reports.size() == 3);  // windows [0,9], [5,14], [10,19]
    CHECK(reports[0].fault_class == FaultClass::None);
    CHECK(reports[0].window_end == ts[9]);
    CHECK(reports[1].fault_class == FaultClass::Random);  // run of 3 split by the boundary
    CHECK(reports[2].fault_class == FaultClass::Bias);
    CHECK(reports[2].window_end == ts[19]);
}

TEST_CASE("fault class string round trip") {
    for (FaultClass c : {FaultClass::None, FaultClass::Random, FaultClass::Malfunction,
                         FaultClass::Bias, FaultClass::Drift})
        CHECK(fault_class_from_string(to_string(c)) == c);
    CHECK_THROWS_AS(fault_class_from_string("nope"), InputError);
}
