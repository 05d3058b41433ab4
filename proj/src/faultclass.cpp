#include "thermon/faultclass.hpp"

#include <algorithm>

#include "thermon/errors.hpp"

namespace thermon {

std::string to_string(FaultClass c) {
    switch (c) {
        case FaultClass::None: return "None";
        case FaultClass::Random: return "Random";
        case FaultClass::Malfunction: return "Malfunction";
        case FaultClass::Bias: return "Bias";
        case FaultClass::Drift: return "Drift";
    }
    return "None";
}

FaultClass fault_class_from_string(const std::string& s) {
    if (s == "None") return FaultClass::None;
    if (s == "Random") return FaultClass::Random;
    if (s == "Malfunction") return FaultClass::Malfunction;
    if (s == "Bias") return FaultClass::Bias;
    if (s == "Drift") return FaultClass::Drift;
    throw InputError("unknown fault class: " + s);
}

bool is_continuous(const std::vector<bool>& fault_state, int min_run) {
    if (fault_state.empty()) throw EmptyInput();
    int run = 0, longest = 0;
    for (bool f : fault_state) {
        run = f ? run + 1 : 0;
        longest = std::max(longest, run);
    }
    return longest >= min_run;
}

bool is_constant(std::span<const double> residuals, double delta) {
    if (residuals.empty()) throw EmptyInput();
    auto [lo, hi] = std::minmax_element(residuals.begin(), residuals.end());
    return *hi - *lo <= delta;
}

FaultReport classify_fault(const FaultWindow& window, const ClassifierParams& params) {
    const std::size_t n = window.fault_state.size();
    if (window.values.size() != n || window.residuals.size() != n)
        throw InvariantViolation("fault window vectors disagree in length");
    if (static_cast<int>(n) < params.min_run) throw WindowTooShort();

    FaultReport report;
    for (bool f : window.fault_state) report.evidence.fault_count += f ? 1 : 0;
    if (report.evidence.fault_count == 0) {
        report.fault_class = FaultClass::None;
        return report;
    }

    report.evidence.continuous = is_continuous(window.fault_state, params.min_run);
    std::vector<double> faulty_residuals;
    faulty_residuals.reserve(static_cast<std::size_t>(report.evidence.fault_count));
    for (std::size_t i = 0; i < n; ++i)
        if (window.fault_state[i]) faulty_residuals.push_back(window.residuals[i]);
    report.evidence.constant = is_constant(faulty_residuals, params.delta);

    if (report.evidence.continuous)
        report.fault_class = report.evidence.constant ? FaultClass::Bias : FaultClass::Drift;
    else if (report.evidence.fault_count > params.theta)
        report.fault_class = FaultClass::Malfunction;
    else
        report.fault_class = FaultClass::Random;
    return report;
}

std::vector<FaultReport> classify_stream(const std::string& sensor_id,
                                         std::span<const std::int64_t> timestamps,
                                         std::span<const double> values,
                                         std::span<const bool> fault_state,
                                         std::span<const double> residuals,
                                         const ClassifierParams& params) {
    const std::size_t n = timestamps.size();
    if (values.size() != n || fault_state.size() != n || residuals.size() != n)
        throw InvariantViolation("stream vectors disagree in length");
    std::vector<FaultReport> reports;
    const std::size_t window = static_cast<std::size_t>(params.window);
    const std::size_t slide = static_cast<std::size_t>(std::max(params.slide, 1));
    for (std::size_t start = 0; start + window <= n; start += slide) {
        FaultWindow w;
        w.values.assign(values.begin() + start, values.begin() + start + window);
        w.fault_state.assign(fault_state.begin() + start, fault_state.begin() + start + window);
        w.residuals.assign(residuals.begin() + start, residuals.begin() + start + window);
        FaultReport report = classify_fault(w, params);
        report.sensor_id = sensor_id;
        report.window_end = timestamps[start + window - 1];
        reports.push_back(std::move(report));
    }
    return reports;
}

}  // namespace thermon
