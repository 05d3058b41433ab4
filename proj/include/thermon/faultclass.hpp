#ifndef THERMON_FAULTCLASS_HPP
#define THERMON_FAULTCLASS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace thermon {

enum class FaultClass { None, Random, Malfunction, Bias, Drift };

std::string to_string(FaultClass c);
FaultClass fault_class_from_string(const std::string& s);

struct FaultWindow {
    std::vector<double> values;      // R[1..T]
    std::vector<bool> fault_state;   // E[1..T]
    std::vector<double> residuals;   // epsilon where E is true, 0 elsewhere
};

struct FaultEvidence {
    int fault_count = 0;
    bool continuous = false;
    bool constant = false;
};

struct FaultReport {
    std::string sensor_id;
    std::int64_t window_end = 0;
    FaultClass fault_class = FaultClass::None;
    FaultEvidence evidence;
};

struct ClassifierParams {
    int theta = 5;        // frequency threshold
    int min_run = 3;      // L: run length that makes a fault "continuous"
    double delta = 2.0;   // constancy tolerance on residuals, degrees C
    int window = 60;      // T
    int slide = 30;       // window advance, defaults to T/2
};

// True iff the longest run of consecutive faulty flags has length >= min_run.
bool is_continuous(const std::vector<bool>& fault_state, int min_run);

// True iff max(residuals) - min(residuals) <= delta.
bool is_constant(std::span<const double> residuals, double delta);

// Fault-classification decision tree over one window:
//   no faults -> None; discrete & count > theta -> Malfunction;
//   discrete & count <= theta -> Random; continuous & constant -> Bias;
//   continuous & not constant -> Drift.
// Throws WindowTooShort when the window is shorter than min_run.
FaultReport classify_fault(const FaultWindow& window, const ClassifierParams& params);

// Slides windows of params.window by params.slide over one sensor's voted
// stream and classifies each. Reports are emitted for every window; callers
// typically drop the None ones.
std::vector<FaultReport> classify_stream(const std::string& sensor_id,
                                         std::span<const std::int64_t> timestamps,
                                         std::span<const double> values,
                                         std::span<const bool> fault_state,
                                         std::span<const double> residuals,
                                         const ClassifierParams& params);

}  // namespace thermon

#endif
