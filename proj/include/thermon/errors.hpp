#ifndef THERMON_ERRORS_HPP
#define THERMON_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace thermon {

// Base for all library errors so callers can catch one type at the boundary.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct InputError : Error {
    using Error::Error;
};

struct InvariantViolation : Error {
    using Error::Error;
};

struct MissingColumn : InputError {
    explicit MissingColumn(const std::string& name)
        : InputError("missing column: " + name), column(name) {}
    std::string column;
};

struct TooManyMalformedRows : InputError {
    TooManyMalformedRows(std::size_t bad, std::size_t total)
        : InputError("malformed rows exceed threshold: " + std::to_string(bad) +
                     " of " + std::to_string(total)) {}
};

struct EmptyTrace : InputError {
    EmptyTrace() : InputError("empty trace") {}
};

struct EmptyTopology : InputError {
    EmptyTopology() : InputError("empty topology") {}
};

struct UnlocatedSensor : InputError {
    explicit UnlocatedSensor(const std::string& id)
        : InputError("sensor without location: " + id), sensor_id(id) {}
    std::string sensor_id;
};

struct EmptyInput : InputError {
    EmptyInput() : InputError("empty input") {}
};

struct NoNeighbours : InputError {
    NoNeighbours() : InputError("no neighbours to vote with") {}
};

struct WindowTooShort : InputError {
    WindowTooShort() : InputError("window shorter than minimum run length") {}
};

struct SeriesShorterThanWarmup : InputError {
    SeriesShorterThanWarmup() : InputError("series shorter than scorer warmup") {}
};

struct OrientationViolation : Error {
    explicit OrientationViolation(const std::string& group)
        : Error("CPT orientation violated for group: " + group), group(group) {}
    std::string group;
};

struct UnknownVariable : ConfigError {
    explicit UnknownVariable(const std::string& name)
        : ConfigError("unknown fuzzy variable: " + name), name(name) {}
    std::string name;
};

struct NoRuleFired : Error {
    NoRuleFired() : Error("no fuzzy rule fired; aggregated set is empty") {}
};

struct SetpointOutOfRange : ConfigError {
    explicit SetpointOutOfRange(double v)
        : ConfigError("setpoint out of range [15,35]: " + std::to_string(v)) {}
};

struct UnknownTarget : ConfigError {
    explicit UnknownTarget(const std::string& id)
        : ConfigError("unknown injection target: " + id), target(id) {}
    std::string target;
};

struct TraceMismatch : InputError {
    using InputError::InputError;
};

}  // namespace thermon

#endif
