#ifndef THERMON_TELEMETRY_HPP
#define THERMON_TELEMETRY_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace thermon {

enum class SensorKind { ambient_temp, rack_inlet_temp, rack_outlet_temp, humidity, fan_speed, other };

std::string to_string(SensorKind kind);
SensorKind sensor_kind_from_string(const std::string& s);

enum class RackHeight { top, middle, bottom };

std::string to_string(RackHeight h);
RackHeight rack_height_from_string(const std::string& s);

struct Location {
    int aisle = 0;
    int rack = 0;
    RackHeight height = RackHeight::middle;
};

struct SensorMeta {
    std::string sensor_id;
    SensorKind kind = SensorKind::other;
    std::string tag;  // only meaningful for kind == other
    std::optional<Location> location;
};

struct SensorReading {
    std::string sensor_id;
    std::int64_t t = 0;  // seconds since epoch
    double value = 0.0;
    std::optional<bool> fault;      // set by neighbourhood voting
    std::optional<double> residual; // |r_i - median(R)| when faulty
};

enum class Label {
    normal,
    random,
    malfunction,
    bias,
    drift,
    hotspot_attack,
    cooling_degradation,
};

std::string to_string(Label label);
Label label_from_string(const std::string& s);

struct LabeledTrace {
    std::vector<SensorReading> readings;  // sorted by (sensor_id, t)
    std::map<std::pair<std::string, std::int64_t>, Label> labels;
};

struct ColumnMapping {
    std::string timestamp_col;
    std::string sensor_col;
    std::string value_col;
    std::optional<std::string> label_col;
};

enum class TimestampFormat { iso8601, epoch_seconds };

struct RowError {
    std::size_t line_no = 0;
    std::string reason;
};

struct ParseResult {
    LabeledTrace trace;
    std::size_t duplicate_count = 0;
    std::vector<RowError> malformed;
};

// RFC 4180 CSV with a header row. Rows failing to parse are collected; the
// op throws TooManyMalformedRows only when the bad fraction exceeds
// max_malformed_fraction. Duplicate (sensor, timestamp) keeps the last
// occurrence.
ParseResult parse_csv(std::istream& in, const ColumnMapping& mapping,
                      TimestampFormat format, double max_malformed_fraction = 0.1);

// ISO-8601 "YYYY-MM-DD[T ]HH:MM:SS[.fff][Z]" to epoch seconds (UTC,
// sub-second part truncated). Returns nullopt on malformed input.
std::optional<std::int64_t> parse_iso8601(const std::string& s);

struct AlignedTable {
    std::int64_t t0 = 0;
    std::int64_t period = 1;
    std::vector<std::string> sensor_ids;           // sorted, unique
    std::vector<std::int64_t> timestamps;          // t0 + i*period
    // cells[sensor][instant]; nullopt marks a missing cell.
    std::vector<std::vector<std::optional<double>>> cells;

    std::size_t num_instants() const { return timestamps.size(); }
    std::size_t index_of(const std::string& sensor_id) const;  // throws InputError
};

// Resample every sensor onto the common grid by last-observation-carried-
// forward, up to max_gap periods; older observations leave the cell missing.
AlignedTable align(const LabeledTrace& trace, std::int64_t period, std::int64_t max_gap);

// Canonical JSON Lines reading format:
//   {"t":int,"sensor":string,"v":float,"fault":bool|null,"label":string|null}
void write_readings_jsonl(std::ostream& out, const LabeledTrace& trace);
LabeledTrace read_readings_jsonl(std::istream& in);

// Labels alone, one record per labeled (sensor, t):
//   {"t":int,"sensor":string,"label":string}
void write_labels_jsonl(std::ostream& out, const LabeledTrace& trace);
void read_labels_jsonl(std::istream& in, LabeledTrace& trace);

void write_topology_json(std::ostream& out, const std::vector<SensorMeta>& topology);
std::vector<SensorMeta> read_topology_json(std::istream& in);

// Sorts by (sensor, t) and checks per-sensor timestamps strictly increase
// and values are finite. Throws InvariantViolation otherwise.
void validate_trace(LabeledTrace& trace);

}  // namespace thermon

#endif
