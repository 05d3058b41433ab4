#include "thermon/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "thermon/errors.hpp"

namespace thermon {

using nlohmann::json;

std::string to_string(SensorKind kind) {
    switch (kind) {
        case SensorKind::ambient_temp: return "ambient_temp";
        case SensorKind::rack_inlet_temp: return "rack_inlet_temp";
        case SensorKind::rack_outlet_temp: return "rack_outlet_temp";
        case SensorKind::humidity: return "humidity";
        case SensorKind::fan_speed: return "fan_speed";
        case SensorKind::other: return "other";
    }
    return "other";
}

SensorKind sensor_kind_from_string(const std::string& s) {
    if (s == "ambient_temp") return SensorKind::ambient_temp;
    if (s == "rack_inlet_temp") return SensorKind::rack_inlet_temp;
    if (s == "rack_outlet_temp") return SensorKind::rack_outlet_temp;
    if (s == "humidity") return SensorKind::humidity;
    if (s == "fan_speed") return SensorKind::fan_speed;
    if (s == "other") return SensorKind::other;
    throw InputError("unknown sensor kind: " + s);
}

std::string to_string(RackHeight h) {
    switch (h) {
        case RackHeight::top: return "top";
        case RackHeight::middle: return "middle";
        case RackHeight::bottom: return "bottom";
    }
    return "middle";
}

RackHeight rack_height_from_string(const std::string& s) {
    if (s == "top") return RackHeight::top;
    if (s == "middle") return RackHeight::middle;
    if (s == "bottom") return RackHeight::bottom;
    throw InputError("unknown rack height: " + s);
}

std::string to_string(Label label) {
    switch (label) {
        case Label::normal: return "normal";
        case Label::random: return "random";
        case Label::malfunction: return "malfunction";
        case Label::bias: return "bias";
        case Label::drift: return "drift";
        case Label::hotspot_attack: return "hotspot_attack";
        case Label::cooling_degradation: return "cooling_degradation";
    }
    return "normal";
}

Label label_from_string(const std::string& s) {
    if (s == "normal") return Label::normal;
    if (s == "random") return Label::random;
    if (s == "malfunction") return Label::malfunction;
    if (s == "bias") return Label::bias;
    if (s == "drift") return Label::drift;
    if (s == "hotspot_attack") return Label::hotspot_attack;
    if (s == "cooling_degradation") return Label::cooling_degradation;
    throw InputError("unknown label: " + s);
}

namespace {

// Days since 1970-01-01 for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

// Splits one CSV record respecting RFC 4180 quoting. `pos` advances past the
// record (and its trailing newline). Returns false at end of input.
bool next_record(const std::string& data, std::size_t& pos, std::vector<std::string>& fields) {
    fields.clear();
    if (pos >= data.size()) return false;
    std::string field;
    bool in_quotes = false;
    while (pos < data.size()) {
        char c = data[pos];
        if (in_quotes) {
            if (c == '"') {
                if (pos + 1 < data.size() && data[pos + 1] == '"') {
                    field += '"';
                    ++pos;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            ++pos;
        } else if (c == '"') {
            in_quotes = true;
            ++pos;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            ++pos;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && pos + 1 < data.size() && data[pos + 1] == '\n') ++pos;
            ++pos;
            fields.push_back(std::move(field));
            return true;
        } else {
            field += c;
            ++pos;
        }
    }
    fields.push_back(std::move(field));
    return true;
}

}  // namespace

std::optional<std::int64_t> parse_iso8601(const std::string& s) {
    // YYYY-MM-DD[T ]HH:MM:SS[.fff][Z]
    int y, mo, d, h, mi, se;
    char sep;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d", &y, &mo, &d, &sep, &h, &mi, &se) != 7)
        return std::nullopt;
    if (sep != 'T' && sep != ' ') return std::nullopt;
    if (mo < 1 || mo > 12 || d < 1 || d > 31) return std::nullopt;
    if (h < 0 || h > 23 || mi < 0 || mi > 59 || se < 0 || se > 60) return std::nullopt;
    return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
           h * 3600 + mi * 60 + se;
}

ParseResult parse_csv(std::istream& in, const ColumnMapping& mapping,
                      TimestampFormat format, double max_malformed_fraction) {
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    std::vector<std::string> fields;
    if (!next_record(data, pos, fields)) throw MissingColumn(mapping.timestamp_col);

    auto column_index = [&](const std::string& name) -> std::size_t {
        auto it = std::find(fields.begin(), fields.end(), name);
        if (it == fields.end()) throw MissingColumn(name);
        return static_cast<std::size_t>(it - fields.begin());
    };
    const std::size_t t_idx = column_index(mapping.timestamp_col);
    const std::size_t s_idx = column_index(mapping.sensor_col);
    const std::size_t v_idx = column_index(mapping.value_col);
    std::optional<std::size_t> l_idx;
    if (mapping.label_col) l_idx = column_index(*mapping.label_col);

    ParseResult result;
    // Last occurrence wins, so a map keyed by (sensor, t) implements the
    // dedup rule directly.
    std::map<std::pair<std::string, std::int64_t>, double> values;
    std::map<std::pair<std::string, std::int64_t>, Label> labels;
    std::size_t line_no = 1;
    std::size_t total_rows = 0;
    while (next_record(data, pos, fields)) {
        ++line_no;
        if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
        ++total_rows;
        const std::size_t needed = std::max({t_idx, s_idx, v_idx, l_idx.value_or(0)});
        if (fields.size() <= needed) {
            result.malformed.push_back({line_no, "too few fields"});
            continue;
        }
        std::int64_t t;
        if (format == TimestampFormat::epoch_seconds) {
            char* end = nullptr;
            const std::string& raw = fields[t_idx];
            const double tv = std::strtod(raw.c_str(), &end);
            if (end == raw.c_str() || *end != '\0' || !std::isfinite(tv)) {
                result.malformed.push_back({line_no, "bad timestamp: " + raw});
                continue;
            }
            t = static_cast<std::int64_t>(tv);  // sub-second part truncated
        } else {
            auto parsed = parse_iso8601(fields[t_idx]);
            if (!parsed) {
                result.malformed.push_back({line_no, "bad timestamp: " + fields[t_idx]});
                continue;
            }
            t = *parsed;
        }
        const std::string& sensor = fields[s_idx];
        if (sensor.empty()) {
            result.malformed.push_back({line_no, "empty sensor id"});
            continue;
        }
        char* end = nullptr;
        const double v = std::strtod(fields[v_idx].c_str(), &end);
        if (end == fields[v_idx].c_str() || *end != '\0' || !std::isfinite(v)) {
            result.malformed.push_back({line_no, "bad value: " + fields[v_idx]});
            continue;
        }
        auto key = std::make_pair(sensor, t);
        if (values.count(key)) ++result.duplicate_count;
        values[key] = v;
        if (l_idx && !fields[*l_idx].empty()) {
            try {
                labels[key] = label_from_string(fields[*l_idx]);
            } catch (const InputError&) {
                result.malformed.push_back({line_no, "bad label: " + fields[*l_idx]});
                values.erase(key);
                continue;
            }
        }
    }

    if (total_rows > 0 &&
        static_cast<double>(result.malformed.size()) >
            max_malformed_fraction * static_cast<double>(total_rows)) {
        throw TooManyMalformedRows(result.malformed.size(), total_rows);
    }

    result.trace.readings.reserve(values.size());
    for (const auto& [key, v] : values)
        result.trace.readings.push_back({key.first, key.second, v, std::nullopt, std::nullopt});
    for (const auto& [key, label] : labels)
        if (label != Label::normal) result.trace.labels[key] = label;
    return result;
}

void validate_trace(LabeledTrace& trace) {
    std::sort(trace.readings.begin(), trace.readings.end(),
              [](const SensorReading& a, const SensorReading& b) {
                  return std::tie(a.sensor_id, a.t) < std::tie(b.sensor_id, b.t);
              });
    for (std::size_t i = 0; i < trace.readings.size(); ++i) {
        const auto& r = trace.readings[i];
        if (!std::isfinite(r.value))
            throw InvariantViolation("non-finite value for sensor " + r.sensor_id);
        if (i > 0 && trace.readings[i - 1].sensor_id == r.sensor_id &&
            trace.readings[i - 1].t >= r.t)
            throw InvariantViolation("timestamps not strictly increasing for sensor " +
                                     r.sensor_id);
    }
}

std::size_t AlignedTable::index_of(const std::string& sensor_id) const {
    auto it = std::lower_bound(sensor_ids.begin(), sensor_ids.end(), sensor_id);
    if (it == sensor_ids.end() || *it != sensor_id)
        throw InputError("sensor not in table: " + sensor_id);
    return static_cast<std::size_t>(it - sensor_ids.begin());
}

AlignedTable align(const LabeledTrace& trace, std::int64_t period, std::int64_t max_gap) {
    if (period <= 0) throw ConfigError("align: period must be positive");
    if (trace.readings.empty()) throw EmptyTrace();

    AlignedTable table;
    table.period = period;

    std::int64_t t_min = trace.readings.front().t;
    std::int64_t t_max = trace.readings.front().t;
    std::set<std::string> ids;
    for (const auto& r : trace.readings) {
        t_min = std::min(t_min, r.t);
        t_max = std::max(t_max, r.t);
        ids.insert(r.sensor_id);
    }
    table.t0 = t_min;
    table.sensor_ids.assign(ids.begin(), ids.end());
    const std::size_t n = static_cast<std::size_t>((t_max - t_min) / period) + 1;
    table.timestamps.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        table.timestamps[i] = table.t0 + static_cast<std::int64_t>(i) * period;
    table.cells.assign(table.sensor_ids.size(), std::vector<std::optional<double>>(n));

    // Per-sensor sweep: at each grid instant, carry the last observation
    // forward while it is at most max_gap periods old.
    std::vector<std::vector<const SensorReading*>> per_sensor(table.sensor_ids.size());
    for (const auto& r : trace.readings)
        per_sensor[table.index_of(r.sensor_id)].push_back(&r);
    for (std::size_t s = 0; s < per_sensor.size(); ++s) {
        auto& obs = per_sensor[s];
        std::sort(obs.begin(), obs.end(),
                  [](const SensorReading* a, const SensorReading* b) { return a->t < b->t; });
        std::size_t next = 0;
        const SensorReading* last = nullptr;
        for (std::size_t i = 0; i < n; ++i) {
            const std::int64_t grid_t = table.timestamps[i];
            while (next < obs.size() && obs[next]->t <= grid_t) last = obs[next++];
            if (last && grid_t - last->t <= max_gap * period)
                table.cells[s][i] = last->value;
        }
    }
    return table;
}

void write_readings_jsonl(std::ostream& out, const LabeledTrace& trace) {
    for (const auto& r : trace.readings) {
        json j;
        j["t"] = r.t;
        j["sensor"] = r.sensor_id;
        j["v"] = r.value;
        j["fault"] = r.fault ? json(*r.fault) : json(nullptr);
        j["residual"] = r.residual ? json(*r.residual) : json(nullptr);
        auto it = trace.labels.find({r.sensor_id, r.t});
        j["label"] = it != trace.labels.end() ? json(to_string(it->second)) : json(nullptr);
        out << j.dump() << '\n';
    }
}

LabeledTrace read_readings_jsonl(std::istream& in) {
    LabeledTrace trace;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw InputError("readings line " + std::to_string(line_no) + ": " + e.what());
        }
        SensorReading r;
        r.t = j.at("t").get<std::int64_t>();
        r.sensor_id = j.at("sensor").get<std::string>();
        r.value = j.at("v").get<double>();
        if (j.contains("fault") && !j["fault"].is_null()) r.fault = j["fault"].get<bool>();
        if (j.contains("residual") && !j["residual"].is_null())
            r.residual = j["residual"].get<double>();
        if (j.contains("label") && !j["label"].is_null()) {
            Label label = label_from_string(j["label"].get<std::string>());
            if (label != Label::normal) trace.labels[{r.sensor_id, r.t}] = label;
        }
        trace.readings.push_back(std::move(r));
    }
    return trace;
}

void write_labels_jsonl(std::ostream& out, const LabeledTrace& trace) {
    for (const auto& [key, label] : trace.labels) {
        json j;
        j["t"] = key.second;
        j["sensor"] = key.first;
        j["label"] = to_string(label);
        out << j.dump() << '\n';
    }
}

void read_labels_jsonl(std::istream& in, LabeledTrace& trace) {
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        trace.labels[{j.at("sensor").get<std::string>(), j.at("t").get<std::int64_t>()}] =
            label_from_string(j.at("label").get<std::string>());
    }
}

void write_topology_json(std::ostream& out, const std::vector<SensorMeta>& topology) {
    json arr = json::array();
    for (const auto& m : topology) {
        json j;
        j["sensor_id"] = m.sensor_id;
        j["kind"] = to_string(m.kind);
        if (m.kind == SensorKind::other) j["tag"] = m.tag;
        if (m.location) {
            j["location"] = {{"aisle", m.location->aisle},
                             {"rack", m.location->rack},
                             {"height", to_string(m.location->height)}};
        }
        arr.push_back(std::move(j));
    }
    out << arr.dump(2) << '\n';
}

std::vector<SensorMeta> read_topology_json(std::istream& in) {
    json arr = json::parse(in);
    std::vector<SensorMeta> topology;
    std::set<std::string> seen;
    for (const auto& j : arr) {
        SensorMeta m;
        m.sensor_id = j.at("sensor_id").get<std::string>();
        m.kind = sensor_kind_from_string(j.at("kind").get<std::string>());
        if (j.contains("tag")) m.tag = j["tag"].get<std::string>();
        if (j.contains("location")) {
            Location loc;
            loc.aisle = j["location"].at("aisle").get<int>();
            loc.rack = j["location"].at("rack").get<int>();
            loc.height = rack_height_from_string(j["location"].at("height").get<std::string>());
            if (loc.aisle < 0 || loc.rack < 0)
                throw InvariantViolation("negative aisle/rack index for " + m.sensor_id);
            m.location = loc;
        }
        if (!seen.insert(m.sensor_id).second)
            throw InvariantViolation("duplicate sensor id: " + m.sensor_id);
        topology.push_back(std::move(m));
    }
    return topology;
}

}  // namespace thermon
