#include "thermon/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <sstream>

#include "json.hpp"

#include "thermon/errors.hpp"

namespace thermon {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key))
            throw ConfigError("unknown key \"" + key + "\" in " + where);
}

GroupBasis basis_from_string(const std::string& s) {
    if (s == "phenomenon") return GroupBasis::phenomenon;
    if (s == "spatial") return GroupBasis::spatial;
    throw ConfigError("unknown group basis: " + s);
}

GroupingStrategy strategy_from_string(const std::string& s) {
    if (s == "by_kind") return GroupingStrategy::by_kind;
    if (s == "by_aisle_height") return GroupingStrategy::by_aisle_height;
    throw ConfigError("unknown grouping strategy: " + s);
}

}  // namespace

PipelineConfig PipelineConfig::load(std::istream& in) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(j, {"io", "grouping", "faultclass", "scorer", "fusion", "fuzzy", "layout",
                   "scenario"},
               "config");
    PipelineConfig cfg;

    if (j.contains("io")) {
        const json& io = j["io"];
        check_keys(io,
                   {"input", "out", "format", "column_mapping", "timestamp_format",
                    "max_malformed_fraction", "period", "max_gap", "topology", "labels"},
                   "io");
        if (io.contains("input")) cfg.io.input = io["input"].get<std::string>();
        if (io.contains("out")) cfg.io.out_dir = io["out"].get<std::string>();
        if (io.contains("format")) cfg.io.format = io["format"].get<std::string>();
        if (io.contains("column_mapping")) {
            const json& cm = io["column_mapping"];
            check_keys(cm, {"timestamp", "sensor", "value", "label"}, "io.column_mapping");
            cfg.io.column_mapping.timestamp_col = cm.value("timestamp", "timestamp");
            cfg.io.column_mapping.sensor_col = cm.value("sensor", "sensor");
            cfg.io.column_mapping.value_col = cm.value("value", "value");
            if (cm.contains("label"))
                cfg.io.column_mapping.label_col = cm["label"].get<std::string>();
        }
        if (io.contains("timestamp_format")) {
            const std::string f = io["timestamp_format"].get<std::string>();
            if (f == "iso8601")
                cfg.io.timestamp_format = TimestampFormat::iso8601;
            else if (f == "epoch")
                cfg.io.timestamp_format = TimestampFormat::epoch_seconds;
            else
                throw ConfigError("unknown timestamp_format: " + f);
        }
        if (io.contains("max_malformed_fraction"))
            cfg.io.max_malformed_fraction = io["max_malformed_fraction"].get<double>();
        if (io.contains("period")) cfg.io.period = io["period"].get<std::int64_t>();
        if (io.contains("max_gap")) cfg.io.max_gap = io["max_gap"].get<std::int64_t>();
        if (io.contains("topology")) cfg.io.topology = io["topology"].get<std::string>();
        if (io.contains("labels")) cfg.io.labels = io["labels"].get<std::string>();
    }

    if (j.contains("grouping")) {
        const json& g = j["grouping"];
        check_keys(g, {"strategy", "groups", "tau"}, "grouping");
        if (g.contains("strategy"))
            cfg.grouping.strategy = strategy_from_string(g["strategy"].get<std::string>());
        if (g.contains("groups")) {
            for (const auto& spec : g["groups"]) {
                check_keys(spec, {"group_id", "members", "basis"}, "grouping.groups[]");
                GroupSpec gs;
                gs.group_id = spec.at("group_id").get<std::string>();
                gs.members = spec.at("members").get<std::vector<std::string>>();
                if (spec.contains("basis"))
                    gs.basis = basis_from_string(spec["basis"].get<std::string>());
                cfg.grouping.groups.push_back(std::move(gs));
            }
        }
        if (g.contains("tau")) {
            const json& tau = g["tau"];
            check_keys(tau, {"fixed", "overrides", "warmup", "multiplier", "floor"},
                       "grouping.tau");
            if (tau.contains("fixed")) cfg.grouping.vote.tau_fixed = tau["fixed"].get<double>();
            if (tau.contains("overrides"))
                for (const auto& [gid, v] : tau["overrides"].items())
                    cfg.grouping.vote.tau_overrides[gid] = v.get<double>();
            if (tau.contains("warmup")) cfg.grouping.vote.warmup = tau["warmup"].get<int>();
            if (tau.contains("multiplier"))
                cfg.grouping.vote.multiplier = tau["multiplier"].get<double>();
            if (tau.contains("floor")) cfg.grouping.vote.floor = tau["floor"].get<double>();
        }
    }

    if (j.contains("faultclass")) {
        const json& f = j["faultclass"];
        check_keys(f, {"theta", "L", "delta", "T", "slide"}, "faultclass");
        if (f.contains("theta")) cfg.faultclass.theta = f["theta"].get<int>();
        if (f.contains("L")) cfg.faultclass.min_run = f["L"].get<int>();
        if (f.contains("delta")) cfg.faultclass.delta = f["delta"].get<double>();
        if (f.contains("T")) {
            cfg.faultclass.window = f["T"].get<int>();
            cfg.faultclass.slide = std::max(1, cfg.faultclass.window / 2);
        }
        if (f.contains("slide")) cfg.faultclass.slide = f["slide"].get<int>();
    }

    if (j.contains("scorer")) {
        const json& s = j["scorer"];
        check_keys(s, {"p", "lambda", "w_short", "w_long", "sigma_min", "warmup"}, "scorer");
        if (s.contains("p")) cfg.scorer.order = s["p"].get<int>();
        if (s.contains("lambda")) cfg.scorer.lambda = s["lambda"].get<double>();
        if (s.contains("w_short")) cfg.scorer.w_short = s["w_short"].get<int>();
        if (s.contains("w_long")) cfg.scorer.w_long = s["w_long"].get<int>();
        if (s.contains("sigma_min")) cfg.scorer.sigma_min = s["sigma_min"].get<double>();
        if (s.contains("warmup")) cfg.scorer.warmup = s["warmup"].get<int>();
    }

    if (j.contains("fusion")) {
        const json& f = j["fusion"];
        check_keys(f, {"l_low", "l_high", "rho", "min_dur", "merge_gap", "model", "prior",
                       "cpt_true", "cpt_false"},
                   "fusion");
        if (f.contains("l_low")) cfg.fusion.l_low = f["l_low"].get<double>();
        if (f.contains("l_high")) cfg.fusion.l_high = f["l_high"].get<double>();
        if (f.contains("rho")) cfg.fusion.rho = f["rho"].get<double>();
        if (f.contains("min_dur")) cfg.fusion.min_dur = f["min_dur"].get<int>();
        if (f.contains("merge_gap")) cfg.fusion.merge_gap = f["merge_gap"].get<int>();
        if (f.contains("model")) cfg.fusion.model_path = f["model"].get<std::string>();
        if (f.contains("prior")) cfg.fusion.defaults.prior = f["prior"].get<double>();
        if (f.contains("cpt_true"))
            cfg.fusion.defaults.cpt_true = f["cpt_true"].get<std::array<double, 3>>();
        if (f.contains("cpt_false"))
            cfg.fusion.defaults.cpt_false = f["cpt_false"].get<std::array<double, 3>>();
    }

    if (j.contains("fuzzy")) {
        const json& f = j["fuzzy"];
        check_keys(f, {"rules"}, "fuzzy");
        if (f.contains("rules")) cfg.fuzzy_rules_path = f["rules"].get<std::string>();
    }

    if (j.contains("layout")) {
        const json& l = j["layout"];
        check_keys(l, {"aisles", "racks_per_aisle", "setpoint", "period"}, "layout");
        cfg.layout = build_layout(l.value("aisles", 1), l.value("racks_per_aisle", 8),
                                  l.value("setpoint", 24.0),
                                  l.value("period", std::int64_t{60}));
    }

    if (j.contains("scenario")) {
        const json& sc = j["scenario"];
        check_keys(sc, {"duration", "seed", "baseline", "injections"}, "scenario");
        ScenarioSpec spec;
        if (sc.contains("duration")) spec.duration = sc["duration"].get<std::int64_t>();
        if (sc.contains("seed")) spec.seed = sc["seed"].get<std::uint64_t>();
        if (sc.contains("baseline")) {
            const json& b = sc["baseline"];
            check_keys(b, {"setpoint", "noise_sigma", "diurnal_amplitude", "ar1_coefficient"},
                       "scenario.baseline");
            if (b.contains("setpoint")) spec.baseline.setpoint = b["setpoint"].get<double>();
            if (b.contains("noise_sigma"))
                spec.baseline.noise_sigma = b["noise_sigma"].get<double>();
            if (b.contains("diurnal_amplitude"))
                spec.baseline.diurnal_amplitude = b["diurnal_amplitude"].get<double>();
            if (b.contains("ar1_coefficient"))
                spec.baseline.ar1_coefficient = b["ar1_coefficient"].get<double>();
        }
        if (sc.contains("injections")) {
            for (const auto& inj_json : sc["injections"]) {
                check_keys(inj_json, {"kind", "targets", "start", "duration", "magnitude"},
                           "scenario.injections[]");
                Injection inj;
                inj.kind = injection_kind_from_string(inj_json.at("kind").get<std::string>());
                inj.targets = inj_json.at("targets").get<std::vector<std::string>>();
                inj.start = inj_json.at("start").get<std::int64_t>();
                inj.duration = inj_json.at("duration").get<std::int64_t>();
                inj.magnitude = inj_json.at("magnitude").get<double>();
                spec.injections.push_back(std::move(inj));
            }
        }
        cfg.scenario = spec;
    }

    cfg.validate();
    return cfg;
}

void PipelineConfig::validate() const {
    scorer.validate();
    if (faultclass.theta < 1) throw ConfigError("faultclass.theta must be >= 1");
    if (faultclass.min_run < 2) throw ConfigError("faultclass.L must be >= 2");
    if (faultclass.delta < 0.0) throw ConfigError("faultclass.delta must be >= 0");
    if (faultclass.min_run > faultclass.window)
        throw ConfigError("faultclass.L must not exceed faultclass.T");
    if (faultclass.theta >= faultclass.window)
        throw ConfigError("faultclass.theta must be below faultclass.T");
    if (faultclass.slide < 1) throw ConfigError("faultclass.slide must be >= 1");
    if (!(fusion.l_low > 0.0 && fusion.l_low < fusion.l_high && fusion.l_high < 1.0))
        throw ConfigError("fusion thresholds must satisfy 0 < l_low < l_high < 1");
    if (!(fusion.rho > 0.0 && fusion.rho < 1.0)) throw ConfigError("fusion.rho must be in (0,1)");
    if (fusion.min_dur < 1) throw ConfigError("fusion.min_dur must be >= 1");
    if (fusion.merge_gap < 0) throw ConfigError("fusion.merge_gap must be >= 0");
    if (io.period <= 0) throw ConfigError("io.period must be positive");
    if (io.max_gap < 0) throw ConfigError("io.max_gap must be >= 0");
    if (grouping.vote.tau_fixed && *grouping.vote.tau_fixed <= 0.0)
        throw ConfigError("grouping.tau.fixed must be positive");
    if (grouping.vote.warmup < 1) throw ConfigError("grouping.tau.warmup must be >= 1");
    if (grouping.vote.multiplier <= 0.0)
        throw ConfigError("grouping.tau.multiplier must be positive");
    if (grouping.vote.floor <= 0.0) throw ConfigError("grouping.tau.floor must be positive");
}

DetectResult run_detect(const PipelineConfig& config, const LabeledTrace& trace,
                        const std::vector<SensorMeta>& topology, bool parallel) {
    DetectResult result;
    result.table = align(trace, config.io.period, config.io.max_gap);

    std::vector<GroupSpec> groups = config.grouping.groups;
    if (groups.empty()) {
        if (!config.grouping.strategy)
            throw ConfigError("grouping requires explicit groups or a strategy");
        groups = build_groups(topology, *config.grouping.strategy);
    }
    // Restrict groups to sensors actually present in the trace.
    {
        std::set<std::string> present(result.table.sensor_ids.begin(),
                                      result.table.sensor_ids.end());
        for (auto& g : groups) {
            std::vector<std::string> kept;
            for (auto& id : g.members)
                if (present.count(id)) kept.push_back(id);
            g.members = std::move(kept);
        }
        std::erase_if(groups, [](const GroupSpec& g) { return g.members.empty(); });
        if (groups.empty()) throw InputError("no configured group has data in the trace");
    }

    result.votes = vote_table(result.table, groups, config.grouping.vote, parallel);

    // Fault classification per sensor, in parallel; windows slide over the
    // aligned grid.
    const std::size_t n_sensors = result.table.sensor_ids.size();
    const std::size_t n_instants = result.table.num_instants();
    std::vector<std::vector<FaultReport>> per_sensor_reports(n_sensors);
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(n_sensors); ++s) {
        std::vector<double> values(n_instants, 0.0);
        auto flags = std::make_unique<bool[]>(n_instants);
        std::vector<double> residuals(n_instants, 0.0);
        for (std::size_t i = 0; i < n_instants; ++i) {
            if (result.table.cells[s][i]) values[i] = *result.table.cells[s][i];
            flags[i] = result.votes.faulty[s][i];
            residuals[i] = result.votes.residual[s][i];
        }
        per_sensor_reports[s] = classify_stream(
            result.table.sensor_ids[s], result.table.timestamps, values,
            std::span<const bool>(flags.get(), n_instants), residuals, config.faultclass);
    }
    for (auto& reports : per_sensor_reports)
        for (auto& r : reports)
            if (r.fault_class != FaultClass::None) result.faults.push_back(std::move(r));
    std::stable_sort(result.faults.begin(), result.faults.end(),
                     [](const FaultReport& a, const FaultReport& b) {
                         return std::tie(a.window_end, a.sensor_id) <
                                std::tie(b.window_end, b.sensor_id);
                     });

    result.frame = aggregate_groups(result.table, result.votes, parallel);

    result.scores.resize(result.frame.group_ids.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::ptrdiff_t g = 0; g < static_cast<std::ptrdiff_t>(result.frame.group_ids.size());
         ++g) {
        result.scores[g] = score_stream(result.frame.group_ids[g], result.frame.timestamps,
                                        result.frame.series[g], config.scorer);
    }

    // Discretized evidence per instant, then exact posterior on the star.
    result.evidence.assign(n_instants, std::vector<std::optional<EvidenceState>>(
                                           result.frame.group_ids.size()));
    for (std::size_t i = 0; i < n_instants; ++i)
        for (std::size_t g = 0; g < result.frame.group_ids.size(); ++g)
            result.evidence[i][g] =
                discretize(result.scores[g].scores[i], config.fusion.l_low, config.fusion.l_high);

    if (!config.fusion.model_path.empty()) {
        std::ifstream in(config.fusion.model_path);
        if (!in) throw InputError("cannot open BN model: " + config.fusion.model_path);
        result.model = BNModel::load(in);
        // Align model groups with the frame order.
        std::vector<GroupCpt> ordered;
        for (const auto& id : result.frame.group_ids) {
            auto it = std::find_if(result.model.groups.begin(), result.model.groups.end(),
                                   [&](const GroupCpt& c) { return c.group_id == id; });
            if (it == result.model.groups.end())
                throw InputError("BN model lacks group: " + id);
            ordered.push_back(*it);
        }
        result.model.groups = std::move(ordered);
    } else {
        result.model = fit_cpts(result.frame.group_ids, result.evidence, std::nullopt,
                                config.fusion.defaults);
    }

    result.posterior_series.resize(n_instants);
    for (std::size_t i = 0; i < n_instants; ++i)
        result.posterior_series[i] = posterior(result.model, result.evidence[i]);

    result.regions =
        detect_regions(result.table.timestamps, result.posterior_series, config.fusion.rho,
                       config.fusion.min_dur, config.fusion.merge_gap, result.frame.group_ids,
                       result.evidence);

    if (!config.fuzzy_rules_path.empty()) {
        std::ifstream in(config.fuzzy_rules_path);
        if (!in) throw InputError("cannot open rule file: " + config.fuzzy_rules_path);
        result.rulebase = RuleBase::load(in);
    } else {
        result.rulebase = default_rulebase(result.frame.group_ids);
    }

    result.health_timestamps = result.frame.timestamps;
    result.health.resize(n_instants);
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n_instants); ++i) {
        std::map<std::string, double> inputs;
        for (std::size_t g = 0; g < result.frame.group_ids.size(); ++g)
            inputs[result.frame.group_ids[g]] = result.scores[g].scores[i];
        result.health[i] = assess_health(inputs, result.rulebase);
    }
    return result;
}

void write_artifacts(const std::string& out_dir, const LabeledTrace& trace,
                     const DetectResult& result) {
    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "readings.jsonl");
        write_readings_jsonl(out, trace);
    }
    {
        std::ofstream out(fs::path(out_dir) / "votes.jsonl");
        for (const auto& v : result.votes.votes) {
            json j;
            j["t"] = v.t;
            j["sensor"] = v.sensor_id;
            j["verdict"] = v.verdict == Verdict::faulty ? "faulty" : "good";
            j["D"] = v.D;
            j["neighbours"] = v.neighbour_count;
            out << j.dump() << '\n';
        }
    }
    {
        std::ofstream out(fs::path(out_dir) / "faults.jsonl");
        for (const auto& f : result.faults) {
            json j;
            j["t"] = f.window_end;
            j["sensor"] = f.sensor_id;
            j["class"] = to_string(f.fault_class);
            j["count"] = f.evidence.fault_count;
            j["continuous"] = f.evidence.continuous;
            j["constant"] = f.evidence.constant;
            out << j.dump() << '\n';
        }
    }
    {
        std::ofstream out(fs::path(out_dir) / "scores.jsonl");
        for (std::size_t i = 0; i < result.frame.timestamps.size(); ++i)
            for (std::size_t g = 0; g < result.scores.size(); ++g) {
                json j;
                j["t"] = result.frame.timestamps[i];
                j["group"] = result.scores[g].group_id;
                j["S"] = result.scores[g].scores[i];
                out << j.dump() << '\n';
            }
    }
    {
        std::ofstream out(fs::path(out_dir) / "regions.jsonl");
        for (const auto& r : result.regions) {
            json j;
            j["t_start"] = r.t_start;
            j["t_end"] = r.t_end;
            j["peak"] = r.peak;
            j["groups"] = r.groups;
            out << j.dump() << '\n';
        }
    }
    {
        std::ofstream out(fs::path(out_dir) / "health.jsonl");
        for (std::size_t i = 0; i < result.health.size(); ++i) {
            json j;
            j["t"] = result.health_timestamps[i];
            j["health"] = result.health[i].health;
            j["label"] = result.health[i].dominant_label;
            out << j.dump() << '\n';
        }
    }
}

namespace {

bool is_fault_label(Label l) {
    return l == Label::random || l == Label::malfunction || l == Label::bias ||
           l == Label::drift;
}

bool is_event_label(Label l) {
    return l == Label::hotspot_attack || l == Label::cooling_degradation;
}

FaultClass label_to_class(Label l) {
    switch (l) {
        case Label::random: return FaultClass::Random;
        case Label::malfunction: return FaultClass::Malfunction;
        case Label::bias: return FaultClass::Bias;
        case Label::drift: return FaultClass::Drift;
        default: return FaultClass::None;
    }
}

struct Interval {
    std::int64_t t_start, t_end;  // inclusive
};

bool overlaps(const Interval& a, std::int64_t t_start, std::int64_t t_end) {
    return a.t_start <= t_end && t_start <= a.t_end;
}

EvalReport evaluate(const std::vector<std::string>& sensor_ids,
                    const std::vector<std::int64_t>& timestamps,
                    const std::vector<FaultReport>& faults,
                    const std::vector<AnomalyRegion>& regions, const LabeledTrace& labels,
                    const ClassifierParams& params, std::int64_t period) {
    EvalReport report;

    // Ground-truth class per (sensor, window): the most frequent fault label
    // in the window, None when unlabeled.
    std::map<std::pair<std::string, std::int64_t>, FaultClass> predicted;
    for (const auto& f : faults) predicted[{f.sensor_id, f.window_end}] = f.fault_class;

    const auto classes = {FaultClass::Random, FaultClass::Malfunction, FaultClass::Bias,
                          FaultClass::Drift};
    std::map<FaultClass, int> tp, fp, fn;
    const std::size_t window = static_cast<std::size_t>(params.window);
    const std::size_t slide = static_cast<std::size_t>(std::max(params.slide, 1));
    for (const auto& sensor : sensor_ids) {
        for (std::size_t start = 0; start + window <= timestamps.size(); start += slide) {
            std::map<FaultClass, int> counts;
            for (std::size_t i = start; i < start + window; ++i) {
                auto it = labels.labels.find({sensor, timestamps[i]});
                if (it != labels.labels.end() && is_fault_label(it->second))
                    ++counts[label_to_class(it->second)];
            }
            FaultClass truth = FaultClass::None;
            int best = 0;
            for (const auto& [c, n] : counts)
                if (n > best) {
                    best = n;
                    truth = c;
                }
            auto it = predicted.find({sensor, timestamps[start + window - 1]});
            const FaultClass pred = it != predicted.end() ? it->second : FaultClass::None;
            if (pred == truth) {
                if (truth != FaultClass::None) ++tp[truth];
            } else {
                if (pred != FaultClass::None) ++fp[pred];
                if (truth != FaultClass::None) ++fn[truth];
            }
        }
    }
    for (FaultClass c : classes) {
        ClassMetrics m;
        m.support = tp[c] + fn[c];
        const int denom_p = tp[c] + fp[c];
        m.precision = denom_p > 0 ? static_cast<double>(tp[c]) / denom_p : 0.0;
        m.recall = m.support > 0 ? static_cast<double>(tp[c]) / m.support : 0.0;
        m.f1 = m.precision + m.recall > 0.0
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;
        report.fault_metrics[to_string(c)] = m;
    }

    // System-level events: maximal runs of instants where any sensor carries
    // an attack/degradation label.
    std::vector<bool> event_at(timestamps.size(), false);
    std::map<std::int64_t, std::size_t> instant_index;
    for (std::size_t i = 0; i < timestamps.size(); ++i) instant_index[timestamps[i]] = i;
    for (const auto& [key, label] : labels.labels) {
        if (!is_event_label(label)) continue;
        auto it = instant_index.lower_bound(key.second);
        if (it != instant_index.end() && it->first - key.second < period)
            event_at[it->second] = true;
    }
    std::vector<Interval> events;
    for (std::size_t i = 0; i < event_at.size(); ++i) {
        if (!event_at[i]) continue;
        if (!events.empty() &&
            events.back().t_end + period >= timestamps[i])
            events.back().t_end = timestamps[i];
        else
            events.push_back({timestamps[i], timestamps[i]});
    }

    auto& rm = report.region_metrics;
    rm.events = static_cast<int>(events.size());
    rm.predicted = static_cast<int>(regions.size());
    int matched_regions = 0;
    for (const auto& r : regions) {
        bool hit = false;
        for (const auto& e : events)
            if (overlaps(e, r.t_start, r.t_end)) hit = true;
        matched_regions += hit ? 1 : 0;
    }
    int detected_events = 0;
    for (const auto& e : events) {
        std::optional<std::int64_t> latency;
        for (const auto& r : regions) {
            if (!overlaps(e, r.t_start, r.t_end)) continue;
            const std::int64_t samples = std::max<std::int64_t>(0, (r.t_start - e.t_start) / period);
            if (!latency || samples < *latency) latency = samples;
        }
        if (latency) ++detected_events;
        rm.latency.push_back(latency);
    }
    rm.matched = matched_regions;
    if (rm.predicted > 0)
        rm.precision = static_cast<double>(matched_regions) / rm.predicted;
    if (rm.events > 0) rm.recall = static_cast<double>(detected_events) / rm.events;
    if (rm.precision && rm.recall && (*rm.precision + *rm.recall) > 0.0)
        rm.f1 = 2.0 * *rm.precision * *rm.recall / (*rm.precision + *rm.recall);
    return report;
}

}  // namespace

EvalReport run_eval(const DetectResult& result, const LabeledTrace& labels,
                    const PipelineConfig& config) {
    return evaluate(result.table.sensor_ids, result.table.timestamps, result.faults,
                    result.regions, labels, config.faultclass, config.io.period);
}

EvalReport run_eval_dir(const std::string& predictions_dir, const std::string& labels_path,
                        const PipelineConfig& config) {
    const fs::path dir(predictions_dir);
    std::ifstream readings_in(dir / "readings.jsonl");
    if (!readings_in) throw InputError("cannot open readings.jsonl in " + predictions_dir);
    LabeledTrace trace = read_readings_jsonl(readings_in);
    if (trace.readings.empty()) throw EmptyTrace();
    validate_trace(trace);
    AlignedTable table = align(trace, config.io.period, config.io.max_gap);

    LabeledTrace labels;
    {
        std::ifstream in(labels_path);
        if (!in) throw InputError("cannot open labels: " + labels_path);
        read_labels_jsonl(in, labels);
    }
    // Both files must describe the same trace.
    for (const auto& [key, _] : labels.labels) {
        if (key.second < table.t0 ||
            key.second > table.timestamps.back())
            throw TraceMismatch("label at t=" + std::to_string(key.second) +
                                " outside prediction range");
    }

    std::vector<FaultReport> faults;
    {
        std::ifstream in(dir / "faults.jsonl");
        std::string line;
        while (in && std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            FaultReport f;
            f.sensor_id = j.at("sensor").get<std::string>();
            f.window_end = j.at("t").get<std::int64_t>();
            f.fault_class = fault_class_from_string(j.at("class").get<std::string>());
            f.evidence.fault_count = j.value("count", 0);
            f.evidence.continuous = j.value("continuous", false);
            f.evidence.constant = j.value("constant", false);
            faults.push_back(std::move(f));
        }
    }
    std::vector<AnomalyRegion> regions;
    {
        std::ifstream in(dir / "regions.jsonl");
        std::string line;
        while (in && std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            AnomalyRegion r;
            r.t_start = j.at("t_start").get<std::int64_t>();
            r.t_end = j.at("t_end").get<std::int64_t>();
            r.peak = j.at("peak").get<double>();
            if (j.contains("groups")) r.groups = j["groups"].get<std::vector<std::string>>();
            regions.push_back(std::move(r));
        }
    }
    return evaluate(table.sensor_ids, table.timestamps, faults, regions, labels,
                    config.faultclass, config.io.period);
}

void write_eval_json(std::ostream& out, const EvalReport& report) {
    json j;
    for (const auto& [name, m] : report.fault_metrics)
        j["fault"][name] = {{"precision", m.precision},
                            {"recall", m.recall},
                            {"f1", m.f1},
                            {"support", m.support}};
    const auto& rm = report.region_metrics;
    json regions;
    regions["events"] = rm.events;
    regions["predicted"] = rm.predicted;
    regions["matched"] = rm.matched;
    regions["precision"] = rm.precision ? json(*rm.precision) : json(nullptr);
    regions["recall"] = rm.recall ? json(*rm.recall) : json(nullptr);
    regions["f1"] = rm.f1 ? json(*rm.f1) : json(nullptr);
    json lat = json::array();
    for (const auto& l : rm.latency) lat.push_back(l ? json(*l) : json(nullptr));
    regions["latency_samples"] = lat;
    j["regions"] = regions;
    out << j.dump(2) << '\n';
}

std::string format_eval_table(const EvalReport& report) {
    std::ostringstream out;
    out << "class         precision  recall     f1         support\n";
    for (const auto& [name, m] : report.fault_metrics) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%-13s %-10.3f %-10.3f %-10.3f %d\n", name.c_str(),
                      m.precision, m.recall, m.f1, m.support);
        out << buf;
    }
    const auto& rm = report.region_metrics;
    out << "regions: events=" << rm.events << " predicted=" << rm.predicted
        << " matched=" << rm.matched;
    auto opt = [](const std::optional<double>& v) {
        return v ? std::to_string(*v) : std::string("null");
    };
    out << " precision=" << opt(rm.precision) << " recall=" << opt(rm.recall)
        << " f1=" << opt(rm.f1) << "\n";
    return out.str();
}

std::string describe_rule(const RuleBase& base, std::size_t rule_index) {
    const FuzzyRule& rule = base.rules.at(rule_index);
    std::string s = "IF ";
    for (std::size_t i = 0; i < rule.antecedent.size(); ++i) {
        if (i) s += " AND ";
        s += rule.antecedent[i].first + " IS " + rule.antecedent[i].second;
    }
    s += " THEN Health IS " + rule.consequent;
    return s;
}

std::vector<RegionNarrative> run_explain(const DetectResult& result) {
    std::vector<RegionNarrative> narratives;
    for (const auto& region : result.regions) {
        RegionNarrative narrative;
        narrative.region = region;
        narrative.contributing_groups = region.groups;

        // Aggregate rule activations over the instants the region covers.
        std::vector<double> total(result.rulebase.rules.size(), 0.0);
        std::map<std::string, int> label_votes;
        for (std::size_t i = 0; i < result.health_timestamps.size(); ++i) {
            const std::int64_t t = result.health_timestamps[i];
            if (t < region.t_start || t > region.t_end) continue;
            for (const auto& [rule_idx, strength] : result.health[i].activations)
                total[rule_idx] += strength;
            ++label_votes[result.health[i].dominant_label];
        }
        int best_votes = 0;
        for (const auto& s : result.rulebase.output.sets) {
            // Iterate sets in declaration order so ties break stably.
            auto it = label_votes.find(s.label);
            if (it != label_votes.end() && it->second > best_votes) {
                best_votes = it->second;
                narrative.dominant_label = s.label;
            }
        }
        std::vector<std::size_t> order(total.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return total[a] > total[b];  // ties keep declaration order
        });
        for (std::size_t i = 0; i < order.size() && narrative.top_rules.size() < 3; ++i) {
            if (total[order[i]] <= 0.0) break;
            narrative.top_rules.emplace_back(describe_rule(result.rulebase, order[i]),
                                             total[order[i]]);
        }
        narratives.push_back(std::move(narrative));
    }
    return narratives;
}

void write_explain_jsonl(std::ostream& out, const std::vector<RegionNarrative>& narratives) {
    for (const auto& n : narratives) {
        json j;
        j["t_start"] = n.region.t_start;
        j["t_end"] = n.region.t_end;
        j["peak"] = n.region.peak;
        j["health_label"] = n.dominant_label;
        json rules = json::array();
        for (const auto& [desc, strength] : n.top_rules)
            rules.push_back({{"rule", desc}, {"activation", strength}});
        j["top_rules"] = rules;
        j["groups"] = n.contributing_groups;
        out << j.dump() << '\n';
    }
}

}  // namespace thermon
