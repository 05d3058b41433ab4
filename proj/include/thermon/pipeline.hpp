#ifndef THERMON_PIPELINE_HPP
#define THERMON_PIPELINE_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "thermon/faultclass.hpp"
#include "thermon/fusion.hpp"
#include "thermon/fuzzy.hpp"
#include "thermon/grouping.hpp"
#include "thermon/scorer.hpp"
#include "thermon/simulator.hpp"
#include "thermon/telemetry.hpp"

namespace thermon {

struct IoConfig {
    std::string input;
    std::string out_dir;
    std::string format = "jsonl";  // "jsonl" or "csv"
    ColumnMapping column_mapping{"timestamp", "sensor", "value", std::nullopt};
    TimestampFormat timestamp_format = TimestampFormat::epoch_seconds;
    double max_malformed_fraction = 0.1;
    std::int64_t period = 60;
    std::int64_t max_gap = 5;
    std::string topology;  // path to topology.json (needed for strategies)
    std::string labels;    // path to labels.jsonl (eval)
};

struct GroupingConfig {
    std::optional<GroupingStrategy> strategy;  // used when explicit groups absent
    std::vector<GroupSpec> groups;
    VoteConfig vote;
};

struct FusionConfig {
    double l_low = 0.5;
    double l_high = 0.9;
    double rho = 0.9;
    int min_dur = 3;
    int merge_gap = 2;
    std::string model_path;  // fitted BN model JSON; defaults apply when empty
    FusionDefaults defaults;
};

struct PipelineConfig {
    GroupingConfig grouping;
    ClassifierParams faultclass;
    ScorerParams scorer;
    FusionConfig fusion;
    std::string fuzzy_rules_path;  // rule file; auto-generated when empty
    IoConfig io;
    std::optional<RoomLayout> layout;      // simulate only
    std::optional<ScenarioSpec> scenario;  // simulate only

    // Parses the single JSON config document. Unknown keys and out-of-range
    // values are ConfigErrors.
    static PipelineConfig load(std::istream& in);
    void validate() const;
};

struct DetectResult {
    AlignedTable table;
    GroupVotes votes;
    std::vector<FaultReport> faults;  // non-None windows only
    MultivariateFrame frame;
    std::vector<AnomalyScoreSeries> scores;
    std::vector<double> posterior_series;
    std::vector<std::vector<std::optional<EvidenceState>>> evidence;  // [instant][group]
    std::vector<AnomalyRegion> regions;
    std::vector<std::int64_t> health_timestamps;
    std::vector<HealthAssessment> health;
    RuleBase rulebase;
    BNModel model;
};

// Full pipeline: align -> group/vote -> classify + aggregate -> score ->
// fuse -> fuzzy health. Pure apart from the parallel fan-out; identical
// inputs give identical results.
DetectResult run_detect(const PipelineConfig& config, const LabeledTrace& trace,
                        const std::vector<SensorMeta>& topology, bool parallel = true);

// Writes readings.jsonl, votes.jsonl, faults.jsonl, scores.jsonl,
// regions.jsonl and health.jsonl under out_dir.
void write_artifacts(const std::string& out_dir, const LabeledTrace& trace,
                     const DetectResult& result);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int support = 0;
};

struct RegionMetrics {
    std::optional<double> precision;  // null when nothing was predicted
    std::optional<double> recall;     // null when there are no true events
    std::optional<double> f1;
    int events = 0;
    int predicted = 0;
    int matched = 0;
    // Per detected event: samples from event start to the first covering
    // region (0 when the region starts at or before the event).
    std::vector<std::optional<std::int64_t>> latency;
};

struct EvalReport {
    std::map<std::string, ClassMetrics> fault_metrics;  // per fault class
    RegionMetrics region_metrics;
};

// Region/event matching is any-overlap. Events are maximal label runs of
// hotspot_attack / cooling_degradation across the trace; fault instances are
// (sensor, window) pairs.
EvalReport run_eval(const DetectResult& result, const LabeledTrace& labels,
                    const PipelineConfig& config);

// Reads persisted prediction artifacts instead of an in-memory result.
EvalReport run_eval_dir(const std::string& predictions_dir, const std::string& labels_path,
                        const PipelineConfig& config);

void write_eval_json(std::ostream& out, const EvalReport& report);
std::string format_eval_table(const EvalReport& report);

struct RegionNarrative {
    AnomalyRegion region;
    std::string dominant_label;
    std::vector<std::pair<std::string, double>> top_rules;  // description, total activation
    std::vector<std::string> contributing_groups;
};

// Per-region explanation from the score streams and the rulebase used in the
// run. Ties in rule activation break by declaration order.
std::vector<RegionNarrative> run_explain(const DetectResult& result);

void write_explain_jsonl(std::ostream& out, const std::vector<RegionNarrative>& narratives);

std::string describe_rule(const RuleBase& base, std::size_t rule_index);

}  // namespace thermon

#endif
