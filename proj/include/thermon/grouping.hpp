#ifndef THERMON_GROUPING_HPP
#define THERMON_GROUPING_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thermon/telemetry.hpp"

namespace thermon {

enum class GroupBasis { phenomenon, spatial };

struct GroupSpec {
    std::string group_id;
    std::vector<std::string> members;  // sensor ids
    GroupBasis basis = GroupBasis::phenomenon;
};

enum class GroupingStrategy { by_kind, by_aisle_height };

// by_kind: one group per distinct sensor kind. by_aisle_height: one group per
// (aisle, height) pair; throws UnlocatedSensor if a sensor has no location.
std::vector<GroupSpec> build_groups(const std::vector<SensorMeta>& topology,
                                    GroupingStrategy strategy);

enum class Verdict { good, faulty };

struct VoteResult {
    std::string sensor_id;
    std::int64_t t = 0;
    // Unset when the sensor had no neighbours at this instant; such readings
    // pass through as good downstream.
    std::optional<Verdict> verdict;
    double D = 0.0;
    int neighbour_count = 0;
};

// Middle order statistic; arithmetic mean of the two middle values when the
// count is even. Throws EmptyInput.
double median(std::span<const double> values);

// Steps 1-4 of the voting scheme: D = |r_i - median(R)|, faulty iff D >= tau.
// Throws NoNeighbours when R is empty.
VoteResult neighbourhood_vote(double r_i, std::span<const double> neighbours, double tau);

// Median of the readings voted good at one instant (unvoted readings count
// as good); nullopt when no good reading exists.
std::optional<double> group_aggregate(std::span<const double> values,
                                      std::span<const std::optional<Verdict>> verdicts);

struct VoteConfig {
    // When no explicit tau is given for a group, tau is estimated as
    // multiplier * stddev of member residuals over the first warmup instants,
    // floored to keep it positive on quiet groups.
    std::optional<double> tau_fixed;
    std::map<std::string, double> tau_overrides;  // group_id -> tau
    int warmup = 120;
    double multiplier = 3.0;
    double floor = 0.1;
};

struct GroupVotes {
    std::vector<GroupSpec> groups;
    std::map<std::string, double> tau;           // group_id -> threshold used
    std::vector<VoteResult> votes;               // time-ordered, voted cells only
    // faulty[sensor][instant]: true where the vote said faulty; indices match
    // the aligned table.
    std::vector<std::vector<bool>> faulty;
    std::vector<std::vector<double>> residual;   // D where faulty, 0 elsewhere
};

struct MultivariateFrame {
    std::vector<std::int64_t> timestamps;
    std::vector<std::string> group_ids;
    std::vector<std::vector<std::optional<double>>> series;  // [group][instant]
};

// Votes every cell of the table against its group neighbours. Groups are
// independent; `parallel` fans them out across OpenMP threads. Results are
// identical either way.
GroupVotes vote_table(const AlignedTable& table, const std::vector<GroupSpec>& groups,
                      const VoteConfig& config, bool parallel = true);

// One aggregated series per group (median of good readings per instant).
MultivariateFrame aggregate_groups(const AlignedTable& table, const GroupVotes& votes,
                                   bool parallel = true);

}  // namespace thermon

#endif
