#include "thermon/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "thermon/errors.hpp"

namespace thermon {

std::vector<GroupSpec> build_groups(const std::vector<SensorMeta>& topology,
                                    GroupingStrategy strategy) {
    if (topology.empty()) throw EmptyTopology();
    std::map<std::string, GroupSpec> groups;
    if (strategy == GroupingStrategy::by_kind) {
        for (const auto& m : topology) {
            std::string key = to_string(m.kind);
            if (m.kind == SensorKind::other && !m.tag.empty()) key += ":" + m.tag;
            auto& g = groups[key];
            g.group_id = key;
            g.basis = GroupBasis::phenomenon;
            g.members.push_back(m.sensor_id);
        }
    } else {
        for (const auto& m : topology) {
            if (!m.location) throw UnlocatedSensor(m.sensor_id);
            std::string key = "aisle" + std::to_string(m.location->aisle) + "-" +
                              to_string(m.location->height);
            auto& g = groups[key];
            g.group_id = key;
            g.basis = GroupBasis::spatial;
            g.members.push_back(m.sensor_id);
        }
    }
    std::vector<GroupSpec> out;
    out.reserve(groups.size());
    for (auto& [_, g] : groups) {
        std::sort(g.members.begin(), g.members.end());
        out.push_back(std::move(g));
    }
    return out;
}

double median(std::span<const double> values) {
    if (values.empty()) throw EmptyInput();
    std::vector<double> scratch(values.begin(), values.end());
    const std::size_t mid = scratch.size() / 2;
    std::nth_element(scratch.begin(), scratch.begin() + mid, scratch.end());
    if (scratch.size() % 2 == 1) return scratch[mid];
    const double hi = scratch[mid];
    const double lo = *std::max_element(scratch.begin(), scratch.begin() + mid);
    return (lo + hi) / 2.0;
}

VoteResult neighbourhood_vote(double r_i, std::span<const double> neighbours, double tau) {
    if (neighbours.empty()) throw NoNeighbours();
    if (tau <= 0.0) throw ConfigError("vote threshold tau must be positive");
    VoteResult result;
    result.neighbour_count = static_cast<int>(neighbours.size());
    result.D = std::abs(r_i - median(neighbours));
    // Ties at D == tau are faulty.
    result.verdict = result.D >= tau ? Verdict::faulty : Verdict::good;
    return result;
}

std::optional<double> group_aggregate(std::span<const double> values,
                                      std::span<const std::optional<Verdict>> verdicts) {
    std::vector<double> good;
    good.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i < verdicts.size() && verdicts[i] == Verdict::faulty) continue;
        good.push_back(values[i]);
    }
    if (good.empty()) return std::nullopt;
    return median(good);
}

namespace {

struct GroupIndex {
    std::vector<std::size_t> member_rows;  // rows in the aligned table
};

double estimate_tau(const AlignedTable& table, const GroupIndex& gi, const VoteConfig& cfg) {
    const std::size_t n = std::min<std::size_t>(table.num_instants(),
                                                static_cast<std::size_t>(std::max(cfg.warmup, 1)));
    double sum = 0.0, sum_sq = 0.0;
    std::size_t count = 0;
    std::vector<double> others;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t mi = 0; mi < gi.member_rows.size(); ++mi) {
            const auto& own = table.cells[gi.member_rows[mi]][i];
            if (!own) continue;
            others.clear();
            for (std::size_t mj = 0; mj < gi.member_rows.size(); ++mj) {
                if (mj == mi) continue;
                if (const auto& v = table.cells[gi.member_rows[mj]][i]) others.push_back(*v);
            }
            if (others.empty()) continue;
            const double r = *own - median(others);
            sum += r;
            sum_sq += r * r;
            ++count;
        }
    }
    if (count < 2) return cfg.floor;
    const double mean = sum / static_cast<double>(count);
    const double var = std::max(0.0, sum_sq / static_cast<double>(count) - mean * mean);
    return std::max(cfg.multiplier * std::sqrt(var), cfg.floor);
}

void vote_one_group(const AlignedTable& table, const GroupSpec& group, const GroupIndex& gi,
                    double tau, std::vector<VoteResult>& votes,
                    std::vector<std::vector<bool>>& faulty,
                    std::vector<std::vector<double>>& residual) {
    std::vector<double> others;
    for (std::size_t i = 0; i < table.num_instants(); ++i) {
        for (std::size_t mi = 0; mi < gi.member_rows.size(); ++mi) {
            const std::size_t row = gi.member_rows[mi];
            const auto& own = table.cells[row][i];
            if (!own) continue;
            others.clear();
            for (std::size_t mj = 0; mj < gi.member_rows.size(); ++mj) {
                if (mj == mi) continue;
                if (const auto& v = table.cells[gi.member_rows[mj]][i]) others.push_back(*v);
            }
            if (others.empty()) continue;  // singleton at this instant: verdict stays unset
            VoteResult vr = neighbourhood_vote(*own, others, tau);
            vr.sensor_id = table.sensor_ids[row];
            vr.t = table.timestamps[i];
            if (vr.verdict == Verdict::faulty) {
                faulty[row][i] = true;
                residual[row][i] = vr.D;
            }
            votes.push_back(std::move(vr));
        }
    }
}

}  // namespace

GroupVotes vote_table(const AlignedTable& table, const std::vector<GroupSpec>& groups,
                      const VoteConfig& config, bool parallel) {
    GroupVotes out;
    out.groups = groups;
    out.faulty.assign(table.sensor_ids.size(),
                      std::vector<bool>(table.num_instants(), false));
    out.residual.assign(table.sensor_ids.size(),
                        std::vector<double>(table.num_instants(), 0.0));

    std::vector<GroupIndex> indices(groups.size());
    std::vector<bool> claimed(table.sensor_ids.size(), false);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].members.empty()) throw ConfigError("empty group: " + groups[g].group_id);
        for (const auto& id : groups[g].members) {
            const std::size_t row = table.index_of(id);
            // One vote pass needs disjoint groups; overlapping specs must be
            // voted in separate passes.
            if (claimed[row]) throw ConfigError("sensor in more than one group: " + id);
            claimed[row] = true;
            indices[g].member_rows.push_back(row);
        }
    }

    std::vector<double> taus(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        auto it = config.tau_overrides.find(groups[g].group_id);
        if (it != config.tau_overrides.end())
            taus[g] = it->second;
        else if (config.tau_fixed)
            taus[g] = *config.tau_fixed;
        else
            taus[g] = estimate_tau(table, indices[g], config);
        if (taus[g] <= 0.0)
            throw ConfigError("tau must be positive for group " + groups[g].group_id);
        out.tau[groups[g].group_id] = taus[g];
    }

    std::vector<std::vector<VoteResult>> per_group(groups.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::ptrdiff_t g = 0; g < static_cast<std::ptrdiff_t>(groups.size()); ++g) {
        vote_one_group(table, groups[g], indices[g], taus[g], per_group[g], out.faulty,
                       out.residual);
    }
    for (auto& v : per_group)
        out.votes.insert(out.votes.end(), std::make_move_iterator(v.begin()),
                         std::make_move_iterator(v.end()));
    std::stable_sort(out.votes.begin(), out.votes.end(),
                     [](const VoteResult& a, const VoteResult& b) {
                         return std::tie(a.t, a.sensor_id) < std::tie(b.t, b.sensor_id);
                     });
    return out;
}

MultivariateFrame aggregate_groups(const AlignedTable& table, const GroupVotes& votes,
                                   bool parallel) {
    MultivariateFrame frame;
    frame.timestamps = table.timestamps;
    frame.group_ids.reserve(votes.groups.size());
    for (const auto& g : votes.groups) frame.group_ids.push_back(g.group_id);
    frame.series.assign(votes.groups.size(),
                        std::vector<std::optional<double>>(table.num_instants()));

#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::ptrdiff_t g = 0; g < static_cast<std::ptrdiff_t>(votes.groups.size()); ++g) {
        std::vector<std::size_t> rows;
        for (const auto& id : votes.groups[g].members) rows.push_back(table.index_of(id));
        std::vector<double> good;
        for (std::size_t i = 0; i < table.num_instants(); ++i) {
            good.clear();
            for (std::size_t row : rows) {
                if (!table.cells[row][i]) continue;
                if (votes.faulty[row][i]) continue;
                good.push_back(*table.cells[row][i]);
            }
            if (!good.empty()) frame.series[g][i] = median(good);
        }
    }
    return frame;
}

}  // namespace thermon
