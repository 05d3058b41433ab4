#include "thermon/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "json.hpp"

#include "thermon/errors.hpp"

namespace thermon {

using nlohmann::json;

std::string to_string(EvidenceState s) {
    switch (s) {
        case EvidenceState::low: return "low";
        case EvidenceState::med: return "med";
        case EvidenceState::high: return "high";
    }
    return "low";
}

EvidenceState discretize(double score, double l_low, double l_high) {
    if (!(0.0 < l_low && l_low < l_high && l_high < 1.0))
        throw ConfigError("discretize thresholds must satisfy 0 < l_low < l_high < 1");
    if (score < l_low) return EvidenceState::low;
    if (score < l_high) return EvidenceState::med;
    return EvidenceState::high;
}

void BNModel::validate() const {
    if (!(prior > 0.0 && prior < 1.0)) throw InvariantViolation("prior must be in (0,1)");
    for (const auto& g : groups) {
        double sum_t = 0.0, sum_f = 0.0;
        for (int s = 0; s < 3; ++s) {
            if (!(g.cpt_true[s] > 0.0 && g.cpt_true[s] < 1.0) ||
                !(g.cpt_false[s] > 0.0 && g.cpt_false[s] < 1.0))
                throw InvariantViolation("CPT entries must be in (0,1) for group " + g.group_id);
            sum_t += g.cpt_true[s];
            sum_f += g.cpt_false[s];
        }
        if (std::abs(sum_t - 1.0) > 1e-9 || std::abs(sum_f - 1.0) > 1e-9)
            throw InvariantViolation("CPT columns must sum to 1 for group " + g.group_id);
        const int high = static_cast<int>(EvidenceState::high);
        if (!(g.cpt_true[high] > g.cpt_false[high])) throw OrientationViolation(g.group_id);
    }
}

void BNModel::save(std::ostream& out) const {
    json j;
    j["prior"] = prior;
    j["groups"] = json::array();
    for (const auto& g : groups) {
        j["groups"].push_back({{"id", g.group_id},
                               {"cpt_true", g.cpt_true},
                               {"cpt_false", g.cpt_false}});
    }
    out << j.dump(2) << '\n';
}

BNModel BNModel::load(std::istream& in) {
    json j = json::parse(in);
    BNModel model;
    model.prior = j.at("prior").get<double>();
    for (const auto& g : j.at("groups")) {
        GroupCpt cpt;
        cpt.group_id = g.at("id").get<std::string>();
        cpt.cpt_true = g.at("cpt_true").get<std::array<double, 3>>();
        cpt.cpt_false = g.at("cpt_false").get<std::array<double, 3>>();
        model.groups.push_back(std::move(cpt));
    }
    model.validate();
    return model;
}

BNModel fit_cpts(const std::vector<std::string>& group_ids,
                 const std::vector<std::vector<std::optional<EvidenceState>>>& history,
                 const std::optional<std::vector<bool>>& labels,
                 const FusionDefaults& defaults) {
    if (history.empty()) throw EmptyInput();
    BNModel model;
    if (!labels) {
        model.prior = defaults.prior;
        for (const auto& id : group_ids)
            model.groups.push_back({id, defaults.cpt_true, defaults.cpt_false});
        model.validate();
        return model;
    }
    if (labels->size() != history.size())
        throw InvariantViolation("fit_cpts: labels/history disagree in length");

    std::size_t positives = 0;
    for (bool b : *labels) positives += b ? 1 : 0;
    const double fraction =
        static_cast<double>(positives) / static_cast<double>(labels->size());
    model.prior = std::clamp(fraction, 0.01, 0.5);

    for (std::size_t g = 0; g < group_ids.size(); ++g) {
        std::array<double, 3> count_true{}, count_false{};
        double total_true = 0.0, total_false = 0.0;
        for (std::size_t t = 0; t < history.size(); ++t) {
            if (g >= history[t].size() || !history[t][g]) continue;
            const int s = static_cast<int>(*history[t][g]);
            if ((*labels)[t]) {
                count_true[s] += 1.0;
                total_true += 1.0;
            } else {
                count_false[s] += 1.0;
                total_false += 1.0;
            }
        }
        GroupCpt cpt;
        cpt.group_id = group_ids[g];
        for (int s = 0; s < 3; ++s) {
            cpt.cpt_true[s] = (count_true[s] + 1.0) / (total_true + 3.0);
            cpt.cpt_false[s] = (count_false[s] + 1.0) / (total_false + 3.0);
        }
        const int high = static_cast<int>(EvidenceState::high);
        if (!(cpt.cpt_true[high] > cpt.cpt_false[high]))
            throw OrientationViolation(cpt.group_id);
        model.groups.push_back(std::move(cpt));
    }
    model.validate();
    return model;
}

double posterior(const BNModel& model,
                 const std::vector<std::optional<EvidenceState>>& evidence) {
    if (evidence.size() > model.groups.size())
        throw InvariantViolation("more evidence entries than model groups");
    double log_true = std::log(model.prior);
    double log_false = std::log1p(-model.prior);
    for (std::size_t g = 0; g < evidence.size(); ++g) {
        if (!evidence[g]) continue;
        const int s = static_cast<int>(*evidence[g]);
        log_true += std::log(model.groups[g].cpt_true[s]);
        log_false += std::log(model.groups[g].cpt_false[s]);
    }
    // posterior = exp(log_true) / (exp(log_true) + exp(log_false))
    const double m = std::max(log_true, log_false);
    const double num = std::exp(log_true - m);
    return num / (num + std::exp(log_false - m));
}

std::vector<AnomalyRegion> detect_regions(
    const std::vector<std::int64_t>& timestamps, const std::vector<double>& posterior_series,
    double rho, int min_dur, int merge_gap, const std::vector<std::string>& group_ids,
    const std::vector<std::vector<std::optional<EvidenceState>>>& evidence) {
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must be in (0,1)");
    if (min_dur < 1) throw ConfigError("min_dur must be >= 1");
    if (timestamps.size() != posterior_series.size())
        throw InvariantViolation("detect_regions: series/timestamps disagree");

    // Index-space runs first, then merge and filter.
    struct Run {
        std::size_t begin, end;  // inclusive
    };
    std::vector<Run> runs;
    for (std::size_t i = 0; i < posterior_series.size(); ++i) {
        if (posterior_series[i] < rho) continue;
        if (!runs.empty() && runs.back().end + 1 == i)
            runs.back().end = i;
        else
            runs.push_back({i, i});
    }
    std::vector<Run> merged;
    for (const auto& run : runs) {
        if (!merged.empty() &&
            run.begin - merged.back().end - 1 <= static_cast<std::size_t>(merge_gap))
            merged.back().end = run.end;
        else
            merged.push_back(run);
    }

    std::vector<AnomalyRegion> regions;
    for (const auto& run : merged) {
        if (run.end - run.begin + 1 < static_cast<std::size_t>(min_dur)) continue;
        AnomalyRegion region;
        region.t_start = timestamps[run.begin];
        region.t_end = timestamps[run.end];
        region.peak = *std::max_element(posterior_series.begin() + run.begin,
                                        posterior_series.begin() + run.end + 1);
        if (!group_ids.empty() && !evidence.empty()) {
            for (std::size_t g = 0; g < group_ids.size(); ++g) {
                bool high = false;
                for (std::size_t i = run.begin; i <= run.end && !high; ++i)
                    high = g < evidence[i].size() && evidence[i][g] == EvidenceState::high;
                if (high) region.groups.push_back(group_ids[g]);
            }
        }
        regions.push_back(std::move(region));
    }
    return regions;
}

}  // namespace thermon
