#ifndef THERMON_FUSION_HPP
#define THERMON_FUSION_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace thermon {

enum class EvidenceState { low = 0, med = 1, high = 2 };

std::string to_string(EvidenceState s);

// low/med/high by score thresholds: S < l_low -> low, S < l_high -> med,
// else high. Requires 0 < l_low < l_high < 1.
EvidenceState discretize(double score, double l_low, double l_high);

struct GroupCpt {
    std::string group_id;
    std::array<double, 3> cpt_true{};   // P(state | SystemAnomaly = true),  indexed by EvidenceState
    std::array<double, 3> cpt_false{};  // P(state | SystemAnomaly = false)
};

// Star-shaped network: one binary root (SystemAnomaly) with one three-state
// child per group. Admits exact closed-form inference.
struct BNModel {
    double prior = 0.05;  // P(SystemAnomaly = true)
    std::vector<GroupCpt> groups;

    // Checks column normalization, smoothed probabilities in (0,1), and the
    // anomaly-positive orientation P(high|true) > P(high|false).
    void validate() const;

    void save(std::ostream& out) const;
    static BNModel load(std::istream& in);
};

struct FusionDefaults {
    double prior = 0.05;
    std::array<double, 3> cpt_true{0.1, 0.2, 0.7};
    std::array<double, 3> cpt_false{0.7, 0.2, 0.1};
};

// Supervised maximum-likelihood CPTs with add-one smoothing when labels are
// given; config defaults verbatim otherwise. history[t][g] is the discretized
// evidence of group g at instant t (missing cells allowed).
BNModel fit_cpts(const std::vector<std::string>& group_ids,
                 const std::vector<std::vector<std::optional<EvidenceState>>>& history,
                 const std::optional<std::vector<bool>>& labels,
                 const FusionDefaults& defaults = {});

// Exact posterior P(SystemAnomaly = true | evidence) on the star, computed in
// log space; missing evidence entries are omitted from the product.
double posterior(const BNModel& model,
                 const std::vector<std::optional<EvidenceState>>& evidence);

struct AnomalyRegion {
    std::int64_t t_start = 0;  // inclusive grid instants
    std::int64_t t_end = 0;
    double peak = 0.0;
    std::vector<std::string> groups;  // children observed high anywhere in the region
};

// Maximal runs of posterior >= rho, merged over gaps <= merge_gap instants,
// dropped when shorter than min_dur after merging. When evidence is supplied
// the contributing groups of each region are filled in.
std::vector<AnomalyRegion> detect_regions(
    const std::vector<std::int64_t>& timestamps, const std::vector<double>& posterior_series,
    double rho, int min_dur, int merge_gap,
    const std::vector<std::string>& group_ids = {},
    const std::vector<std::vector<std::optional<EvidenceState>>>& evidence = {});

}  // namespace thermon

#endif
