#ifndef THERMON_FUZZY_HPP
#define THERMON_FUZZY_HPP

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace thermon {

// Piecewise-linear membership function on [0,1]. Outside the breakpoint span
// the boundary membership applies, so shoulder sets stay at 1 past their
// plateau and interior triangles fall to 0.
struct FuzzySet {
    std::string label;
    std::vector<std::pair<double, double>> points;  // (x, mu), x strictly increasing

    double membership(double x) const;
};

struct LinguisticVariable {
    std::string name;
    std::vector<FuzzySet> sets;  // exactly five

    const FuzzySet& set(const std::string& label) const;  // throws ConfigError
};

struct FuzzyRule {
    std::vector<std::pair<std::string, std::string>> antecedent;  // (variable, set label)
    std::string consequent;                                       // output set label
    double weight = 1.0;
};

struct RuleBase {
    std::map<std::string, LinguisticVariable> inputs;
    LinguisticVariable output;  // Health
    std::vector<FuzzyRule> rules;

    void validate() const;
    void save(std::ostream& out) const;
    static RuleBase load(std::istream& in);
};

struct HealthAssessment {
    double health = 0.0;                                   // crisp alpha' in [0,1]
    std::string dominant_label;                            // output set with max clipped area
    std::vector<std::pair<std::size_t, double>> activations;  // (rule index, strength), nonzero only
};

// The five evenly spaced input sets: very low, low, medium, high, very high.
std::vector<FuzzySet> default_input_sets();
// Output mirror: very bad .. very good.
std::vector<FuzzySet> default_output_sets();

// Auto-generated rulebase for the given groups: five consensus rules (all
// inputs at one level -> mirrored health level) plus per-group dominance
// rules in mirrored pairs (high -> bad, very high -> very bad, low -> good,
// very low -> very good). The pairing keeps the base symmetric under
// S -> 1-S.
RuleBase default_rulebase(const std::vector<std::string>& group_ids);

// weight * min over antecedent terms of membership(input value).
double evaluate_rule(const FuzzyRule& rule, const RuleBase& base,
                     const std::map<std::string, double>& inputs);

inline constexpr int kDefuzzGridPoints = 1001;

// Mamdani aggregation: each rule clips its consequent at its strength (min
// implication), rules combine by pointwise max. Returns the aggregated
// membership sampled on the defuzzification grid.
std::vector<double> infer(const RuleBase& base, const std::vector<double>& strengths);

// Centroid by trapezoidal quadrature on the grid. Throws NoRuleFired when
// the aggregated set is identically zero.
double defuzzify_centroid(const std::vector<double>& aggregated);

// evaluate_rule -> infer -> defuzzify_centroid, plus dominant label and the
// nonzero rule activations.
HealthAssessment assess_health(const std::map<std::string, double>& scores,
                               const RuleBase& base);

}  // namespace thermon

#endif
