#include "thermon/fuzzy.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "json.hpp"

#include "thermon/errors.hpp"

namespace thermon {

using nlohmann::json;

double FuzzySet::membership(double x) const {
    if (points.empty()) return 0.0;
    if (x <= points.front().first) return points.front().second;
    if (x >= points.back().first) return points.back().second;
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (x <= points[i].first) {
            const auto& [x0, m0] = points[i - 1];
            const auto& [x1, m1] = points[i];
            return m0 + (m1 - m0) * (x - x0) / (x1 - x0);
        }
    }
    return points.back().second;
}

const FuzzySet& LinguisticVariable::set(const std::string& label) const {
    for (const auto& s : sets)
        if (s.label == label) return s;
    throw ConfigError("variable " + name + " has no set labeled " + label);
}

void RuleBase::validate() const {
    auto check_var = [](const LinguisticVariable& var) {
        if (var.sets.size() != 5)
            throw ConfigError("variable " + var.name + " must have exactly five sets");
        for (const auto& s : var.sets) {
            if (s.points.size() < 2)
                throw ConfigError("set " + s.label + " needs at least two breakpoints");
            for (std::size_t i = 1; i < s.points.size(); ++i)
                if (s.points[i].first <= s.points[i - 1].first)
                    throw ConfigError("set " + s.label + " breakpoints must increase");
        }
        // Coverage: at every x some set has positive membership.
        for (int i = 0; i <= 100; ++i) {
            const double x = i / 100.0;
            double best = 0.0;
            for (const auto& s : var.sets) best = std::max(best, s.membership(x));
            if (best <= 0.0)
                throw ConfigError("variable " + var.name + " leaves x=" + std::to_string(x) +
                                  " uncovered");
        }
    };
    for (const auto& [_, var] : inputs) check_var(var);
    check_var(output);
    for (const auto& rule : rules) {
        if (!(rule.weight > 0.0 && rule.weight <= 1.0))
            throw ConfigError("rule weight must be in (0,1]");
        for (const auto& [var, label] : rule.antecedent) {
            auto it = inputs.find(var);
            if (it == inputs.end()) throw UnknownVariable(var);
            it->second.set(label);
        }
        output.set(rule.consequent);
    }
}

namespace {

json set_to_json(const FuzzySet& s) {
    json pts = json::array();
    for (const auto& [x, mu] : s.points) pts.push_back({x, mu});
    return {{"label", s.label}, {"points", pts}};
}

FuzzySet set_from_json(const json& j) {
    FuzzySet s;
    s.label = j.at("label").get<std::string>();
    for (const auto& p : j.at("points"))
        s.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    return s;
}

}  // namespace

void RuleBase::save(std::ostream& out) const {
    json vars;
    for (const auto& [name, var] : inputs) {
        json sets = json::array();
        for (const auto& s : var.sets) sets.push_back(set_to_json(s));
        vars[name] = sets;
    }
    json out_sets = json::array();
    for (const auto& s : output.sets) out_sets.push_back(set_to_json(s));
    vars[output.name] = out_sets;

    json rules_json = json::array();
    for (const auto& rule : rules) {
        json terms = json::array();
        for (const auto& [var, label] : rule.antecedent) terms.push_back({var, label});
        rules_json.push_back({{"if", terms}, {"then", rule.consequent}, {"weight", rule.weight}});
    }
    out << json{{"variables", vars}, {"rules", rules_json}}.dump(2) << '\n';
}

RuleBase RuleBase::load(std::istream& in) {
    json j = json::parse(in);
    RuleBase base;
    base.output.name = "Health";
    for (const auto& [name, sets] : j.at("variables").items()) {
        LinguisticVariable var;
        var.name = name;
        for (const auto& s : sets) var.sets.push_back(set_from_json(s));
        if (name == "Health")
            base.output = std::move(var);
        else
            base.inputs[name] = std::move(var);
    }
    for (const auto& r : j.at("rules")) {
        FuzzyRule rule;
        for (const auto& term : r.at("if"))
            rule.antecedent.emplace_back(term.at(0).get<std::string>(),
                                         term.at(1).get<std::string>());
        rule.consequent = r.at("then").get<std::string>();
        if (r.contains("weight")) rule.weight = r["weight"].get<double>();
        base.rules.push_back(std::move(rule));
    }
    base.validate();
    return base;
}

std::vector<FuzzySet> default_input_sets() {
    return {
        {"very low", {{0.0, 1.0}, {0.25, 0.0}}},
        {"low", {{0.0, 0.0}, {0.25, 1.0}, {0.5, 0.0}}},
        {"medium", {{0.25, 0.0}, {0.5, 1.0}, {0.75, 0.0}}},
        {"high", {{0.5, 0.0}, {0.75, 1.0}, {1.0, 0.0}}},
        {"very high", {{0.75, 0.0}, {1.0, 1.0}}},
    };
}

std::vector<FuzzySet> default_output_sets() {
    return {
        {"very bad", {{0.0, 1.0}, {0.25, 0.0}}},
        {"bad", {{0.0, 0.0}, {0.25, 1.0}, {0.5, 0.0}}},
        {"average", {{0.25, 0.0}, {0.5, 1.0}, {0.75, 0.0}}},
        {"good", {{0.5, 0.0}, {0.75, 1.0}, {1.0, 0.0}}},
        {"very good", {{0.75, 0.0}, {1.0, 1.0}}},
    };
}

RuleBase default_rulebase(const std::vector<std::string>& group_ids) {
    RuleBase base;
    base.output.name = "Health";
    base.output.sets = default_output_sets();
    for (const auto& id : group_ids) {
        LinguisticVariable var;
        var.name = id;
        var.sets = default_input_sets();
        base.inputs[id] = std::move(var);
    }

    // Consensus: all groups at one level maps to the mirrored health level.
    const std::vector<std::pair<std::string, std::string>> levels = {
        {"very low", "very good"}, {"low", "good"},      {"medium", "average"},
        {"high", "bad"},           {"very high", "very bad"},
    };
    for (const auto& [in_label, out_label] : levels) {
        FuzzyRule rule;
        for (const auto& id : group_ids) rule.antecedent.emplace_back(id, in_label);
        rule.consequent = out_label;
        base.rules.push_back(std::move(rule));
    }
    // Per-group dominance, in mirrored pairs so the base stays symmetric
    // under S -> 1-S.
    for (const auto& id : group_ids) {
        base.rules.push_back({{{id, "high"}}, "bad", 1.0});
        base.rules.push_back({{{id, "very high"}}, "very bad", 1.0});
        base.rules.push_back({{{id, "low"}}, "good", 1.0});
        base.rules.push_back({{{id, "very low"}}, "very good", 1.0});
    }
    base.validate();
    return base;
}

double evaluate_rule(const FuzzyRule& rule, const RuleBase& base,
                     const std::map<std::string, double>& inputs) {
    double strength = 1.0;
    for (const auto& [var_name, label] : rule.antecedent) {
        auto var_it = base.inputs.find(var_name);
        if (var_it == base.inputs.end()) throw UnknownVariable(var_name);
        auto in_it = inputs.find(var_name);
        if (in_it == inputs.end()) throw UnknownVariable(var_name);
        strength = std::min(strength, var_it->second.set(label).membership(in_it->second));
    }
    return rule.weight * strength;
}

std::vector<double> infer(const RuleBase& base, const std::vector<double>& strengths) {
    if (strengths.size() != base.rules.size())
        throw InvariantViolation("infer: one strength per rule required");
    std::vector<double> aggregated(kDefuzzGridPoints, 0.0);
    for (std::size_t r = 0; r < base.rules.size(); ++r) {
        if (strengths[r] <= 0.0) continue;
        const FuzzySet& consequent = base.output.set(base.rules[r].consequent);
        for (int i = 0; i < kDefuzzGridPoints; ++i) {
            const double x = static_cast<double>(i) / (kDefuzzGridPoints - 1);
            aggregated[i] =
                std::max(aggregated[i], std::min(strengths[r], consequent.membership(x)));
        }
    }
    return aggregated;
}

double defuzzify_centroid(const std::vector<double>& aggregated) {
    const std::size_t n = aggregated.size();
    if (n < 2) throw InvariantViolation("defuzzify: grid too small");
    const double h = 1.0 / static_cast<double>(n - 1);
    double area = 0.0, moment = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double x0 = static_cast<double>(i) * h;
        const double x1 = x0 + h;
        area += 0.5 * (aggregated[i] + aggregated[i + 1]) * h;
        moment += 0.5 * (x0 * aggregated[i] + x1 * aggregated[i + 1]) * h;
    }
    if (area <= 0.0) throw NoRuleFired();
    return moment / area;
}

HealthAssessment assess_health(const std::map<std::string, double>& scores,
                               const RuleBase& base) {
    std::vector<double> strengths;
    strengths.reserve(base.rules.size());
    for (const auto& rule : base.rules)
        strengths.push_back(evaluate_rule(rule, base, scores));

    HealthAssessment assessment;
    assessment.health = defuzzify_centroid(infer(base, strengths));
    for (std::size_t r = 0; r < strengths.size(); ++r)
        if (strengths[r] > 0.0) assessment.activations.emplace_back(r, strengths[r]);

    // Dominant label: output set with the largest clipped area; the clip
    // level of a set is the strongest rule that concludes it.
    double best_area = -1.0;
    for (const auto& out_set : base.output.sets) {
        double clip = 0.0;
        for (std::size_t r = 0; r < base.rules.size(); ++r)
            if (base.rules[r].consequent == out_set.label)
                clip = std::max(clip, strengths[r]);
        if (clip <= 0.0) continue;
        double area = 0.0;
        const double h = 1.0 / (kDefuzzGridPoints - 1);
        for (int i = 0; i + 1 < kDefuzzGridPoints; ++i) {
            const double x0 = i * h;
            const double m0 = std::min(clip, out_set.membership(x0));
            const double m1 = std::min(clip, out_set.membership(x0 + h));
            area += 0.5 * (m0 + m1) * h;
        }
        if (area > best_area) {
            best_area = area;
            assessment.dominant_label = out_set.label;
        }
    }
    return assessment;
}

}  // namespace thermon
