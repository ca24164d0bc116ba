#pragma once

#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "amlrisk/types.hpp"

namespace amlrisk {

struct FeasibilityFactor {
    FactorId id;
    std::string name;
    std::string question_id;
    AnswerKind answer_kind = AnswerKind::ordinal_difficulty;
    ModeRole execution_mode_role = ModeRole::none;
};

struct ImpactDimension {
    ImpactId id;
    Objective objective = Objective::integrity;
    std::string name;
    std::string question_id;
};

struct AttackDefinition {
    AttackId id;
    std::string name;
    std::string description;
    Objective objective = Objective::integrity;
    ThreatModel threat_model = ThreatModel::black_box;
    Stage stage = Stage::serving;
    AttackFamily attack_family = AttackFamily::evasion;
    FeedbackRequirement feedback_requirement = FeedbackRequirement::none;
    std::vector<ExecutionMode> execution_modes;
    std::vector<FactorId> required_factors;
    std::vector<ImpactId> compromised_impacts;
    bool retraining_mitigated = false;

    bool supports(ExecutionMode m) const;
    bool needs_factor(const FactorId& f) const;
};

/// Categorical answer labels keyed by factor, as retained in a profile.
using CategoricalAnswers = std::map<FactorId, std::string>;

/// Boolean tree over categorical answers: all / any / not / factor-in / factor-not-in.
/// A factor with no recorded answer never satisfies `in` and always satisfies `not_in`.
class Condition {
public:
    enum class Kind { all, any, negate, in, not_in };

    static Condition parse(const nlohmann::json& j);
    nlohmann::json to_json() const;

    bool evaluate(const CategoricalAnswers& answers) const;
    void collect_factors(std::set<FactorId>& out) const;

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_ = Kind::all;
    std::vector<Condition> children_;
    FactorId factor_;
    std::vector<std::string> labels_;
};

/// Attribute name -> accepted wire values. An attack matches when every listed
/// attribute takes one of its values (execution_modes: any overlap).
struct AttackSelector {
    std::map<std::string, std::vector<std::string>> attributes;

    static AttackSelector parse(const nlohmann::json& j);
    nlohmann::json to_json() const;
    bool matches(const AttackDefinition& a) const;
};

struct ZeroingRule {
    std::string rule_id;
    AttackSelector applies_to;
    Condition condition;
    std::string effect = "zero";
};

struct Catalog {
    std::string version;
    std::vector<FeasibilityFactor> factors;
    std::vector<ImpactDimension> impacts;
    std::vector<AttackDefinition> attacks;
    std::vector<ZeroingRule> zeroing_rules;

    const AttackDefinition* find_attack(const AttackId& id) const;
    const FeasibilityFactor* find_factor(const FactorId& id) const;
    const ImpactDimension* find_impact(const ImpactId& id) const;
    /// Throws Error(unknown_attack).
    const AttackDefinition& attack(const AttackId& id) const;
    /// The unique factor carrying the trigger role for `mode`, or nullptr.
    const FeasibilityFactor* trigger_factor(ExecutionMode mode) const;
};

inline constexpr int kCatalogSchemaVersion = 1;

Catalog parse_catalog(const nlohmann::json& doc);
Catalog load_catalog(std::istream& in);
Catalog load_catalog_file(const std::string& path);
nlohmann::json catalog_to_json(const Catalog& c);

struct Finding {
    std::string code;
    std::string subject;
    std::string message;
};

struct ValidationReport {
    std::vector<Finding> findings;
    bool ok() const noexcept { return findings.empty(); }
};

/// Checks every structural invariant; findings are data, this never throws.
ValidationReport validate_catalog(const Catalog& c);

struct Mapping {
    std::vector<FactorId> factors;
    std::vector<ImpactId> impacts;
};

Mapping lookup_mapping(const Catalog& c, const AttackId& id);

}  // namespace amlrisk
