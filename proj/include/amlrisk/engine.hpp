#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "amlrisk/catalog.hpp"
#include "amlrisk/config.hpp"
#include "amlrisk/knowledge.hpp"
#include "amlrisk/profiling.hpp"

namespace amlrisk {

struct ModeBreakdown {
    bool supported = false;
    double f_em = 0.0;
    double norm_f = 0.0;
    double sr = 0.0;
    bool sr_fallback = false;
    double l = 0.0;
    std::vector<MatchBatch> batches;

    bool operator==(const ModeBreakdown&) const = default;
};

struct AppliedCountermeasure {
    std::string name;
    double sr_retrain = 1.0;
    double score_before = 0.0;

    bool operator==(const AppliedCountermeasure&) const = default;
};

struct ScoreBreakdown {
    AttackId attack_id;
    std::string attack_name;
    Objective objective = Objective::integrity;
    bool retraining_mitigated = false;
    double f_generic = 0.0;
    std::array<ModeBreakdown, 2> modes;  // indexed by ExecutionMode
    double l_overall = 0.0;
    double impact = 0.0;
    double raw_score = 0.0;
    double score = 0.0;
    std::optional<std::string> zeroed_by;
    std::vector<std::string> warnings;
    std::optional<AppliedCountermeasure> countermeasure;

    ModeBreakdown& mode(ExecutionMode m) { return modes[static_cast<std::size_t>(m)]; }
    const ModeBreakdown& mode(ExecutionMode m) const { return modes[static_cast<std::size_t>(m)]; }

    bool operator==(const ScoreBreakdown&) const = default;
};

struct RiskAssessment {
    std::string assessment_id;
    std::string created_at;
    std::string profile_id;
    std::string catalog_version;
    std::string snapshot_id;
    std::string config_digest;
    std::vector<ScoreBreakdown> breakdowns;
    std::vector<AttackId> ranking;

    const ScoreBreakdown* find(const AttackId& id) const;

    bool operator==(const RiskAssessment&) const = default;
};

struct CountermeasureProfile {
    std::string name = "adversarial-retraining";
    std::map<AttackId, double> rates;
    std::string note;
};

/// Product of Score(f) over M_F(a) without the two trigger factors.
/// Throws Error(missing_score) when the profile lacks a required factor.
double feasibility_generic(const Catalog& c, const AttackDefinition& a, const SystemProfile& p);

/// F_generic times the trigger score for `mode`.
double feasibility_mode(const Catalog& c, const SystemProfile& p, ExecutionMode mode, double f_generic);

/// Log min-max normalization over one mode's cohort. A zero feasibility maps to
/// 0; when the cohort's log range is below 1e-12 the rest get `degenerate`.
std::map<AttackId, double> normalize_feasibility(const std::map<AttackId, double>& values, double epsilon,
                                                 double degenerate);

double impact_score(const AttackDefinition& a, const SystemProfile& p, ImpactMode mode);

/// Fills each mode's `l` (0 when unsupported) and returns 1 - prod(1 - l).
double combine_likelihood(std::array<ModeBreakdown, 2>& modes);

/// min(l_overall * impact * 10, 10).
double final_score(double l_overall, double impact);

/// First catalog rule that applies to the attack and whose condition holds.
std::optional<std::string> apply_zeroing(const AttackDefinition& a, const SystemProfile& p,
                                         const std::vector<ZeroingRule>& rules);

struct AssessOptions {
    std::string created_at;
};

/// Scores every attack; either all succeed or the call throws.
RiskAssessment assess(const Catalog& catalog, const SystemProfile& profile, const RecordStore& store,
                      const EngineConfig& config, const AssessOptions& options = {});

/// S' = S * SR_retrain for mitigated attacks named in `cm`; everything else is
/// untouched. Throws Error(not_mitigated) or Error(unknown_attack) for a bad rate key.
RiskAssessment reassess_with_countermeasure(const RiskAssessment& assessment, const CountermeasureProfile& cm);

/// The same rate for every mitigated attack of the assessment.
CountermeasureProfile uniform_retraining(const RiskAssessment& assessment, double rate);

}  // namespace amlrisk
