#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "amlrisk/catalog.hpp"
#include "amlrisk/engine.hpp"
#include "amlrisk/gateway.hpp"

namespace amlrisk {

/// Descending score, ties by ascending attack id.
std::vector<AttackId> rank(const std::vector<ScoreBreakdown>& breakdowns);

/// Half-up to three decimals: 5.9845 -> "5.985".
std::string format_score(double score);

nlohmann::json assessment_to_json(const RiskAssessment& a);
RiskAssessment assessment_from_json(const nlohmann::json& j);
RiskAssessment load_assessment_file(const std::string& path);

/// Digest of everything except assessment_id and created_at.
std::string assessment_digest(const RiskAssessment& a);

enum class ReportFormat { machine, human, html };

ReportFormat parse_report_format(std::string_view text);

/// `machine` always carries every breakdown; top_k limits the human and html views.
std::string render_report(const RiskAssessment& a, ReportFormat format, std::size_t top_k);

/// Side-by-side before/after view of a countermeasure reassessment.
std::string render_comparison(const RiskAssessment& before, const RiskAssessment& after, ReportFormat format,
                              std::size_t top_k);

struct ScenarioCard {
    AttackId attack_id;
    int rank = 0;
    std::string score;
    Objective objective = Objective::integrity;
    std::string narrative;
    std::string generator;
    bool fallback = false;
};

/// Cards for the top-k attacks in rank order. A transport failure for one card
/// leaves the catalog description as its narrative with generator "stub".
std::vector<ScenarioCard> generate_scenarios(const RiskAssessment& a, const Catalog& catalog, std::size_t top_k,
                                             const std::string& system_description, const std::string& threat_actor,
                                             TextGenerator& gateway);

nlohmann::json scenarios_to_json(const std::vector<ScenarioCard>& cards);

}  // namespace amlrisk
