#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "amlrisk/catalog.hpp"
#include "amlrisk/gateway.hpp"
#include "amlrisk/types.hpp"

namespace amlrisk {

struct ScalePoint {
    std::string label;
    double score = 0.0;
};

struct CharacteristicValue {
    std::string label;
    std::string value;
};

struct QuestionnaireItem {
    std::string question_id;
    std::string section;  // attack-impact | system-safety | characteristics
    AnswerKind answer_kind = AnswerKind::ordinal_difficulty;
    std::string scale;    // named scale, or the characteristic slot for characteristic-enum
    std::string prompt;
    std::string maps_to;  // impact id, factor id, or characteristic slot
    std::vector<std::string> allowed_answers;
};

struct Questionnaire {
    std::string version;
    std::map<std::string, std::vector<ScalePoint>> scales;
    std::map<std::string, std::vector<CharacteristicValue>> characteristic_values;
    std::vector<QuestionnaireItem> items;

    const QuestionnaireItem* find(const std::string& question_id) const;
};

Questionnaire parse_questionnaire(const nlohmann::json& doc);
Questionnaire load_questionnaire_file(const std::string& path);
nlohmann::json questionnaire_to_json(const Questionnaire& q);

/// Cross-checks factor and impact question links against the questionnaire.
ValidationReport validate_catalog(const Catalog& c, const Questionnaire& q);

/// Score in [0,1] for a raw label. Throws Error(invalid_answer) naming the question.
double scale_answer(const Questionnaire& q, const QuestionnaireItem& item, const std::string& raw);

struct SystemCharacteristics {
    Architecture architecture = Architecture::deep_learning;
    Task task = Task::classification;
    DataType data_type = DataType::images;
    Domain domain = Domain::computer_vision;
};

struct SystemProfile {
    std::string profile_id;
    std::string system_description;
    std::string threat_actor;
    SystemCharacteristics characteristics;
    std::map<FactorId, double> factor_scores;
    std::map<ImpactId, double> impact_scores;
    CategoricalAnswers categorical_answers;
};

using Responses = std::map<std::string, std::string>;

/// A responses document: {profile_id?, system_description, threat_actor, responses{Q..}}.
struct ResponseDocument {
    std::optional<std::string> profile_id;
    std::string system_description;
    std::string threat_actor;
    Responses responses;
};

ResponseDocument parse_response_document(const nlohmann::json& doc);
ResponseDocument load_response_file(const std::string& path);

/// Throws Error(missing_answer) "missing answer: Qn" for the lowest missing id,
/// Error(invalid_answer) naming the question for a disallowed label.
SystemProfile build_profile(const Questionnaire& q, const Responses& responses,
                            const std::string& description, const std::string& threat_actor,
                            std::optional<std::string> profile_id = std::nullopt);

SystemProfile build_profile(const Questionnaire& q, const ResponseDocument& doc);

nlohmann::json profile_to_json(const SystemProfile& p);
SystemProfile profile_from_json(const nlohmann::json& j);

struct CustomQuestionnaire {
    std::string base_version;
    std::string system_description;
    std::vector<QuestionnaireItem> items;
    std::string generator;
    std::vector<std::string> warnings;
};

/// Rewrites prompt text per item. An item whose generated id, section or answer
/// set differs from the base keeps its base wording and records a warning.
/// Transport errors propagate so the caller can fall back to the base questionnaire.
CustomQuestionnaire customize_questionnaire(const Questionnaire& base, const std::string& description,
                                            TextGenerator& gateway);

nlohmann::json custom_questionnaire_to_json(const CustomQuestionnaire& cq);

}  // namespace amlrisk
