#include "amlrisk/types.hpp"

#include <array>
#include <string>

namespace amlrisk {
namespace {

template <class E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

constexpr NameTable<ErrorCode, 16> kErrorNames{{
    {ErrorCode::parse_error, "parse_error"},
    {ErrorCode::schema_version, "schema_version"},
    {ErrorCode::dangling_reference, "dangling_reference"},
    {ErrorCode::invalid_catalog, "invalid_catalog"},
    {ErrorCode::unknown_attack, "unknown_attack"},
    {ErrorCode::missing_answer, "missing_answer"},
    {ErrorCode::invalid_answer, "invalid_answer"},
    {ErrorCode::invalid_argument, "invalid_argument"},
    {ErrorCode::missing_score, "missing_score"},
    {ErrorCode::not_mitigated, "not_mitigated"},
    {ErrorCode::not_found, "not_found"},
    {ErrorCode::io_error, "io_error"},
    {ErrorCode::transport_timeout, "transport_timeout"},
    {ErrorCode::transport_auth, "transport_auth"},
    {ErrorCode::transport_malformed, "transport_malformed"},
    {ErrorCode::transport_network, "transport_network"},
}};

constexpr NameTable<Objective, 3> kObjective{{
    {Objective::integrity, "integrity"},
    {Objective::privacy, "privacy"},
    {Objective::availability, "availability"},
}};

constexpr NameTable<ThreatModel, 3> kThreatModel{{
    {ThreatModel::white_box, "white-box"},
    {ThreatModel::black_box, "black-box"},
    {ThreatModel::gray_box, "gray-box"},
}};

constexpr NameTable<Stage, 2> kStage{{
    {Stage::training, "training"},
    {Stage::serving, "serving"},
}};

constexpr NameTable<AttackFamily, 11> kFamily{{
    {AttackFamily::evasion, "evasion"},
    {AttackFamily::poisoning_clean_label, "poisoning-clean-label"},
    {AttackFamily::poisoning_backdoor, "poisoning-backdoor"},
    {AttackFamily::poisoning_targeted, "poisoning-targeted"},
    {AttackFamily::poisoning_untargeted, "poisoning-untargeted"},
    {AttackFamily::model_poisoning, "model-poisoning"},
    {AttackFamily::membership_inference, "membership-inference"},
    {AttackFamily::attribute_inference, "attribute-inference"},
    {AttackFamily::data_reconstruction, "data-reconstruction"},
    {AttackFamily::model_extraction, "model-extraction"},
    {AttackFamily::resource_latency, "resource-latency"},
}};

constexpr NameTable<FeedbackRequirement, 4> kFeedback{{
    {FeedbackRequirement::full_access, "full-access"},
    {FeedbackRequirement::score, "score"},
    {FeedbackRequirement::decision, "decision"},
    {FeedbackRequirement::none, "none"},
}};

constexpr NameTable<ExecutionMode, 2> kMode{{
    {ExecutionMode::digital, "digital"},
    {ExecutionMode::physical, "physical"},
}};

constexpr NameTable<AnswerKind, 8> kAnswerKind{{
    {AnswerKind::ordinal_difficulty, "ordinal-difficulty"},
    {AnswerKind::ordinal_severity_inverted, "ordinal-severity-inverted"},
    {AnswerKind::ordinal_level, "ordinal-level"},
    {AnswerKind::categorical_feedback, "categorical-feedback"},
    {AnswerKind::categorical_knowledge, "categorical-knowledge"},
    {AnswerKind::categorical_binary, "categorical-binary"},
    {AnswerKind::ordinal_severity, "ordinal-severity"},
    {AnswerKind::characteristic_enum, "characteristic-enum"},
}};

constexpr NameTable<ModeRole, 3> kModeRole{{
    {ModeRole::none, "none"},
    {ModeRole::digital_trigger, "digital-trigger"},
    {ModeRole::physical_trigger, "physical-trigger"},
}};

constexpr NameTable<Architecture, 4> kArchitecture{{
    {Architecture::deep_learning, "deep-learning"},
    {Architecture::ensemble, "ensemble"},
    {Architecture::decision_trees, "decision-trees"},
    {Architecture::standard_ml, "standard-ml"},
}};

constexpr NameTable<Task, 7> kTask{{
    {Task::classification, "classification"},
    {Task::regression, "regression"},
    {Task::semi_supervised, "semi-supervised"},
    {Task::unsupervised, "unsupervised"},
    {Task::llm, "llm"},
    {Task::object_detection, "object-detection"},
    {Task::reinforcement_learning, "reinforcement-learning"},
}};

constexpr NameTable<DataType, 4> kDataType{{
    {DataType::images, "images"},
    {DataType::text, "text"},
    {DataType::tabular, "tabular"},
    {DataType::voice, "voice"},
}};

constexpr NameTable<Domain, 7> kDomain{{
    {Domain::cyber, "cyber"},
    {Domain::finance, "finance"},
    {Domain::computer_vision, "computer-vision"},
    {Domain::speech, "speech"},
    {Domain::nlp, "nlp"},
    {Domain::network, "network"},
    {Domain::recommender, "recommender"},
}};

template <class E, std::size_t N>
std::string_view name_of(const NameTable<E, N>& table, E value) {
    for (const auto& [v, name] : table) {
        if (v == value) return name;
    }
    return "?";
}

template <class E, std::size_t N>
E value_of(const NameTable<E, N>& table, std::string_view text, std::string_view field) {
    for (const auto& [v, name] : table) {
        if (name == text) return v;
    }
    throw Error(ErrorCode::parse_error,
                "invalid value '" + std::string(text) + "' for " + std::string(field),
                std::string(field));
}

}  // namespace

std::string_view to_string(ErrorCode code) { return name_of(kErrorNames, code); }

bool is_categorical(AnswerKind kind) noexcept {
    return kind == AnswerKind::categorical_feedback || kind == AnswerKind::categorical_knowledge ||
           kind == AnswerKind::categorical_binary;
}

std::string_view to_string(Objective v) { return name_of(kObjective, v); }
std::string_view to_string(ThreatModel v) { return name_of(kThreatModel, v); }
std::string_view to_string(Stage v) { return name_of(kStage, v); }
std::string_view to_string(AttackFamily v) { return name_of(kFamily, v); }
std::string_view to_string(FeedbackRequirement v) { return name_of(kFeedback, v); }
std::string_view to_string(ExecutionMode v) { return name_of(kMode, v); }
std::string_view to_string(AnswerKind v) { return name_of(kAnswerKind, v); }
std::string_view to_string(ModeRole v) { return name_of(kModeRole, v); }
std::string_view to_string(Architecture v) { return name_of(kArchitecture, v); }
std::string_view to_string(Task v) { return name_of(kTask, v); }
std::string_view to_string(DataType v) { return name_of(kDataType, v); }
std::string_view to_string(Domain v) { return name_of(kDomain, v); }

template <>
Objective parse_enum<Objective>(std::string_view t, std::string_view f) { return value_of(kObjective, t, f); }
template <>
ThreatModel parse_enum<ThreatModel>(std::string_view t, std::string_view f) { return value_of(kThreatModel, t, f); }
template <>
Stage parse_enum<Stage>(std::string_view t, std::string_view f) { return value_of(kStage, t, f); }
template <>
AttackFamily parse_enum<AttackFamily>(std::string_view t, std::string_view f) { return value_of(kFamily, t, f); }
template <>
FeedbackRequirement parse_enum<FeedbackRequirement>(std::string_view t, std::string_view f) {
    return value_of(kFeedback, t, f);
}
template <>
ExecutionMode parse_enum<ExecutionMode>(std::string_view t, std::string_view f) { return value_of(kMode, t, f); }
template <>
AnswerKind parse_enum<AnswerKind>(std::string_view t, std::string_view f) { return value_of(kAnswerKind, t, f); }
template <>
ModeRole parse_enum<ModeRole>(std::string_view t, std::string_view f) { return value_of(kModeRole, t, f); }
template <>
Architecture parse_enum<Architecture>(std::string_view t, std::string_view f) {
    return value_of(kArchitecture, t, f);
}
template <>
Task parse_enum<Task>(std::string_view t, std::string_view f) { return value_of(kTask, t, f); }
template <>
DataType parse_enum<DataType>(std::string_view t, std::string_view f) { return value_of(kDataType, t, f); }
template <>
Domain parse_enum<Domain>(std::string_view t, std::string_view f) { return value_of(kDomain, t, f); }

}  // namespace amlrisk
