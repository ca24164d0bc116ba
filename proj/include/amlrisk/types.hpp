#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace amlrisk {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class ErrorCode {
    parse_error,
    schema_version,
    dangling_reference,
    invalid_catalog,
    unknown_attack,
    missing_answer,
    invalid_answer,
    invalid_argument,
    missing_score,
    not_mitigated,
    not_found,
    io_error,
    transport_timeout,
    transport_auth,
    transport_malformed,
    transport_network,
};

std::string_view to_string(ErrorCode code);

/// Every failure surfaced by the library. `subject()` names the offending
/// entity (question id, attack id, env var ...) when there is one.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string subject = {})
        : std::runtime_error(message), code_(code), subject_(std::move(subject)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& subject() const noexcept { return subject_; }

private:
    ErrorCode code_;
    std::string subject_;
};

// ---------------------------------------------------------------------------
// Strongly typed identifiers
// ---------------------------------------------------------------------------

template <class Tag>
class Id {
public:
    Id() = default;
    explicit Id(std::string value) : value_(std::move(value)) {}

    const std::string& str() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    auto operator<=>(const Id&) const = default;
    bool operator==(const Id&) const = default;

private:
    std::string value_;
};

using FactorId = Id<struct FactorTag>;
using ImpactId = Id<struct ImpactTag>;
using AttackId = Id<struct AttackTag>;

// ---------------------------------------------------------------------------
// Domain enumerations
// ---------------------------------------------------------------------------

enum class Objective { integrity, privacy, availability };
enum class ThreatModel { white_box, black_box, gray_box };
enum class Stage { training, serving };
enum class AttackFamily {
    evasion,
    poisoning_clean_label,
    poisoning_backdoor,
    poisoning_targeted,
    poisoning_untargeted,
    model_poisoning,
    membership_inference,
    attribute_inference,
    data_reconstruction,
    model_extraction,
    resource_latency,
};
enum class FeedbackRequirement { full_access, score, decision, none };
enum class ExecutionMode { digital, physical };
enum class AnswerKind {
    ordinal_difficulty,
    ordinal_severity_inverted,
    ordinal_level,
    categorical_feedback,
    categorical_knowledge,
    categorical_binary,
    ordinal_severity,
    characteristic_enum,
};
enum class ModeRole { none, digital_trigger, physical_trigger };

enum class Architecture { deep_learning, ensemble, decision_trees, standard_ml };
enum class Task {
    classification,
    regression,
    semi_supervised,
    unsupervised,
    llm,
    object_detection,
    reinforcement_learning,
};
enum class DataType { images, text, tabular, voice };
enum class Domain { cyber, finance, computer_vision, speech, nlp, network, recommender };

inline constexpr ExecutionMode kModes[] = {ExecutionMode::digital, ExecutionMode::physical};

bool is_categorical(AnswerKind kind) noexcept;

// Wire names are the kebab-case spellings used in every data file.
std::string_view to_string(Objective v);
std::string_view to_string(ThreatModel v);
std::string_view to_string(Stage v);
std::string_view to_string(AttackFamily v);
std::string_view to_string(FeedbackRequirement v);
std::string_view to_string(ExecutionMode v);
std::string_view to_string(AnswerKind v);
std::string_view to_string(ModeRole v);
std::string_view to_string(Architecture v);
std::string_view to_string(Task v);
std::string_view to_string(DataType v);
std::string_view to_string(Domain v);

/// Parses a wire name into `E`; throws Error(parse_error) naming `field`.
template <class E>
E parse_enum(std::string_view text, std::string_view field);

template <> Objective parse_enum<Objective>(std::string_view, std::string_view);
template <> ThreatModel parse_enum<ThreatModel>(std::string_view, std::string_view);
template <> Stage parse_enum<Stage>(std::string_view, std::string_view);
template <> AttackFamily parse_enum<AttackFamily>(std::string_view, std::string_view);
template <> FeedbackRequirement parse_enum<FeedbackRequirement>(std::string_view, std::string_view);
template <> ExecutionMode parse_enum<ExecutionMode>(std::string_view, std::string_view);
template <> AnswerKind parse_enum<AnswerKind>(std::string_view, std::string_view);
template <> ModeRole parse_enum<ModeRole>(std::string_view, std::string_view);
template <> Architecture parse_enum<Architecture>(std::string_view, std::string_view);
template <> Task parse_enum<Task>(std::string_view, std::string_view);
template <> DataType parse_enum<DataType>(std::string_view, std::string_view);
template <> Domain parse_enum<Domain>(std::string_view, std::string_view);

}  // namespace amlrisk

template <class Tag>
struct std::hash<amlrisk::Id<Tag>> {
    std::size_t operator()(const amlrisk::Id<Tag>& id) const noexcept {
        return std::hash<std::string>{}(id.str());
    }
};
