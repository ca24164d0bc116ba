#pragma once

#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "amlrisk/catalog.hpp"
#include "amlrisk/profiling.hpp"
#include "amlrisk/types.hpp"

namespace amlrisk {

struct Publication {
    std::string title;
    int year = 0;
    std::string venue;
};

struct RecordContext {
    Domain domain = Domain::computer_vision;
    DataType data_type = DataType::images;
    Architecture model_architecture = Architecture::deep_learning;
    Task task = Task::classification;
    std::string dataset_name;
};

struct AttackRecord {
    std::string record_id;
    Publication publication;
    AttackFamily attack_family = AttackFamily::evasion;
    ThreatModel threat_model = ThreatModel::black_box;
    ExecutionMode execution_mode = ExecutionMode::digital;
    Objective objective = Objective::integrity;
    RecordContext context;
    double success_rate = 0.0;
};

AttackRecord record_from_json(const nlohmann::json& j);
nlohmann::json record_to_json(const AttackRecord& r);

struct LineError {
    std::size_t line = 0;
    std::string message;
};

struct ParsedRecords {
    std::vector<AttackRecord> records;
    std::vector<LineError> errors;
};

/// One record per non-blank line; bad lines are reported, not fatal.
ParsedRecords parse_records_jsonl(const std::string& text);

/// Immutable snapshot. Copies share storage; ingestion builds a new snapshot.
class RecordStore {
public:
    RecordStore();
    explicit RecordStore(std::vector<AttackRecord> records);

    const std::vector<AttackRecord>& records() const noexcept { return data_->records; }
    std::size_t size() const noexcept { return data_->records.size(); }
    const std::string& snapshot_id() const noexcept { return data_->snapshot_id; }

    /// Indices of records with this (family, threat model, mode).
    const std::vector<std::size_t>& group(AttackFamily family, ThreatModel tm, ExecutionMode mode) const;

private:
    using Key = std::tuple<AttackFamily, ThreatModel, ExecutionMode>;
    struct Data {
        std::vector<AttackRecord> records;
        std::string snapshot_id;
        std::map<Key, std::vector<std::size_t>> index;
    };
    std::shared_ptr<const Data> data_;
};

/// Strict loader for corpus files: any invalid line is an error naming the line.
RecordStore load_record_store_file(const std::string& path);
RecordStore load_record_store(const std::string& jsonl_text);
std::string store_to_jsonl(const RecordStore& store);

struct Rejection {
    std::string record_id;
    std::string reason;
};

struct IngestReport {
    RecordStore store;
    std::size_t accepted = 0;
    std::vector<Rejection> rejected;
};

/// Reasons: "rate out of range", "year before 2010", "duplicate", "duplicate record id".
IngestReport ingest_records(const RecordStore& store, const std::vector<AttackRecord>& candidates);

nlohmann::json ingest_report_to_json(const IngestReport& r);

/// Context axes a level keeps on top of family + threat model + mode.
enum class ContextAxis { domain, data_type, model_architecture, task };

std::string_view to_string(ContextAxis a);

struct DowngradePolicy {
    std::vector<std::vector<ContextAxis>> levels;
    std::vector<double> weights;

    static DowngradePolicy standard();
    /// Throws Error(invalid_argument) unless weights are positive and strictly
    /// decreasing and every level keeps a subset of the previous level's axes.
    void validate() const;
    nlohmann::json to_json() const;
};

DowngradePolicy downgrade_from_json(const nlohmann::json& levels, const nlohmann::json& weights);

struct MatchBatch {
    int level = 0;
    ExecutionMode mode = ExecutionMode::digital;
    std::vector<std::string> record_ids;
    double batch_mean = 0.0;

    bool operator==(const MatchBatch&) const = default;
};

bool record_matches(const AttackRecord& r, const AttackDefinition& a, const SystemCharacteristics& c,
                    ExecutionMode mode, const std::vector<ContextAxis>& axes);

/// One batch per non-empty level, levels ascending; a record is counted only at
/// its strictest level; a non-empty level 0 suppresses every other level.
std::vector<MatchBatch> match_records(const RecordStore& store, const AttackDefinition& attack,
                                      const SystemProfile& profile, ExecutionMode mode,
                                      const DowngradePolicy& policy);

/// sum(B_i * w_i) / sum(w_i) over the given batches.
double weighted_success_rate(const std::vector<MatchBatch>& batches, const DowngradePolicy& policy);

struct SuccessEstimate {
    double rate = 0.0;
    bool fallback = false;
};

/// Per-mode corpus mean, or 0.5 when the store has no record of that mode.
double fallback_success_rate(const RecordStore& store, ExecutionMode mode);

SuccessEstimate estimate_success_rate(const RecordStore& store, const std::vector<MatchBatch>& batches,
                                      const DowngradePolicy& policy, ExecutionMode mode);

struct StatsSummary {
    std::size_t record_count = 0;
    std::map<std::string, double> domain_share;
    std::map<std::string, std::map<std::string, double>> objective_share_by_domain;
    std::map<std::string, double> mean_success_by_mode;
    std::map<std::string, std::map<std::string, double>> mean_success_by_domain_mode;
    std::map<std::string, std::map<std::string, double>> mode_share_by_domain;
    std::map<std::string, double> threat_model_share;
    std::map<std::string, std::map<std::string, double>> threat_model_share_by_domain;

    nlohmann::json to_json() const;
};

StatsSummary dataset_stats(const RecordStore& store);

}  // namespace amlrisk
