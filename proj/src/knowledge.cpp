#include "amlrisk/knowledge.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "amlrisk/digest.hpp"
#include "json_util.hpp"

namespace amlrisk {

using nlohmann::json;
using detail::check_keys;
using detail::get_enum;
using detail::get_number;
using detail::get_string;

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

AttackRecord record_from_json(const json& j) {
    check_keys(j, "record",
               {"record_id", "publication", "attack_family", "threat_model", "execution_mode", "objective",
                "context", "success_rate"});
    AttackRecord r;
    r.record_id = get_string(j, "record_id", "record");
    const std::string where = "record " + r.record_id;

    const json& pub = j.at("publication");
    check_keys(pub, where + " publication", {"title", "year", "venue"});
    r.publication.title = get_string(pub, "title", where);
    if (!pub.at("year").is_number_integer()) {
        throw Error(ErrorCode::parse_error, where + ": year must be an integer", r.record_id);
    }
    r.publication.year = pub.at("year").get<int>();
    r.publication.venue = get_string(pub, "venue", where);

    r.attack_family = get_enum<AttackFamily>(j, "attack_family", where);
    r.threat_model = get_enum<ThreatModel>(j, "threat_model", where);
    r.execution_mode = get_enum<ExecutionMode>(j, "execution_mode", where);
    r.objective = get_enum<Objective>(j, "objective", where);

    const json& ctx = j.at("context");
    check_keys(ctx, where + " context", {"domain", "data_type", "model_architecture", "task"}, {"dataset_name"});
    r.context.domain = get_enum<Domain>(ctx, "domain", where);
    r.context.data_type = get_enum<DataType>(ctx, "data_type", where);
    r.context.model_architecture = get_enum<Architecture>(ctx, "model_architecture", where);
    r.context.task = get_enum<Task>(ctx, "task", where);
    if (ctx.contains("dataset_name")) r.context.dataset_name = get_string(ctx, "dataset_name", where);

    r.success_rate = get_number(j, "success_rate", where);
    return r;
}

json record_to_json(const AttackRecord& r) {
    return {{"record_id", r.record_id},
            {"publication",
             {{"title", r.publication.title}, {"year", r.publication.year}, {"venue", r.publication.venue}}},
            {"attack_family", to_string(r.attack_family)},
            {"threat_model", to_string(r.threat_model)},
            {"execution_mode", to_string(r.execution_mode)},
            {"objective", to_string(r.objective)},
            {"context",
             {{"domain", to_string(r.context.domain)},
              {"data_type", to_string(r.context.data_type)},
              {"model_architecture", to_string(r.context.model_architecture)},
              {"task", to_string(r.context.task)},
              {"dataset_name", r.context.dataset_name}}},
            {"success_rate", r.success_rate}};
}

ParsedRecords parse_records_jsonl(const std::string& text) {
    ParsedRecords out;
    std::istringstream in(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.records.push_back(record_from_json(detail::parse_text(line, "line " + std::to_string(n))));
        } catch (const Error& e) {
            out.errors.push_back({n, e.what()});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Store
// ---------------------------------------------------------------------------

RecordStore::RecordStore() : RecordStore(std::vector<AttackRecord>{}) {}

RecordStore::RecordStore(std::vector<AttackRecord> records) {
    auto d = std::make_shared<Data>();
    d->records = std::move(records);
    std::string canonical;
    for (std::size_t i = 0; i < d->records.size(); ++i) {
        const auto& r = d->records[i];
        d->index[{r.attack_family, r.threat_model, r.execution_mode}].push_back(i);
        canonical += record_to_json(r).dump();
        canonical += '\n';
    }
    d->snapshot_id = content_id("snap-", canonical);
    data_ = std::move(d);
}

const std::vector<std::size_t>& RecordStore::group(AttackFamily family, ThreatModel tm,
                                                   ExecutionMode mode) const {
    static const std::vector<std::size_t> kEmpty;
    auto it = data_->index.find({family, tm, mode});
    return it == data_->index.end() ? kEmpty : it->second;
}

namespace {

using DedupKey = std::tuple<std::string, AttackFamily, ThreatModel, ExecutionMode, Domain>;

DedupKey dedup_key(const AttackRecord& r) {
    return {r.publication.title, r.attack_family, r.threat_model, r.execution_mode, r.context.domain};
}

}  // namespace

IngestReport ingest_records(const RecordStore& store, const std::vector<AttackRecord>& candidates) {
    std::vector<AttackRecord> merged = store.records();
    std::set<DedupKey> keys;
    std::set<std::string> ids;
    for (const auto& r : merged) {
        keys.insert(dedup_key(r));
        ids.insert(r.record_id);
    }
    IngestReport report;
    for (const auto& r : candidates) {
        std::string reason;
        if (!(r.success_rate >= 0.0 && r.success_rate <= 1.0)) {
            reason = "rate out of range";
        } else if (r.publication.year < 2010) {
            reason = "year before 2010";
        } else if (keys.count(dedup_key(r))) {
            reason = "duplicate";
        } else if (r.record_id.empty() || ids.count(r.record_id)) {
            reason = "duplicate record id";
        }
        if (!reason.empty()) {
            report.rejected.push_back({r.record_id, reason});
            continue;
        }
        keys.insert(dedup_key(r));
        ids.insert(r.record_id);
        merged.push_back(r);
        ++report.accepted;
    }
    report.store = RecordStore(std::move(merged));
    return report;
}

json ingest_report_to_json(const IngestReport& r) {
    json rejected = json::array();
    for (const auto& x : r.rejected) rejected.push_back({{"record_id", x.record_id}, {"reason", x.reason}});
    return {{"accepted", r.accepted},
            {"rejected", rejected},
            {"snapshot_id", r.store.snapshot_id()},
            {"size", r.store.size()}};
}

RecordStore load_record_store(const std::string& jsonl_text) {
    ParsedRecords parsed = parse_records_jsonl(jsonl_text);
    if (!parsed.errors.empty()) {
        const auto& e = parsed.errors.front();
        throw Error(ErrorCode::parse_error, "corpus line " + std::to_string(e.line) + ": " + e.message,
                    "line " + std::to_string(e.line));
    }
    IngestReport report = ingest_records(RecordStore(), parsed.records);
    if (!report.rejected.empty()) {
        const auto& x = report.rejected.front();
        throw Error(ErrorCode::parse_error, "corpus record " + x.record_id + " rejected: " + x.reason,
                    x.record_id);
    }
    return report.store;
}

RecordStore load_record_store_file(const std::string& path) {
    return load_record_store(detail::read_file(path));
}

std::string store_to_jsonl(const RecordStore& store) {
    std::string out;
    for (const auto& r : store.records()) {
        out += record_to_json(r).dump();
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Downgrading
// ---------------------------------------------------------------------------

std::string_view to_string(ContextAxis a) {
    switch (a) {
    case ContextAxis::domain: return "domain";
    case ContextAxis::data_type: return "data_type";
    case ContextAxis::model_architecture: return "model_architecture";
    case ContextAxis::task: return "task";
    }
    return "?";
}

DowngradePolicy DowngradePolicy::standard() {
    using A = ContextAxis;
    DowngradePolicy p;
    p.levels = {
        {A::domain, A::data_type, A::model_architecture, A::task},
        {A::domain, A::data_type, A::task},
        {A::domain, A::data_type},
        {A::data_type},
        {},
    };
    p.weights = {1.0, 0.5, 0.25, 0.125, 0.0625};
    return p;
}

void DowngradePolicy::validate() const {
    if (levels.empty()) throw Error(ErrorCode::invalid_argument, "downgrade policy needs a level", "downgrade.levels");
    if (weights.size() != levels.size()) {
        throw Error(ErrorCode::invalid_argument, "downgrade policy needs one weight per level",
                    "downgrade.weights");
    }
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] > 0.0)) {
            throw Error(ErrorCode::invalid_argument, "downgrade weights must be positive", "downgrade.weights");
        }
        if (i > 0 && !(weights[i] < weights[i - 1])) {
            throw Error(ErrorCode::invalid_argument, "downgrade weights must be strictly decreasing",
                        "downgrade.weights");
        }
    }
    for (std::size_t i = 1; i < levels.size(); ++i) {
        for (auto axis : levels[i]) {
            if (std::find(levels[i - 1].begin(), levels[i - 1].end(), axis) == levels[i - 1].end()) {
                throw Error(ErrorCode::invalid_argument,
                            "downgrade level " + std::to_string(i) + " adds axis " +
                                std::string(to_string(axis)) + " absent from level " + std::to_string(i - 1),
                            "downgrade.levels");
            }
        }
    }
}

json DowngradePolicy::to_json() const {
    json lv = json::array();
    for (const auto& level : levels) {
        json axes = json::array();
        for (auto a : level) axes.push_back(to_string(a));
        lv.push_back(axes);
    }
    return {{"levels", lv}, {"weights", weights}};
}

DowngradePolicy downgrade_from_json(const json& levels, const json& weights) {
    DowngradePolicy p;
    if (!levels.is_array() || !weights.is_array()) {
        throw Error(ErrorCode::invalid_argument, "downgrade levels and weights must be arrays", "downgrade");
    }
    for (const auto& level : levels) {
        if (!level.is_array()) {
            throw Error(ErrorCode::invalid_argument, "each downgrade level must be an array of axes",
                        "downgrade.levels");
        }
        std::vector<ContextAxis> axes;
        for (const auto& a : level) {
            std::string name = a.is_string() ? a.get<std::string>() : std::string();
            if (name == "domain") axes.push_back(ContextAxis::domain);
            else if (name == "data_type") axes.push_back(ContextAxis::data_type);
            else if (name == "model_architecture") axes.push_back(ContextAxis::model_architecture);
            else if (name == "task") axes.push_back(ContextAxis::task);
            else throw Error(ErrorCode::invalid_argument, "unknown context axis '" + name + "'", "downgrade.levels");
        }
        p.levels.push_back(std::move(axes));
    }
    for (const auto& w : weights) {
        if (!w.is_number()) {
            throw Error(ErrorCode::invalid_argument, "downgrade weights must be numbers", "downgrade.weights");
        }
        p.weights.push_back(w.get<double>());
    }
    p.validate();
    return p;
}

bool record_matches(const AttackRecord& r, const AttackDefinition& a, const SystemCharacteristics& c,
                    ExecutionMode mode, const std::vector<ContextAxis>& axes) {
    if (r.attack_family != a.attack_family || r.threat_model != a.threat_model || r.execution_mode != mode) {
        return false;
    }
    for (auto axis : axes) {
        switch (axis) {
        case ContextAxis::domain:
            if (r.context.domain != c.domain) return false;
            break;
        case ContextAxis::data_type:
            if (r.context.data_type != c.data_type) return false;
            break;
        case ContextAxis::model_architecture:
            if (r.context.model_architecture != c.architecture) return false;
            break;
        case ContextAxis::task:
            if (r.context.task != c.task) return false;
            break;
        }
    }
    return true;
}

std::vector<MatchBatch> match_records(const RecordStore& store, const AttackDefinition& attack,
                                      const SystemProfile& profile, ExecutionMode mode,
                                      const DowngradePolicy& policy) {
    std::vector<MatchBatch> batches;
    const auto& candidates = store.group(attack.attack_family, attack.threat_model, mode);
    std::vector<bool> used(candidates.size(), false);
    for (std::size_t level = 0; level < policy.levels.size(); ++level) {
        MatchBatch batch;
        batch.level = static_cast<int>(level);
        batch.mode = mode;
        double sum = 0.0;
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            if (used[k]) continue;
            const AttackRecord& r = store.records()[candidates[k]];
            if (!record_matches(r, attack, profile.characteristics, mode, policy.levels[level])) continue;
            used[k] = true;
            batch.record_ids.push_back(r.record_id);
            sum += r.success_rate;
        }
        if (batch.record_ids.empty()) continue;
        batch.batch_mean = sum / static_cast<double>(batch.record_ids.size());
        batches.push_back(std::move(batch));
        if (level == 0) break;
    }
    return batches;
}

double weighted_success_rate(const std::vector<MatchBatch>& batches, const DowngradePolicy& policy) {
    double num = 0.0;
    double den = 0.0;
    for (const auto& b : batches) {
        double w = policy.weights.at(static_cast<std::size_t>(b.level));
        num += b.batch_mean * w;
        den += w;
    }
    return den > 0.0 ? num / den : 0.0;
}

double fallback_success_rate(const RecordStore& store, ExecutionMode mode) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : store.records()) {
        if (r.execution_mode != mode) continue;
        sum += r.success_rate;
        ++n;
    }
    return n == 0 ? 0.5 : sum / static_cast<double>(n);
}

SuccessEstimate estimate_success_rate(const RecordStore& store, const std::vector<MatchBatch>& batches,
                                      const DowngradePolicy& policy, ExecutionMode mode) {
    if (batches.empty()) return {fallback_success_rate(store, mode), true};
    return {weighted_success_rate(batches, policy), false};
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

namespace {

template <class E, std::size_t N>
std::map<std::string, double> zero_shares(const E (&values)[N]) {
    std::map<std::string, double> out;
    for (auto v : values) out[std::string(to_string(v))] = 0.0;
    return out;
}

constexpr Domain kDomains[] = {Domain::cyber,  Domain::finance, Domain::computer_vision, Domain::speech,
                               Domain::nlp,    Domain::network, Domain::recommender};
constexpr Objective kObjectives[] = {Objective::integrity, Objective::privacy, Objective::availability};
constexpr ThreatModel kThreatModels[] = {ThreatModel::white_box, ThreatModel::black_box, ThreatModel::gray_box};
constexpr ExecutionMode kModeList[] = {ExecutionMode::digital, ExecutionMode::physical};

void normalize(std::map<std::string, double>& counts, double total) {
    for (auto& [k, v] : counts) v /= total;
}

}  // namespace

StatsSummary dataset_stats(const RecordStore& store) {
    StatsSummary s;
    const auto& records = store.records();
    s.record_count = records.size();
    if (records.empty()) return s;

    s.domain_share = zero_shares(kDomains);
    s.threat_model_share = zero_shares(kThreatModels);
    std::map<std::string, double> per_domain_count;
    std::map<std::string, double> mode_count;
    std::map<std::string, double> mode_sum;
    std::map<std::string, std::map<std::string, double>> dm_count;
    std::map<std::string, std::map<std::string, double>> dm_sum;

    for (const auto& r : records) {
        std::string d(to_string(r.context.domain));
        std::string m(to_string(r.execution_mode));
        s.domain_share[d] += 1.0;
        s.threat_model_share[std::string(to_string(r.threat_model))] += 1.0;
        if (!per_domain_count.count(d)) {
            s.objective_share_by_domain[d] = zero_shares(kObjectives);
            s.mode_share_by_domain[d] = zero_shares(kModeList);
            s.threat_model_share_by_domain[d] = zero_shares(kThreatModels);
        }
        per_domain_count[d] += 1.0;
        s.objective_share_by_domain[d][std::string(to_string(r.objective))] += 1.0;
        s.mode_share_by_domain[d][m] += 1.0;
        s.threat_model_share_by_domain[d][std::string(to_string(r.threat_model))] += 1.0;
        mode_count[m] += 1.0;
        mode_sum[m] += r.success_rate;
        dm_count[d][m] += 1.0;
        dm_sum[d][m] += r.success_rate;
    }

    double total = static_cast<double>(records.size());
    normalize(s.domain_share, total);
    normalize(s.threat_model_share, total);
    for (const auto& [d, n] : per_domain_count) {
        normalize(s.objective_share_by_domain[d], n);
        normalize(s.mode_share_by_domain[d], n);
        normalize(s.threat_model_share_by_domain[d], n);
    }
    for (const auto& [m, n] : mode_count) s.mean_success_by_mode[m] = mode_sum[m] / n;
    for (const auto& [d, modes] : dm_count) {
        for (const auto& [m, n] : modes) s.mean_success_by_domain_mode[d][m] = dm_sum[d][m] / n;
    }
    return s;
}

json StatsSummary::to_json() const {
    return {{"record_count", record_count},
            {"domain_share", domain_share},
            {"objective_share_by_domain", objective_share_by_domain},
            {"mean_success_by_mode", mean_success_by_mode},
            {"mean_success_by_domain_mode", mean_success_by_domain_mode},
            {"mode_share_by_domain", mode_share_by_domain},
            {"threat_model_share", threat_model_share},
            {"threat_model_share_by_domain", threat_model_share_by_domain}};
}

}  // namespace amlrisk
