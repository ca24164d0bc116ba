#include "amlrisk/catalog.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include "json_util.hpp"

namespace amlrisk {

using nlohmann::json;
using detail::check_keys;
using detail::get_array;
using detail::get_bool;
using detail::get_enum;
using detail::get_string;

bool AttackDefinition::supports(ExecutionMode m) const {
    return std::find(execution_modes.begin(), execution_modes.end(), m) != execution_modes.end();
}

bool AttackDefinition::needs_factor(const FactorId& f) const {
    return std::find(required_factors.begin(), required_factors.end(), f) !=
           required_factors.end();
}

// ---------------------------------------------------------------------------
// Condition
// ---------------------------------------------------------------------------

Condition Condition::parse(const json& j) {
    detail::expect_object(j, "condition");
    if (j.size() != 1 && !(j.size() == 2 && j.contains("factor"))) {
        throw Error(ErrorCode::parse_error, "condition: expected exactly one operator", "condition");
    }
    Condition c;
    if (j.contains("all") || j.contains("any")) {
        bool all = j.contains("all");
        c.kind_ = all ? Kind::all : Kind::any;
        const json& arr = get_array(j, all ? "all" : "any", "condition");
        for (const auto& child : arr) c.children_.push_back(parse(child));
        return c;
    }
    if (j.contains("not")) {
        c.kind_ = Kind::negate;
        c.children_.push_back(parse(j.at("not")));
        return c;
    }
    if (j.contains("factor")) {
        bool in = j.contains("in");
        if (!in && !j.contains("not_in")) {
            throw Error(ErrorCode::parse_error, "condition: factor test needs 'in' or 'not_in'",
                        "condition");
        }
        c.kind_ = in ? Kind::in : Kind::not_in;
        c.factor_ = FactorId(get_string(j, "factor", "condition"));
        for (const auto& label : get_array(j, in ? "in" : "not_in", "condition")) {
            if (!label.is_string()) {
                throw Error(ErrorCode::parse_error, "condition: labels must be strings", "condition");
            }
            c.labels_.push_back(label.get<std::string>());
        }
        return c;
    }
    throw Error(ErrorCode::parse_error, "condition: unknown operator", "condition");
}

json Condition::to_json() const {
    switch (kind_) {
    case Kind::all:
    case Kind::any: {
        json arr = json::array();
        for (const auto& ch : children_) arr.push_back(ch.to_json());
        return json{{kind_ == Kind::all ? "all" : "any", arr}};
    }
    case Kind::negate:
        return json{{"not", children_.front().to_json()}};
    case Kind::in:
        return json{{"factor", factor_.str()}, {"in", labels_}};
    case Kind::not_in:
        return json{{"factor", factor_.str()}, {"not_in", labels_}};
    }
    return json();
}

bool Condition::evaluate(const CategoricalAnswers& answers) const {
    switch (kind_) {
    case Kind::all:
        return std::all_of(children_.begin(), children_.end(),
                           [&](const Condition& c) { return c.evaluate(answers); });
    case Kind::any:
        return std::any_of(children_.begin(), children_.end(),
                           [&](const Condition& c) { return c.evaluate(answers); });
    case Kind::negate:
        return !children_.front().evaluate(answers);
    case Kind::in:
    case Kind::not_in: {
        auto it = answers.find(factor_);
        bool hit = it != answers.end() &&
                   std::find(labels_.begin(), labels_.end(), it->second) != labels_.end();
        return kind_ == Kind::in ? hit : !hit;
    }
    }
    return false;
}

void Condition::collect_factors(std::set<FactorId>& out) const {
    if (kind_ == Kind::in || kind_ == Kind::not_in) {
        out.insert(factor_);
        return;
    }
    for (const auto& ch : children_) ch.collect_factors(out);
}

// ---------------------------------------------------------------------------
// AttackSelector
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<std::string_view, 6> kSelectorKeys{
    "threat_model", "feedback_requirement", "attack_family", "stage", "objective", "execution_modes"};

std::vector<std::string> attribute_values(const AttackDefinition& a, const std::string& key) {
    if (key == "threat_model") return {std::string(to_string(a.threat_model))};
    if (key == "feedback_requirement") return {std::string(to_string(a.feedback_requirement))};
    if (key == "attack_family") return {std::string(to_string(a.attack_family))};
    if (key == "stage") return {std::string(to_string(a.stage))};
    if (key == "objective") return {std::string(to_string(a.objective))};
    std::vector<std::string> modes;
    for (auto m : a.execution_modes) modes.emplace_back(to_string(m));
    return modes;
}

void check_selector_value(const std::string& key, const std::string& value) {
    if (key == "threat_model") parse_enum<ThreatModel>(value, key);
    else if (key == "feedback_requirement") parse_enum<FeedbackRequirement>(value, key);
    else if (key == "attack_family") parse_enum<AttackFamily>(value, key);
    else if (key == "stage") parse_enum<Stage>(value, key);
    else if (key == "objective") parse_enum<Objective>(value, key);
    else parse_enum<ExecutionMode>(value, key);
}

}  // namespace

AttackSelector AttackSelector::parse(const json& j) {
    detail::expect_object(j, "applies_to");
    AttackSelector s;
    for (const auto& [key, values] : j.items()) {
        if (std::find(kSelectorKeys.begin(), kSelectorKeys.end(), key) == kSelectorKeys.end()) {
            throw Error(ErrorCode::parse_error, "applies_to: unknown attribute '" + key + "'",
                        "applies_to");
        }
        if (!values.is_array()) {
            throw Error(ErrorCode::parse_error, "applies_to: '" + key + "' must be an array",
                        "applies_to");
        }
        auto& out = s.attributes[key];
        for (const auto& v : values) {
            if (!v.is_string()) {
                throw Error(ErrorCode::parse_error, "applies_to: values must be strings",
                            "applies_to");
            }
            check_selector_value(key, v.get<std::string>());
            out.push_back(v.get<std::string>());
        }
    }
    return s;
}

json AttackSelector::to_json() const {
    json j = json::object();
    for (const auto& [key, values] : attributes) j[key] = values;
    return j;
}

bool AttackSelector::matches(const AttackDefinition& a) const {
    for (const auto& [key, accepted] : attributes) {
        auto actual = attribute_values(a, key);
        bool hit = std::any_of(actual.begin(), actual.end(), [&](const std::string& v) {
            return std::find(accepted.begin(), accepted.end(), v) != accepted.end();
        });
        if (!hit) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

const AttackDefinition* Catalog::find_attack(const AttackId& id) const {
    for (const auto& a : attacks) {
        if (a.id == id) return &a;
    }
    return nullptr;
}

const FeasibilityFactor* Catalog::find_factor(const FactorId& id) const {
    for (const auto& f : factors) {
        if (f.id == id) return &f;
    }
    return nullptr;
}

const ImpactDimension* Catalog::find_impact(const ImpactId& id) const {
    for (const auto& i : impacts) {
        if (i.id == id) return &i;
    }
    return nullptr;
}

const AttackDefinition& Catalog::attack(const AttackId& id) const {
    const AttackDefinition* a = find_attack(id);
    if (!a) throw Error(ErrorCode::unknown_attack, "unknown attack: " + id.str(), id.str());
    return *a;
}

const FeasibilityFactor* Catalog::trigger_factor(ExecutionMode mode) const {
    ModeRole role = mode == ExecutionMode::digital ? ModeRole::digital_trigger
                                                   : ModeRole::physical_trigger;
    const FeasibilityFactor* found = nullptr;
    for (const auto& f : factors) {
        if (f.execution_mode_role != role) continue;
        if (found) return nullptr;
        found = &f;
    }
    return found;
}

namespace {

int schema_major(const std::string& version) {
    auto dot = version.find('.');
    std::string major = version.substr(0, dot);
    if (major.empty() || !std::all_of(major.begin(), major.end(), ::isdigit)) {
        throw Error(ErrorCode::schema_version, "unreadable catalog version '" + version + "'",
                    "version");
    }
    return std::stoi(major);
}

FeasibilityFactor parse_factor(const json& j) {
    check_keys(j, "factor", {"id", "name", "question_id", "answer_kind", "execution_mode_role"});
    FeasibilityFactor f;
    f.id = FactorId(get_string(j, "id", "factor"));
    f.name = get_string(j, "name", "factor");
    f.question_id = get_string(j, "question_id", "factor");
    f.answer_kind = get_enum<AnswerKind>(j, "answer_kind", "factor");
    f.execution_mode_role = get_enum<ModeRole>(j, "execution_mode_role", "factor");
    return f;
}

ImpactDimension parse_impact(const json& j) {
    check_keys(j, "impact", {"id", "objective", "name", "question_id"});
    ImpactDimension i;
    i.id = ImpactId(get_string(j, "id", "impact"));
    i.objective = get_enum<Objective>(j, "objective", "impact");
    i.name = get_string(j, "name", "impact");
    i.question_id = get_string(j, "question_id", "impact");
    return i;
}

std::vector<std::string> string_list(const json& j, std::string_view key, std::string_view where) {
    std::vector<std::string> out;
    for (const auto& v : get_array(j, key, where)) {
        if (!v.is_string()) {
            throw Error(ErrorCode::parse_error,
                        std::string(where) + ": '" + std::string(key) + "' must hold strings",
                        std::string(where));
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

AttackDefinition parse_attack(const json& j) {
    check_keys(j, "attack",
               {"id", "name", "objective", "threat_model", "stage", "attack_family",
                "feedback_requirement", "execution_modes", "required_factors",
                "compromised_impacts", "retraining_mitigated"},
               {"description"});
    AttackDefinition a;
    a.id = AttackId(get_string(j, "id", "attack"));
    std::string where = "attack " + a.id.str();
    a.name = get_string(j, "name", where);
    if (j.contains("description")) a.description = get_string(j, "description", where);
    a.objective = get_enum<Objective>(j, "objective", where);
    a.threat_model = get_enum<ThreatModel>(j, "threat_model", where);
    a.stage = get_enum<Stage>(j, "stage", where);
    a.attack_family = get_enum<AttackFamily>(j, "attack_family", where);
    a.feedback_requirement = get_enum<FeedbackRequirement>(j, "feedback_requirement", where);
    for (const auto& m : string_list(j, "execution_modes", where)) {
        a.execution_modes.push_back(parse_enum<ExecutionMode>(m, "execution_modes"));
    }
    for (const auto& f : string_list(j, "required_factors", where)) a.required_factors.emplace_back(f);
    for (const auto& i : string_list(j, "compromised_impacts", where)) {
        a.compromised_impacts.emplace_back(i);
    }
    a.retraining_mitigated = get_bool(j, "retraining_mitigated", where);
    return a;
}

ZeroingRule parse_rule(const json& j) {
    check_keys(j, "zeroing rule", {"rule_id", "applies_to", "condition", "effect"});
    ZeroingRule r;
    r.rule_id = get_string(j, "rule_id", "zeroing rule");
    r.applies_to = AttackSelector::parse(j.at("applies_to"));
    r.condition = Condition::parse(j.at("condition"));
    r.effect = get_string(j, "effect", "zeroing rule");
    if (r.effect != "zero") {
        throw Error(ErrorCode::parse_error, "zeroing rule " + r.rule_id + ": unsupported effect '" +
                                                r.effect + "'",
                    r.rule_id);
    }
    return r;
}

void check_references(const Catalog& c) {
    for (const auto& a : c.attacks) {
        for (const auto& f : a.required_factors) {
            if (!c.find_factor(f)) {
                throw Error(ErrorCode::dangling_reference,
                            "attack " + a.id.str() + " references undefined factor " + f.str(),
                            a.id.str());
            }
        }
        for (const auto& i : a.compromised_impacts) {
            if (!c.find_impact(i)) {
                throw Error(ErrorCode::dangling_reference,
                            "attack " + a.id.str() + " references undefined impact " + i.str(),
                            a.id.str());
            }
        }
    }
    for (const auto& r : c.zeroing_rules) {
        std::set<FactorId> used;
        r.condition.collect_factors(used);
        for (const auto& f : used) {
            if (!c.find_factor(f)) {
                throw Error(ErrorCode::dangling_reference,
                            "zeroing rule " + r.rule_id + " references undefined factor " + f.str(),
                            r.rule_id);
            }
        }
    }
}

}  // namespace

Catalog parse_catalog(const json& doc) {
    check_keys(doc, "catalog", {"version", "factors", "impacts", "attacks", "zeroing_rules"});
    Catalog c;
    c.version = get_string(doc, "version", "catalog");
    int major = schema_major(c.version);
    if (major != kCatalogSchemaVersion) {
        throw Error(ErrorCode::schema_version,
                    "unsupported catalog schema version " + std::to_string(major), "version");
    }
    for (const auto& f : get_array(doc, "factors", "catalog")) c.factors.push_back(parse_factor(f));
    for (const auto& i : get_array(doc, "impacts", "catalog")) c.impacts.push_back(parse_impact(i));
    for (const auto& a : get_array(doc, "attacks", "catalog")) c.attacks.push_back(parse_attack(a));
    for (const auto& r : get_array(doc, "zeroing_rules", "catalog")) {
        c.zeroing_rules.push_back(parse_rule(r));
    }
    if (c.attacks.empty()) {
        throw Error(ErrorCode::invalid_catalog, "catalog must define at least one attack", "attacks");
    }
    check_references(c);
    return c;
}

Catalog load_catalog(std::istream& in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_catalog(detail::parse_text(buf.str(), "catalog"));
}

Catalog load_catalog_file(const std::string& path) {
    return parse_catalog(detail::parse_text(detail::read_file(path), path));
}

json catalog_to_json(const Catalog& c) {
    json factors = json::array();
    for (const auto& f : c.factors) {
        factors.push_back({{"id", f.id.str()},
                           {"name", f.name},
                           {"question_id", f.question_id},
                           {"answer_kind", to_string(f.answer_kind)},
                           {"execution_mode_role", to_string(f.execution_mode_role)}});
    }
    json impacts = json::array();
    for (const auto& i : c.impacts) {
        impacts.push_back({{"id", i.id.str()},
                           {"objective", to_string(i.objective)},
                           {"name", i.name},
                           {"question_id", i.question_id}});
    }
    json attacks = json::array();
    for (const auto& a : c.attacks) {
        json modes = json::array();
        for (auto m : a.execution_modes) modes.push_back(to_string(m));
        json fs = json::array();
        for (const auto& f : a.required_factors) fs.push_back(f.str());
        json is = json::array();
        for (const auto& i : a.compromised_impacts) is.push_back(i.str());
        json entry = {{"id", a.id.str()},
                      {"name", a.name},
                      {"objective", to_string(a.objective)},
                      {"threat_model", to_string(a.threat_model)},
                      {"stage", to_string(a.stage)},
                      {"attack_family", to_string(a.attack_family)},
                      {"feedback_requirement", to_string(a.feedback_requirement)},
                      {"execution_modes", modes},
                      {"required_factors", fs},
                      {"compromised_impacts", is},
                      {"retraining_mitigated", a.retraining_mitigated}};
        if (!a.description.empty()) entry["description"] = a.description;
        attacks.push_back(std::move(entry));
    }
    json rules = json::array();
    for (const auto& r : c.zeroing_rules) {
        rules.push_back({{"rule_id", r.rule_id},
                         {"applies_to", r.applies_to.to_json()},
                         {"condition", r.condition.to_json()},
                         {"effect", r.effect}});
    }
    return {{"version", c.version},
            {"factors", factors},
            {"impacts", impacts},
            {"attacks", attacks},
            {"zeroing_rules", rules}};
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

template <class T, class GetId>
void check_unique(const std::vector<T>& items, GetId get_id, std::string_view kind,
                  std::vector<Finding>& out) {
    std::set<std::string> seen;
    for (const auto& item : items) {
        const std::string& id = get_id(item);
        if (!seen.insert(id).second) {
            out.push_back({"duplicate-id", id, "duplicate " + std::string(kind) + " id " + id});
        }
    }
}

}  // namespace

ValidationReport validate_catalog(const Catalog& c) {
    ValidationReport report;
    auto& out = report.findings;

    if (c.attacks.empty()) {
        out.push_back({"empty-catalog", "attacks", "catalog must define at least one attack"});
    }
    check_unique(c.factors, [](const FeasibilityFactor& f) -> const std::string& { return f.id.str(); },
                 "factor", out);
    check_unique(c.impacts, [](const ImpactDimension& i) -> const std::string& { return i.id.str(); },
                 "impact", out);
    check_unique(c.attacks, [](const AttackDefinition& a) -> const std::string& { return a.id.str(); },
                 "attack", out);

    // Trigger roles: exactly one factor per mode.
    bool role_ok[2] = {false, false};
    for (auto mode : kModes) {
        ModeRole role = mode == ExecutionMode::digital ? ModeRole::digital_trigger
                                                       : ModeRole::physical_trigger;
        auto n = std::count_if(c.factors.begin(), c.factors.end(),
                               [&](const FeasibilityFactor& f) { return f.execution_mode_role == role; });
        std::string role_name(to_string(role));
        if (n == 0) {
            out.push_back({"missing-trigger-role", role_name, "no factor has role " + role_name});
        } else if (n > 1) {
            out.push_back({"duplicate-trigger-role", role_name,
                           "duplicate trigger role " + role_name + " on " + std::to_string(n) +
                               " factors"});
        } else {
            role_ok[static_cast<int>(mode)] = true;
        }
    }

    std::set<Objective> objectives;
    for (const auto& i : c.impacts) objectives.insert(i.objective);
    if (objectives.size() != 3) {
        out.push_back({"objective-coverage", "impacts",
                       "impacts must cover integrity, privacy and availability"});
    }

    for (const auto& a : c.attacks) {
        const std::string& id = a.id.str();
        if (a.execution_modes.empty()) {
            out.push_back({"empty-modes", id, "attack " + id + " has no execution mode"});
        }
        if (a.required_factors.empty()) {
            out.push_back({"empty-factors", id, "attack " + id + " requires no factor"});
        }
        if (a.compromised_impacts.empty()) {
            out.push_back({"empty-impacts", id, "attack " + id + " compromises no impact"});
        }
        for (const auto& f : a.required_factors) {
            if (!c.find_factor(f)) {
                out.push_back({"dangling-reference", id,
                               "attack " + id + " references undefined factor " + f.str()});
            }
        }
        for (const auto& i : a.compromised_impacts) {
            if (!c.find_impact(i)) {
                out.push_back({"dangling-reference", id,
                               "attack " + id + " references undefined impact " + i.str()});
            }
        }
        for (auto mode : kModes) {
            if (!role_ok[static_cast<int>(mode)]) continue;
            const FeasibilityFactor* trig = c.trigger_factor(mode);
            bool has_mode = a.supports(mode);
            bool has_trigger = a.needs_factor(trig->id);
            std::string m(to_string(mode));
            if (has_mode && !has_trigger) {
                out.push_back({"missing-trigger-factor", id,
                               "missing trigger factor: attack " + id + " supports " + m +
                                   " but does not require " + trig->id.str()});
            } else if (!has_mode && has_trigger) {
                out.push_back({"unexpected-trigger-factor", id,
                               "attack " + id + " requires " + trig->id.str() +
                                   " but does not support " + m});
            }
        }
    }

    for (const auto& r : c.zeroing_rules) {
        std::set<FactorId> used;
        r.condition.collect_factors(used);
        for (const auto& fid : used) {
            const FeasibilityFactor* f = c.find_factor(fid);
            if (!f) {
                out.push_back({"dangling-reference", r.rule_id,
                               "zeroing rule " + r.rule_id + " references undefined factor " +
                                   fid.str()});
            } else if (!is_categorical(f->answer_kind)) {
                out.push_back({"non-categorical-condition", r.rule_id,
                               "zeroing rule " + r.rule_id + " tests non-categorical factor " +
                                   fid.str()});
            }
        }
    }
    return report;
}

Mapping lookup_mapping(const Catalog& c, const AttackId& id) {
    const AttackDefinition& a = c.attack(id);
    return {a.required_factors, a.compromised_impacts};
}

}  // namespace amlrisk
