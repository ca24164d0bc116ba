#include "amlrisk/profiling.hpp"

#include <algorithm>
#include <set>

#include "amlrisk/digest.hpp"
#include "json_util.hpp"

namespace amlrisk {

using nlohmann::json;
using detail::check_keys;
using detail::get_array;
using detail::get_number;
using detail::get_string;

namespace {

const std::set<std::string> kSections{"attack-impact", "system-safety", "characteristics"};
const std::set<std::string> kSlots{"architecture", "task", "data_type", "domain"};

// "Q12" -> 12; 0 when the id is not of that shape.
int question_number(const std::string& id) {
    if (id.size() < 2 || id[0] != 'Q') return 0;
    int n = 0;
    for (std::size_t i = 1; i < id.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(id[i]))) return 0;
        n = n * 10 + (id[i] - '0');
    }
    return n;
}

QuestionnaireItem parse_item(const json& j) {
    check_keys(j, "questionnaire item",
               {"question_id", "section", "answer_kind", "scale", "prompt", "maps_to", "allowed_answers"});
    QuestionnaireItem it;
    it.question_id = get_string(j, "question_id", "questionnaire item");
    const std::string& where = it.question_id;
    it.section = get_string(j, "section", where);
    if (!kSections.count(it.section)) {
        throw Error(ErrorCode::parse_error, where + ": unknown section '" + it.section + "'", where);
    }
    it.answer_kind = detail::get_enum<AnswerKind>(j, "answer_kind", where);
    it.scale = get_string(j, "scale", where);
    it.prompt = get_string(j, "prompt", where);
    it.maps_to = get_string(j, "maps_to", where);
    for (const auto& a : get_array(j, "allowed_answers", where)) {
        if (!a.is_string()) throw Error(ErrorCode::parse_error, where + ": answers must be strings", where);
        it.allowed_answers.push_back(a.get<std::string>());
    }
    if (it.allowed_answers.empty()) {
        throw Error(ErrorCode::parse_error, where + ": no allowed answers", where);
    }
    return it;
}

template <class T>
std::vector<std::string> labels_of(const std::vector<T>& points) {
    std::vector<std::string> out;
    for (const auto& p : points) out.push_back(p.label);
    return out;
}

}  // namespace

const QuestionnaireItem* Questionnaire::find(const std::string& question_id) const {
    for (const auto& it : items) {
        if (it.question_id == question_id) return &it;
    }
    return nullptr;
}

Questionnaire parse_questionnaire(const json& doc) {
    check_keys(doc, "questionnaire", {"version", "scales", "characteristic_values", "items"});
    Questionnaire q;
    q.version = get_string(doc, "version", "questionnaire");

    detail::expect_object(doc.at("scales"), "scales");
    for (const auto& [name, points] : doc.at("scales").items()) {
        if (!points.is_array() || points.empty()) {
            throw Error(ErrorCode::parse_error, "scale " + name + ": expected a non-empty array", name);
        }
        auto& scale = q.scales[name];
        for (const auto& p : points) {
            check_keys(p, "scale " + name, {"label", "score"});
            double s = get_number(p, "score", name);
            if (!(s >= 0.0 && s <= 1.0)) {
                throw Error(ErrorCode::parse_error, "scale " + name + ": score outside [0,1]", name);
            }
            scale.push_back({get_string(p, "label", name), s});
        }
    }

    detail::expect_object(doc.at("characteristic_values"), "characteristic_values");
    for (const auto& [slot, values] : doc.at("characteristic_values").items()) {
        if (!kSlots.count(slot)) {
            throw Error(ErrorCode::parse_error, "unknown characteristic slot '" + slot + "'", slot);
        }
        if (!values.is_array()) throw Error(ErrorCode::parse_error, slot + ": expected an array", slot);
        for (const auto& v : values) {
            check_keys(v, slot, {"label", "value"});
            q.characteristic_values[slot].push_back({get_string(v, "label", slot), get_string(v, "value", slot)});
        }
    }

    for (const auto& j : get_array(doc, "items", "questionnaire")) q.items.push_back(parse_item(j));

    std::set<std::string> seen;
    for (const auto& it : q.items) {
        if (!seen.insert(it.question_id).second) {
            throw Error(ErrorCode::parse_error, "duplicate question " + it.question_id, it.question_id);
        }
        std::vector<std::string> expected;
        if (it.answer_kind == AnswerKind::characteristic_enum) {
            auto cv = q.characteristic_values.find(it.maps_to);
            if (cv == q.characteristic_values.end()) {
                throw Error(ErrorCode::parse_error,
                            it.question_id + ": no values for slot '" + it.maps_to + "'", it.question_id);
            }
            expected = labels_of(cv->second);
        } else {
            auto sc = q.scales.find(it.scale);
            if (sc == q.scales.end()) {
                throw Error(ErrorCode::parse_error, it.question_id + ": unknown scale '" + it.scale + "'",
                            it.question_id);
            }
            expected = labels_of(sc->second);
        }
        if (expected != it.allowed_answers) {
            throw Error(ErrorCode::parse_error,
                        it.question_id + ": allowed answers differ from the scale labels", it.question_id);
        }
    }
    return q;
}

Questionnaire load_questionnaire_file(const std::string& path) {
    return parse_questionnaire(detail::parse_text(detail::read_file(path), path));
}

json questionnaire_to_json(const Questionnaire& q) {
    json scales = json::object();
    for (const auto& [name, points] : q.scales) {
        json arr = json::array();
        for (const auto& p : points) arr.push_back({{"label", p.label}, {"score", p.score}});
        scales[name] = arr;
    }
    json chars = json::object();
    for (const auto& [slot, values] : q.characteristic_values) {
        json arr = json::array();
        for (const auto& v : values) arr.push_back({{"label", v.label}, {"value", v.value}});
        chars[slot] = arr;
    }
    json items = json::array();
    for (const auto& it : q.items) {
        items.push_back({{"question_id", it.question_id},
                         {"section", it.section},
                         {"answer_kind", to_string(it.answer_kind)},
                         {"scale", it.scale},
                         {"prompt", it.prompt},
                         {"maps_to", it.maps_to},
                         {"allowed_answers", it.allowed_answers}});
    }
    return {{"version", q.version}, {"scales", scales}, {"characteristic_values", chars}, {"items", items}};
}

ValidationReport validate_catalog(const Catalog& c, const Questionnaire& q) {
    ValidationReport report = validate_catalog(c);
    auto& out = report.findings;
    for (const auto& f : c.factors) {
        const QuestionnaireItem* it = q.find(f.question_id);
        if (!it) {
            out.push_back({"unknown-question", f.id.str(),
                           "factor " + f.id.str() + " links to missing question " + f.question_id});
        } else if (it->answer_kind != f.answer_kind || it->maps_to != f.id.str()) {
            out.push_back({"question-mismatch", f.id.str(),
                           "factor " + f.id.str() + " and question " + f.question_id + " disagree"});
        }
    }
    for (const auto& i : c.impacts) {
        const QuestionnaireItem* it = q.find(i.question_id);
        if (!it) {
            out.push_back({"unknown-question", i.id.str(),
                           "impact " + i.id.str() + " links to missing question " + i.question_id});
        } else if (it->section != "attack-impact" || it->maps_to != i.id.str()) {
            out.push_back({"question-mismatch", i.id.str(),
                           "impact " + i.id.str() + " and question " + i.question_id + " disagree"});
        }
    }
    return report;
}

double scale_answer(const Questionnaire& q, const QuestionnaireItem& item, const std::string& raw) {
    if (item.answer_kind == AnswerKind::characteristic_enum) {
        throw Error(ErrorCode::invalid_argument, item.question_id + " is not a scored question",
                    item.question_id);
    }
    auto sc = q.scales.find(item.scale);
    if (sc != q.scales.end()) {
        for (const auto& p : sc->second) {
            if (p.label == raw) return p.score;
        }
    }
    throw Error(ErrorCode::invalid_answer,
                "invalid answer for " + item.question_id + ": '" + raw + "'", item.question_id);
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

ResponseDocument parse_response_document(const json& doc) {
    check_keys(doc, "responses document", {"responses"},
               {"profile_id", "system_description", "threat_actor"});
    ResponseDocument d;
    if (doc.contains("profile_id")) d.profile_id = get_string(doc, "profile_id", "responses document");
    if (doc.contains("system_description")) {
        d.system_description = get_string(doc, "system_description", "responses document");
    }
    if (doc.contains("threat_actor")) d.threat_actor = get_string(doc, "threat_actor", "responses document");
    detail::expect_object(doc.at("responses"), "responses");
    for (const auto& [qid, answer] : doc.at("responses").items()) {
        if (!answer.is_string()) {
            throw Error(ErrorCode::invalid_answer, "answer for " + qid + " must be a string", qid);
        }
        d.responses[qid] = answer.get<std::string>();
    }
    return d;
}

ResponseDocument load_response_file(const std::string& path) {
    return parse_response_document(detail::parse_text(detail::read_file(path), path));
}

SystemProfile build_profile(const Questionnaire& q, const Responses& responses,
                            const std::string& description, const std::string& threat_actor,
                            std::optional<std::string> profile_id) {
    for (const auto& [qid, answer] : responses) {
        if (!q.find(qid)) throw Error(ErrorCode::invalid_answer, "unknown question " + qid, qid);
    }

    std::vector<const QuestionnaireItem*> order;
    for (const auto& it : q.items) order.push_back(&it);
    std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
        return question_number(a->question_id) < question_number(b->question_id);
    });
    for (const auto* it : order) {
        if (!responses.count(it->question_id)) {
            throw Error(ErrorCode::missing_answer, "missing answer: " + it->question_id, it->question_id);
        }
    }

    SystemProfile p;
    p.system_description = description;
    p.threat_actor = threat_actor;
    bool slots[4] = {false, false, false, false};
    for (const auto* it : order) {
        const std::string& raw = responses.at(it->question_id);
        if (it->answer_kind == AnswerKind::characteristic_enum) {
            const auto& values = q.characteristic_values.at(it->maps_to);
            auto v = std::find_if(values.begin(), values.end(),
                                  [&](const CharacteristicValue& cv) { return cv.label == raw; });
            if (v == values.end()) {
                throw Error(ErrorCode::invalid_answer,
                            "invalid answer for " + it->question_id + ": '" + raw + "'", it->question_id);
            }
            auto& ch = p.characteristics;
            if (it->maps_to == "architecture") {
                ch.architecture = parse_enum<Architecture>(v->value, "architecture");
                slots[0] = true;
            } else if (it->maps_to == "task") {
                ch.task = parse_enum<Task>(v->value, "task");
                slots[1] = true;
            } else if (it->maps_to == "data_type") {
                ch.data_type = parse_enum<DataType>(v->value, "data_type");
                slots[2] = true;
            } else {
                ch.domain = parse_enum<Domain>(v->value, "domain");
                slots[3] = true;
            }
            continue;
        }
        double score = scale_answer(q, *it, raw);
        if (it->section == "attack-impact") {
            p.impact_scores[ImpactId(it->maps_to)] = score;
        } else {
            p.factor_scores[FactorId(it->maps_to)] = score;
            if (is_categorical(it->answer_kind)) p.categorical_answers[FactorId(it->maps_to)] = raw;
        }
    }
    if (!std::all_of(std::begin(slots), std::end(slots), [](bool b) { return b; })) {
        throw Error(ErrorCode::invalid_argument, "questionnaire does not cover every characteristic slot",
                    "characteristics");
    }

    if (profile_id && !profile_id->empty()) {
        p.profile_id = *profile_id;
    } else {
        json basis = {{"responses", responses}, {"description", description}, {"actor", threat_actor}};
        p.profile_id = content_id("profile-", basis.dump());
    }
    return p;
}

SystemProfile build_profile(const Questionnaire& q, const ResponseDocument& doc) {
    return build_profile(q, doc.responses, doc.system_description, doc.threat_actor, doc.profile_id);
}

json profile_to_json(const SystemProfile& p) {
    json factors = json::object();
    for (const auto& [id, s] : p.factor_scores) factors[id.str()] = s;
    json impacts = json::object();
    for (const auto& [id, s] : p.impact_scores) impacts[id.str()] = s;
    json cats = json::object();
    for (const auto& [id, label] : p.categorical_answers) cats[id.str()] = label;
    const auto& c = p.characteristics;
    return {{"profile_id", p.profile_id},
            {"system_description", p.system_description},
            {"threat_actor", p.threat_actor},
            {"characteristics",
             {{"architecture", to_string(c.architecture)},
              {"task", to_string(c.task)},
              {"data_type", to_string(c.data_type)},
              {"domain", to_string(c.domain)}}},
            {"factor_scores", factors},
            {"impact_scores", impacts},
            {"categorical_answers", cats}};
}

SystemProfile profile_from_json(const json& j) {
    check_keys(j, "profile",
               {"profile_id", "system_description", "threat_actor", "characteristics", "factor_scores",
                "impact_scores", "categorical_answers"});
    SystemProfile p;
    p.profile_id = get_string(j, "profile_id", "profile");
    p.system_description = get_string(j, "system_description", "profile");
    p.threat_actor = get_string(j, "threat_actor", "profile");
    const json& c = j.at("characteristics");
    check_keys(c, "characteristics", {"architecture", "task", "data_type", "domain"});
    p.characteristics.architecture = detail::get_enum<Architecture>(c, "architecture", "characteristics");
    p.characteristics.task = detail::get_enum<Task>(c, "task", "characteristics");
    p.characteristics.data_type = detail::get_enum<DataType>(c, "data_type", "characteristics");
    p.characteristics.domain = detail::get_enum<Domain>(c, "domain", "characteristics");
    auto scores = [](const json& obj, std::string_view where, auto& out, auto make_id) {
        detail::expect_object(obj, where);
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            double v = it->is_number() ? it->template get<double>() : -1.0;
            if (!(v >= 0.0 && v <= 1.0)) {
                throw Error(ErrorCode::parse_error,
                            std::string(where) + ": score for " + it.key() + " outside [0,1]", it.key());
            }
            out[make_id(it.key())] = v;
        }
    };
    scores(j.at("factor_scores"), "factor_scores", p.factor_scores, [](const std::string& s) { return FactorId(s); });
    scores(j.at("impact_scores"), "impact_scores", p.impact_scores, [](const std::string& s) { return ImpactId(s); });
    detail::expect_object(j.at("categorical_answers"), "categorical_answers");
    for (const auto& [id, v] : j.at("categorical_answers").items()) {
        if (!v.is_string()) throw Error(ErrorCode::parse_error, "categorical answer must be a string", id);
        p.categorical_answers[FactorId(id)] = v.get<std::string>();
    }
    return p;
}

// ---------------------------------------------------------------------------
// Customization
// ---------------------------------------------------------------------------

CustomQuestionnaire customize_questionnaire(const Questionnaire& base, const std::string& description,
                                            TextGenerator& gateway) {
    if (description.empty()) {
        throw Error(ErrorCode::invalid_argument, "description required", "description");
    }
    CustomQuestionnaire cq;
    cq.base_version = base.version;
    cq.system_description = description;
    cq.generator = gateway.name();

    for (const auto& item : base.items) {
        GenerationRequest req;
        req.purpose = Purpose::customize_questionnaire;
        req.template_id = "customize-questionnaire";
        req.variables = {{"description", description},
                         {"question_id", item.question_id},
                         {"section", item.section},
                         {"prompt", item.prompt},
                         {"allowed_answers", json(item.allowed_answers).dump()}};
        Completion out = gateway.complete(req);

        QuestionnaireItem custom = item;
        json parsed = json::parse(out.text, nullptr, false);
        std::string problem;
        if (parsed.is_discarded() || !parsed.is_object()) {
            problem = "response is not a JSON object";
        } else if (parsed.value("question_id", json()) != json(item.question_id)) {
            problem = "question id changed";
        } else if (parsed.value("section", json()) != json(item.section)) {
            problem = "section changed";
        } else if (parsed.value("allowed_answers", json()) != json(item.allowed_answers)) {
            problem = "answer set changed";
        } else if (!parsed.contains("prompt") || !parsed["prompt"].is_string() ||
                   parsed["prompt"].get<std::string>().empty()) {
            problem = "no prompt text";
        }
        if (problem.empty()) {
            custom.prompt = parsed["prompt"].get<std::string>();
        } else {
            cq.warnings.push_back(item.question_id + ": " + problem + ", base wording kept");
        }
        cq.items.push_back(std::move(custom));
    }
    return cq;
}

json custom_questionnaire_to_json(const CustomQuestionnaire& cq) {
    json items = json::array();
    for (const auto& it : cq.items) {
        items.push_back({{"question_id", it.question_id},
                         {"section", it.section},
                         {"answer_kind", to_string(it.answer_kind)},
                         {"scale", it.scale},
                         {"prompt", it.prompt},
                         {"maps_to", it.maps_to},
                         {"allowed_answers", it.allowed_answers}});
    }
    return {{"base_version", cq.base_version},
            {"system_description", cq.system_description},
            {"generator", cq.generator},
            {"warnings", cq.warnings},
            {"items", items}};
}

}  // namespace amlrisk
