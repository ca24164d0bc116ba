#include "amlrisk/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "amlrisk/digest.hpp"
#include "json_util.hpp"

namespace amlrisk {

using nlohmann::json;

std::vector<AttackId> rank(const std::vector<ScoreBreakdown>& breakdowns) {
    std::vector<const ScoreBreakdown*> order;
    for (const auto& b : breakdowns) order.push_back(&b);
    std::sort(order.begin(), order.end(), [](const ScoreBreakdown* x, const ScoreBreakdown* y) {
        if (x->score != y->score) return x->score > y->score;
        return x->attack_id < y->attack_id;
    });
    std::vector<AttackId> ids;
    for (const auto* b : order) ids.push_back(b->attack_id);
    return ids;
}

std::string format_score(double score) {
    double rounded = std::floor(score * 1000.0 + 0.5) / 1000.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", rounded);
    return buf;
}

// ---------------------------------------------------------------------------
// Machine form
// ---------------------------------------------------------------------------

namespace {

json mode_to_json(const ModeBreakdown& m) {
    json batches = json::array();
    for (const auto& b : m.batches) {
        batches.push_back({{"level", b.level},
                           {"mode", to_string(b.mode)},
                           {"record_ids", b.record_ids},
                           {"batch_mean", b.batch_mean}});
    }
    return {{"supported", m.supported}, {"f_em", m.f_em},         {"norm_f", m.norm_f}, {"sr", m.sr},
            {"sr_fallback", m.sr_fallback}, {"l", m.l}, {"batches", batches}};
}

ModeBreakdown mode_from_json(const json& j) {
    detail::check_keys(j, "mode", {"supported", "f_em", "norm_f", "sr", "sr_fallback", "l", "batches"});
    ModeBreakdown m;
    m.supported = detail::get_bool(j, "supported", "mode");
    m.f_em = detail::get_number(j, "f_em", "mode");
    m.norm_f = detail::get_number(j, "norm_f", "mode");
    m.sr = detail::get_number(j, "sr", "mode");
    m.sr_fallback = detail::get_bool(j, "sr_fallback", "mode");
    m.l = detail::get_number(j, "l", "mode");
    for (const auto& b : detail::get_array(j, "batches", "mode")) {
        detail::check_keys(b, "batch", {"level", "mode", "record_ids", "batch_mean"});
        MatchBatch mb;
        mb.level = b.at("level").get<int>();
        mb.mode = detail::get_enum<ExecutionMode>(b, "mode", "batch");
        mb.record_ids = b.at("record_ids").get<std::vector<std::string>>();
        mb.batch_mean = detail::get_number(b, "batch_mean", "batch");
        m.batches.push_back(std::move(mb));
    }
    return m;
}

json breakdown_to_json(const ScoreBreakdown& b) {
    json cm = nullptr;
    if (b.countermeasure) {
        cm = {{"name", b.countermeasure->name},
              {"sr_retrain", b.countermeasure->sr_retrain},
              {"score_before", b.countermeasure->score_before}};
    }
    return {{"attack_id", b.attack_id.str()},
            {"attack_name", b.attack_name},
            {"objective", to_string(b.objective)},
            {"retraining_mitigated", b.retraining_mitigated},
            {"f_generic", b.f_generic},
            {"modes",
             {{"digital", mode_to_json(b.mode(ExecutionMode::digital))},
              {"physical", mode_to_json(b.mode(ExecutionMode::physical))}}},
            {"l_overall", b.l_overall},
            {"impact", b.impact},
            {"raw_score", b.raw_score},
            {"score", b.score},
            {"display_score", format_score(b.score)},
            {"zeroed_by", b.zeroed_by ? json(*b.zeroed_by) : json(nullptr)},
            {"warnings", b.warnings},
            {"countermeasure", cm}};
}

ScoreBreakdown breakdown_from_json(const json& j) {
    detail::check_keys(j, "breakdown",
                       {"attack_id", "attack_name", "objective", "retraining_mitigated", "f_generic", "modes",
                        "l_overall", "impact", "raw_score", "score", "zeroed_by", "warnings", "countermeasure"},
                       {"display_score"});
    ScoreBreakdown b;
    b.attack_id = AttackId(detail::get_string(j, "attack_id", "breakdown"));
    const std::string where = "breakdown " + b.attack_id.str();
    b.attack_name = detail::get_string(j, "attack_name", where);
    b.objective = detail::get_enum<Objective>(j, "objective", where);
    b.retraining_mitigated = detail::get_bool(j, "retraining_mitigated", where);
    b.f_generic = detail::get_number(j, "f_generic", where);
    const json& modes = j.at("modes");
    detail::check_keys(modes, where, {"digital", "physical"});
    b.mode(ExecutionMode::digital) = mode_from_json(modes.at("digital"));
    b.mode(ExecutionMode::physical) = mode_from_json(modes.at("physical"));
    b.l_overall = detail::get_number(j, "l_overall", where);
    b.impact = detail::get_number(j, "impact", where);
    b.raw_score = detail::get_number(j, "raw_score", where);
    b.score = detail::get_number(j, "score", where);
    if (!j.at("zeroed_by").is_null()) b.zeroed_by = detail::get_string(j, "zeroed_by", where);
    b.warnings = j.at("warnings").get<std::vector<std::string>>();
    if (!j.at("countermeasure").is_null()) {
        const json& c = j.at("countermeasure");
        detail::check_keys(c, where, {"name", "sr_retrain", "score_before"});
        b.countermeasure = AppliedCountermeasure{detail::get_string(c, "name", where),
                                                 detail::get_number(c, "sr_retrain", where),
                                                 detail::get_number(c, "score_before", where)};
    }
    return b;
}

json body_to_json(const RiskAssessment& a) {
    json breakdowns = json::array();
    for (const auto& b : a.breakdowns) breakdowns.push_back(breakdown_to_json(b));
    json ranking = json::array();
    for (const auto& id : a.ranking) ranking.push_back(id.str());
    return {{"profile_id", a.profile_id},
            {"catalog_version", a.catalog_version},
            {"snapshot_id", a.snapshot_id},
            {"config_digest", a.config_digest},
            {"ranking", ranking},
            {"breakdowns", breakdowns}};
}

}  // namespace

std::string assessment_digest(const RiskAssessment& a) { return content_id("asmt-", body_to_json(a).dump()); }

json assessment_to_json(const RiskAssessment& a) {
    json j = body_to_json(a);
    j["assessment_id"] = a.assessment_id;
    j["created_at"] = a.created_at;
    return j;
}

RiskAssessment assessment_from_json(const json& j) {
    detail::check_keys(j, "assessment",
                       {"assessment_id", "created_at", "profile_id", "catalog_version", "snapshot_id",
                        "config_digest", "ranking", "breakdowns"});
    RiskAssessment a;
    a.assessment_id = detail::get_string(j, "assessment_id", "assessment");
    a.created_at = detail::get_string(j, "created_at", "assessment");
    a.profile_id = detail::get_string(j, "profile_id", "assessment");
    a.catalog_version = detail::get_string(j, "catalog_version", "assessment");
    a.snapshot_id = detail::get_string(j, "snapshot_id", "assessment");
    a.config_digest = detail::get_string(j, "config_digest", "assessment");
    for (const auto& id : detail::get_array(j, "ranking", "assessment")) a.ranking.emplace_back(id.get<std::string>());
    for (const auto& b : detail::get_array(j, "breakdowns", "assessment")) {
        a.breakdowns.push_back(breakdown_from_json(b));
    }
    return a;
}

RiskAssessment load_assessment_file(const std::string& path) {
    return assessment_from_json(detail::parse_text(detail::read_file(path), path));
}

ReportFormat parse_report_format(std::string_view text) {
    if (text == "machine") return ReportFormat::machine;
    if (text == "human") return ReportFormat::human;
    if (text == "html") return ReportFormat::html;
    throw Error(ErrorCode::invalid_argument, "format must be human, machine or html", "format");
}

// ---------------------------------------------------------------------------
// Human and HTML forms
// ---------------------------------------------------------------------------

namespace {

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string mode_line(const ScoreBreakdown& b) {
    std::string out;
    for (auto mode : kModes) {
        const ModeBreakdown& m = b.mode(mode);
        if (!out.empty()) out += "; ";
        out += std::string(to_string(mode)) + ": ";
        if (!m.supported) {
            out += "n/a";
            continue;
        }
        out += "NormF " + fixed3(m.norm_f) + " x SR " + fixed3(m.sr) + " = L " + fixed3(m.l);
        if (m.sr_fallback) out += " (fallback SR)";
    }
    return out;
}

std::string score_cell(const ScoreBreakdown& b) {
    if (!b.countermeasure) return format_score(b.score);
    return format_score(b.countermeasure->score_before) + " -> " + format_score(b.score);
}

std::string html_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&#39;"; break;
        default: out += c;
        }
    }
    return out;
}

std::vector<const ScoreBreakdown*> top(const RiskAssessment& a, std::size_t k) {
    std::vector<const ScoreBreakdown*> out;
    for (const auto& id : a.ranking) {
        if (out.size() >= k) break;
        if (const ScoreBreakdown* b = a.find(id)) out.push_back(b);
    }
    return out;
}

std::string render_human(const RiskAssessment& a, std::size_t k) {
    std::ostringstream out;
    out << "Risk assessment " << a.assessment_id << "\n";
    out << "profile " << a.profile_id << " | catalog " << a.catalog_version << " | corpus " << a.snapshot_id
        << " | config " << a.config_digest << "\n";
    if (!a.created_at.empty()) out << "created " << a.created_at << "\n";
    out << "\n";
    int rank_no = 0;
    for (const ScoreBreakdown* b : top(a, k)) {
        ++rank_no;
        out << rank_no << ". " << score_cell(*b) << "  [" << to_string(b->objective) << "]  " << b->attack_name
            << " (" << b->attack_id.str() << ")\n";
        out << "   " << mode_line(*b) << " | L " << fixed3(b->l_overall) << " | I " << fixed3(b->impact) << "\n";
        if (b->zeroed_by) out << "   zeroed by " << *b->zeroed_by << "\n";
        if (b->countermeasure) {
            out << "   " << b->countermeasure->name << " x " << fixed3(b->countermeasure->sr_retrain) << "\n";
        }
    }
    return out.str();
}

std::string render_html(const RiskAssessment& a, std::size_t k) {
    std::ostringstream out;
    out << "<section class=\"amlrisk-report\" data-assessment=\"" << html_escape(a.assessment_id) << "\">\n";
    out << "<ol class=\"ranking\">\n";
    for (const ScoreBreakdown* b : top(a, k)) {
        out << "<li data-attack=\"" << html_escape(b->attack_id.str()) << "\">"
            << "<span class=\"score\">" << html_escape(score_cell(*b)) << "</span> "
            << "<span class=\"objective\">" << to_string(b->objective) << "</span> "
            << "<span class=\"name\">" << html_escape(b->attack_name) << "</span>"
            << "<div class=\"modes\">" << html_escape(mode_line(*b)) << "</div>";
        if (b->zeroed_by) out << "<div class=\"zeroed\">zeroed by " << html_escape(*b->zeroed_by) << "</div>";
        out << "</li>\n";
    }
    out << "</ol>\n</section>\n";
    return out.str();
}

}  // namespace

std::string render_report(const RiskAssessment& a, ReportFormat format, std::size_t top_k) {
    if (top_k == 0) throw Error(ErrorCode::invalid_argument, "top_k must be at least 1", "top");
    switch (format) {
    case ReportFormat::machine: return assessment_to_json(a).dump(2) + "\n";
    case ReportFormat::human: return render_human(a, top_k);
    case ReportFormat::html: return render_html(a, top_k);
    }
    return {};
}

std::string render_comparison(const RiskAssessment& before, const RiskAssessment& after, ReportFormat format,
                              std::size_t top_k) {
    if (top_k == 0) throw Error(ErrorCode::invalid_argument, "top_k must be at least 1", "top");
    if (format == ReportFormat::machine) {
        json rows = json::array();
        for (const auto& id : before.ranking) {
            const ScoreBreakdown* b = before.find(id);
            const ScoreBreakdown* x = after.find(id);
            rows.push_back({{"attack_id", id.str()},
                            {"before", b->score},
                            {"after", x ? x->score : 0.0},
                            {"before_display", format_score(b->score)},
                            {"after_display", format_score(x ? x->score : 0.0)}});
        }
        return json{{"before", assessment_to_json(before)}, {"after", assessment_to_json(after)}, {"delta", rows}}
                   .dump(2) +
               "\n";
    }
    std::ostringstream out;
    bool html = format == ReportFormat::html;
    if (html) out << "<table class=\"amlrisk-whatif\">\n<tr><th>rank</th><th>attack</th><th>before</th><th>after</th></tr>\n";
    else out << "What-if " << before.assessment_id << " -> " << after.assessment_id << "\n\n";
    int n = 0;
    // Rows follow the baseline ranking so mitigated attacks stay in view.
    for (const ScoreBreakdown* x : top(before, top_k)) {
        ++n;
        const ScoreBreakdown* b = after.find(x->attack_id);
        std::string was = format_score(x->score);
        std::string now = format_score(b ? b->score : 0.0);
        if (html) {
            out << "<tr><td>" << n << "</td><td>" << html_escape(x->attack_name) << "</td><td>" << was
                << "</td><td>" << now << "</td></tr>\n";
        } else {
            out << n << ". " << was << " -> " << now << "  " << x->attack_name << " (" << x->attack_id.str() << ")\n";
        }
    }
    if (html) out << "</table>\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

std::vector<ScenarioCard> generate_scenarios(const RiskAssessment& a, const Catalog& catalog, std::size_t top_k,
                                             const std::string& system_description, const std::string& threat_actor,
                                             TextGenerator& gateway) {
    std::vector<ScenarioCard> cards;
    int rank_no = 0;
    for (const ScoreBreakdown* b : top(a, top_k)) {
        ++rank_no;
        const AttackDefinition* def = catalog.find_attack(b->attack_id);
        std::string description = def && !def->description.empty() ? def->description : b->attack_name;

        ScenarioCard card;
        card.attack_id = b->attack_id;
        card.rank = rank_no;
        card.score = format_score(b->score);
        card.objective = b->objective;

        GenerationRequest req;
        req.purpose = Purpose::scenario;
        req.template_id = "scenario";
        req.variables = {{"description", system_description},
                         {"threat_actor", threat_actor},
                         {"rank", std::to_string(rank_no)},
                         {"score", card.score},
                         {"objective", std::string(to_string(b->objective))},
                         {"attack_name", b->attack_name},
                         {"attack_description", description}};
        try {
            Completion c = gateway.complete(req);
            card.narrative = c.text;
            card.generator = c.generator;
        } catch (const Error& e) {
            if (!is_transport_error(e.code())) throw;
            card.narrative.clear();
        }
        if (card.narrative.empty()) {
            card.narrative = description;
            card.generator = "stub";
            card.fallback = true;
        }
        cards.push_back(std::move(card));
    }
    return cards;
}

json scenarios_to_json(const std::vector<ScenarioCard>& cards) {
    json out = json::array();
    for (const auto& c : cards) {
        out.push_back({{"attack_id", c.attack_id.str()},
                       {"rank", c.rank},
                       {"score", c.score},
                       {"objective", to_string(c.objective)},
                       {"narrative", c.narrative},
                       {"generator", c.generator},
                       {"fallback", c.fallback}});
    }
    return out;
}

}  // namespace amlrisk
