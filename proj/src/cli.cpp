#include "amlrisk/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "amlrisk/catalog.hpp"
#include "amlrisk/config.hpp"
#include "amlrisk/engine.hpp"
#include "amlrisk/knowledge.hpp"
#include "amlrisk/profiling.hpp"
#include "amlrisk/report.hpp"
#include "amlrisk/service.hpp"
#include "json_util.hpp"

#ifndef AMLRISK_DATA_DIR
#define AMLRISK_DATA_DIR "data"
#endif

namespace amlrisk::cli {

namespace {

using nlohmann::json;

const std::string kData = AMLRISK_DATA_DIR;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void use_stderr_logger(bool verbose) {
    auto logger = spdlog::get("amlrisk");
    if (!logger) logger = spdlog::stderr_color_mt("amlrisk");
    logger->set_level(verbose ? spdlog::level::debug : spdlog::level::warn);
    spdlog::set_default_logger(logger);
}

void emit_error(std::ostream& err, std::string_view code, const std::string& message, const std::string& subject) {
    err << json{{"error", {{"code", code}, {"message", message}, {"subject", subject}}}}.dump() << "\n";
}

struct Common {
    std::string catalog = kData + "/catalog.json";
    std::string questionnaire = kData + "/questionnaire.json";
    std::string corpus = kData + "/corpus.jsonl";
    std::string prompts = kData + "/prompts";
    std::optional<std::string> config;
    std::string format = "human";
    std::size_t top = 5;
    std::string out;
    std::string provider = "stub";
    std::string created_at;
    std::optional<std::string> epsilon, impact_mode, degenerate, levels, weights;

    EngineConfig engine_config(const EnvLookup& env) {
        ConfigOverrides flags;
        if (epsilon) flags["epsilon"] = *epsilon;
        if (impact_mode) flags["impact_mode"] = *impact_mode;
        if (degenerate) flags["normalization_degenerate_value"] = *degenerate;
        if (levels) flags["downgrade.levels"] = *levels;
        if (weights) flags["downgrade.weights"] = *weights;
        return resolve_config(config, env, flags);
    }

    std::unique_ptr<TextGenerator> generator(const EnvLookup& env) const {
        ProviderConfig pc;
        pc.provider = provider;
        if (auto v = env("AMLRISK_LLM_ENDPOINT")) pc.endpoint = *v;
        if (auto v = env("AMLRISK_LLM_MODEL")) pc.model = *v;
        return make_generator(pc, std::make_shared<const PromptLibrary>(PromptLibrary::load_dir(prompts)), env);
    }
};

void add_paths(CLI::App* cmd, Common& c) {
    cmd->add_option("--catalog", c.catalog, "Catalog file")->capture_default_str();
    cmd->add_option("--questionnaire", c.questionnaire, "Questionnaire file")->capture_default_str();
    cmd->add_option("--corpus", c.corpus, "Record corpus (one JSON record per line)")->capture_default_str();
}

void add_engine(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "Engine config file");
    cmd->add_option("--epsilon", c.epsilon, "Override epsilon");
    cmd->add_option("--impact-mode", c.impact_mode, "noisy-or | literal-product");
    cmd->add_option("--normalization-degenerate-value", c.degenerate, "Value for a flat cohort");
    cmd->add_option("--downgrade-levels", c.levels, "JSON array of context-axis lists");
    cmd->add_option("--downgrade-weights", c.weights, "Comma separated weights");
}

void add_output(CLI::App* cmd, Common& c) {
    cmd->add_option("--format", c.format, "human | machine | html")
        ->check(CLI::IsMember({"human", "machine", "html"}))
        ->capture_default_str();
    cmd->add_option("--top", c.top, "Entries in human and html reports")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--out", c.out, "Write to this file instead of standard output");
}

void add_provider(CLI::App* cmd, Common& c) {
    cmd->add_option("--provider", c.provider, "stub | remote")->check(CLI::IsMember({"stub", "remote"}))->capture_default_str();
    cmd->add_option("--prompts", c.prompts, "Prompt template directory")->capture_default_str();
}

void write_output(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::io_error, "cannot write " + path, path);
    f << text;
}

void cmd_validate(Common& c, std::ostream& out) {
    Catalog catalog = load_catalog_file(c.catalog);
    Questionnaire q = load_questionnaire_file(c.questionnaire);
    ValidationReport report = validate_catalog(catalog, q);
    for (const auto& f : report.findings) out << "finding " << f.code << " " << f.subject << ": " << f.message << "\n";
    if (!report.ok()) {
        const Finding& first = report.findings.front();
        throw Error(ErrorCode::invalid_catalog,
                    std::to_string(report.findings.size()) + " catalog finding(s); first: " + first.message,
                    first.subject);
    }
    RecordStore store = load_record_store_file(c.corpus);
    out << "catalog " << catalog.version << " ok: " << catalog.attacks.size() << " attacks, " << catalog.factors.size()
        << " factors, " << catalog.impacts.size() << " impacts, " << catalog.zeroing_rules.size() << " zeroing rules\n";
    out << "questionnaire " << q.version << " ok: " << q.items.size() << " questions\n";
    out << "corpus ok: " << store.size() << " records, snapshot " << store.snapshot_id() << "\n";
}

void cmd_customize(Common& c, const std::string& description, const EnvLookup& env, std::ostream& out,
                   std::ostream& err) {
    Questionnaire q = load_questionnaire_file(c.questionnaire);
    auto gen = c.generator(env);
    CustomQuestionnaire cq;
    try {
        cq = customize_questionnaire(q, description, *gen);
    } catch (const Error& e) {
        if (!is_transport_error(e.code())) throw;
        cq = {q.version, description, q.items, "none", {std::string("customization unavailable: ") + e.what()}};
    }
    for (const auto& w : cq.warnings) err << "warning: " << w << "\n";
    write_output(custom_questionnaire_to_json(cq).dump(2) + "\n", c.out, out);
}

void cmd_assess(Common& c, const std::string& responses, bool scenarios, const EnvLookup& env, std::ostream& out) {
    Catalog catalog = load_catalog_file(c.catalog);
    Questionnaire q = load_questionnaire_file(c.questionnaire);
    ValidationReport report = validate_catalog(catalog, q);
    if (!report.ok()) {
        throw Error(ErrorCode::invalid_catalog, "invalid catalog: " + report.findings.front().message,
                    report.findings.front().subject);
    }
    RecordStore store = load_record_store_file(c.corpus);
    EngineConfig config = c.engine_config(env);
    ResponseDocument doc = load_response_file(responses);
    SystemProfile profile = build_profile(q, doc);
    RiskAssessment a = assess(catalog, profile, store, config, {c.created_at});
    ReportFormat format = parse_report_format(c.format);
    std::string text = render_report(a, format, c.top);
    if (scenarios) {
        auto gen = c.generator(env);
        auto cards = generate_scenarios(a, catalog, c.top, profile.system_description, profile.threat_actor, *gen);
        if (format == ReportFormat::machine) {
            json j = assessment_to_json(a);
            j["scenarios"] = scenarios_to_json(cards);
            text = j.dump(2) + "\n";
        } else {
            text += "\nScenarios\n";
            for (const auto& card : cards) {
                text += std::to_string(card.rank) + ". " + card.attack_id.str() + " (" + card.score + ", " +
                        card.generator + ")\n   " + card.narrative + "\n";
            }
        }
    }
    write_output(text, c.out, out);
}

void cmd_whatif(Common& c, const std::string& assessment_path, std::optional<double> rate,
                const std::string& countermeasure, const std::string& rates_file, std::ostream& out) {
    RiskAssessment base = load_assessment_file(assessment_path);
    CountermeasureProfile cm;
    if (rate) cm = uniform_retraining(base, *rate);
    if (!rates_file.empty()) {
        json j = detail::parse_text(detail::read_file(rates_file), rates_file);
        detail::expect_object(j, rates_file);
        for (const auto& [id, v] : j.items()) {
            if (!v.is_number()) throw Error(ErrorCode::parse_error, "rate for " + id + " must be a number", id);
            cm.rates[AttackId(id)] = v.get<double>();
        }
    }
    if (!rate && rates_file.empty()) {
        throw Error(ErrorCode::invalid_argument, "whatif needs --retrain-rate or --rates", "retrain-rate");
    }
    cm.name = countermeasure;
    RiskAssessment after = reassess_with_countermeasure(base, cm);
    write_output(render_comparison(base, after, parse_report_format(c.format), c.top), c.out, out);
}

void cmd_ingest(Common& c, const std::string& records_path, std::ostream& out) {
    RecordStore store = load_record_store_file(c.corpus);
    ParsedRecords parsed = parse_records_jsonl(detail::read_file(records_path));
    IngestReport report = ingest_records(store, parsed.records);
    json j = ingest_report_to_json(report);
    for (const auto& e : parsed.errors) {
        j["rejected"].push_back({{"record_id", ""}, {"line", e.line}, {"reason", "parse error: " + e.message}});
    }
    if (!c.out.empty()) write_output(store_to_jsonl(report.store), c.out, out);
    if (c.format == "machine") {
        out << j.dump(2) << "\n";
        return;
    }
    out << "accepted " << report.accepted << ", rejected " << j["rejected"].size() << "; snapshot "
        << report.store.snapshot_id() << " (" << report.store.size() << " records)\n";
    for (const auto& r : j["rejected"]) {
        out << "  rejected " << r["record_id"].get<std::string>() << ": " << r["reason"].get<std::string>() << "\n";
    }
}

void cmd_stats(Common& c, std::ostream& out) {
    RecordStore store = load_record_store_file(c.corpus);
    StatsSummary s = dataset_stats(store);
    if (c.format == "machine") {
        write_output(s.to_json().dump(2) + "\n", c.out, out);
        return;
    }
    std::ostringstream text;
    text << "records " << s.record_count << "\n";
    auto share_line = [&](const char* title, const std::map<std::string, double>& m) {
        text << title << ":";
        for (const auto& [k, v] : m) {
            if (v > 0.0) text << " " << k << " " << format_score(v * 100.0) << "%";
        }
        text << "\n";
    };
    share_line("domain", s.domain_share);
    share_line("threat model", s.threat_model_share);
    text << "mean success:";
    for (const auto& [m, v] : s.mean_success_by_mode) text << " " << m << " " << format_score(v);
    text << "\n";
    for (const auto& [d, m] : s.objective_share_by_domain) {
        std::string title = "objectives in " + d;
        share_line(title.c_str(), m);
    }
    write_output(text.str(), c.out, out);
}

void cmd_serve(Common& c, const std::string& host, int port, const std::string& dir, const EnvLookup& env,
               std::ostream& out) {
    service::EngineContext ctx;
    ctx.catalog = load_catalog_file(c.catalog);
    ctx.questionnaire = load_questionnaire_file(c.questionnaire);
    ctx.store = load_record_store_file(c.corpus);
    ctx.config = c.engine_config(env);
    ctx.assessment_dir = dir;
    Common copy = c;
    ctx.make_generator = [copy, env] { return copy.generator(env); };
    copy.generator(env);  // fail fast on a missing credential
    auto svc = std::make_shared<service::Service>(std::move(ctx));
    auto handle = service::serve(host, port, svc);
    out << "listening on " << host << ":" << handle->port() << std::endl;
    g_stop = false;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    handle->stop();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
    CLI::App app{"Adversarial ML risk assessment"};
    app.name("amlrisk");
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging on standard error");

    Common c;

    auto* validate = app.add_subcommand("validate", "Check catalog, questionnaire and corpus");
    add_paths(validate, c);

    std::string description;
    auto* customize = app.add_subcommand("customize", "Adapt the questionnaire wording to a system description");
    add_paths(customize, c);
    add_provider(customize, c);
    customize->add_option("--description", description, "System description")->required();
    customize->add_option("--out", c.out, "Write to this file instead of standard output");

    std::string responses;
    bool scenarios = false;
    auto* assess_cmd = app.add_subcommand("assess", "Score every attack for one system profile");
    add_paths(assess_cmd, c);
    add_engine(assess_cmd, c);
    add_output(assess_cmd, c);
    add_provider(assess_cmd, c);
    assess_cmd->add_option("--responses", responses, "Questionnaire responses file")->required();
    assess_cmd->add_option("--created-at", c.created_at, "Timestamp recorded in the assessment");
    assess_cmd->add_flag("--scenarios", scenarios, "Append generated scenarios for the top entries");

    std::string assessment_path;
    std::optional<double> rate;
    std::string countermeasure = "adversarial-retraining";
    std::string rates_file;
    auto* whatif = app.add_subcommand("whatif", "Rescore a machine report under a countermeasure");
    add_output(whatif, c);
    whatif->add_option("--assessment", assessment_path, "Machine-format assessment")->required();
    whatif->add_option("--retrain-rate", rate, "Retrain success rate for every mitigated attack");
    whatif->add_option("--rates", rates_file, "JSON object attack id -> retrain success rate");
    whatif->add_option("--countermeasure", countermeasure, "Countermeasure name")->capture_default_str();

    std::string records_path;
    auto* ingest = app.add_subcommand("ingest", "Validate and add records to a corpus snapshot");
    add_paths(ingest, c);
    ingest->add_option("--records", records_path, "Candidate records (one JSON record per line)")->required();
    ingest->add_option("--out", c.out, "Write the new corpus snapshot here");
    ingest->add_option("--format", c.format, "human | machine")->check(CLI::IsMember({"human", "machine"}));

    auto* stats = app.add_subcommand("stats", "Summarize the record corpus");
    add_paths(stats, c);
    stats->add_option("--format", c.format, "human | machine")->check(CLI::IsMember({"human", "machine"}));
    stats->add_option("--out", c.out, "Write to this file instead of standard output");

    std::string host = "127.0.0.1";
    int port = 8080;
    std::string assessment_dir;
    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    add_paths(serve, c);
    add_engine(serve, c);
    add_provider(serve, c);
    serve->add_option("--host", host, "Bind address")->capture_default_str();
    serve->add_option("--port", port, "Port (0 picks a free one)")->capture_default_str();
    serve->add_option("--assessment-dir", assessment_dir, "Directory for stored assessments");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        emit_error(err, "usage", e.what(), "");
        return 1;
    }
    use_stderr_logger(verbose);

    try {
        if (validate->parsed()) cmd_validate(c, out);
        else if (customize->parsed()) cmd_customize(c, description, env, out, err);
        else if (assess_cmd->parsed()) cmd_assess(c, responses, scenarios, env, out);
        else if (whatif->parsed()) cmd_whatif(c, assessment_path, rate, countermeasure, rates_file, out);
        else if (ingest->parsed()) cmd_ingest(c, records_path, out);
        else if (stats->parsed()) cmd_stats(c, out);
        else if (serve->parsed()) cmd_serve(c, host, port, assessment_dir, env, out);
    } catch (const Error& e) {
        emit_error(err, to_string(e.code()), e.what(), e.subject());
        return 1;
    } catch (const std::exception& e) {
        emit_error(err, "internal", e.what(), "");
        return 1;
    }
    return 0;
}

}  // namespace amlrisk::cli
