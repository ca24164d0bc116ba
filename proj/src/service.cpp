#include "amlrisk/service.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "amlrisk/report.hpp"
#include "json_util.hpp"

namespace amlrisk::service {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Sessions
// ---------------------------------------------------------------------------

SessionState SessionStore::get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::not_found, "unknown session " + id, id);
    return it->second;
}

void SessionStore::save_draft(const std::string& id, const Responses& responses) {
    std::lock_guard lock(mu_);
    auto& s = sessions_[id];
    s.session_id = id;
    s.draft_responses = responses;
}

void SessionStore::record_assessment(const std::string& id, const std::string& assessment_id) {
    std::lock_guard lock(mu_);
    auto& s = sessions_[id];
    s.session_id = id;
    s.last_assessment_id = assessment_id;
}

void SessionStore::expire(const std::string& id) {
    std::lock_guard lock(mu_);
    sessions_.erase(id);
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

int http_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::missing_answer:
    case ErrorCode::invalid_answer:
    case ErrorCode::missing_score:
    case ErrorCode::not_mitigated:
    case ErrorCode::unknown_attack:
        return 422;
    case ErrorCode::parse_error:
    case ErrorCode::invalid_argument:
    case ErrorCode::schema_version:
        return 400;
    case ErrorCode::not_found:
        return 404;
    case ErrorCode::transport_timeout:
    case ErrorCode::transport_auth:
    case ErrorCode::transport_malformed:
    case ErrorCode::transport_network:
        return 502;
    default:
        return 500;
    }
}

Response error_response(const Error& e) {
    json body = {{"error", {{"code", to_string(e.code())}, {"message", e.what()}, {"subject", e.subject()}}}};
    return {http_status(e.code()), body.dump()};
}

std::string utc_now() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ---------------------------------------------------------------------------
// Service
// ---------------------------------------------------------------------------

namespace {

Response ok(const json& body, int status = 200) { return {status, body.dump()}; }

json parse_body(const std::string& body) {
    json j = detail::parse_text(body, "request body");
    detail::expect_object(j, "request body");
    return j;
}

std::string take_session(json& body) {
    std::string sid;
    if (body.contains("session_id")) {
        sid = detail::get_string(body, "session_id", "request body");
        body.erase("session_id");
    }
    return sid;
}

}  // namespace

Service::Service(EngineContext ctx) : ctx_(std::move(ctx)) {
    ValidationReport report = validate_catalog(ctx_.catalog, ctx_.questionnaire);
    if (!report.ok()) {
        throw Error(ErrorCode::invalid_catalog, "refusing to serve: " + report.findings.front().message,
                    report.findings.front().subject);
    }
    ctx_.config.validate();
    if (!ctx_.clock) ctx_.clock = utc_now;
    if (!ctx_.make_generator) {
        auto prompts = std::make_shared<const PromptLibrary>(PromptLibrary::bundled());
        ctx_.make_generator = [prompts] { return std::make_unique<StubGenerator>(prompts); };
    }
}

RecordStore Service::snapshot() const {
    std::lock_guard lock(mu_);
    return ctx_.store;
}

Response Service::handle(const Request& req) {
    try {
        const std::string& p = req.path;
        const std::string prefix = "/assessments/";
        if (req.method == "GET" && p == "/catalog") return get_catalog();
        if (req.method == "GET" && p == "/questionnaire") return get_questionnaire(req);
        if (req.method == "POST" && p == "/profiles") return post_profile(req);
        if (req.method == "POST" && p == "/assessments") return post_assessment(req);
        if (req.method == "POST" && p == "/records:ingest") return post_ingest(req);
        if (req.method == "GET" && p == "/stats") return get_stats();
        if (p.rfind(prefix, 0) == 0) {
            std::string rest = p.substr(prefix.size());
            const std::string suffix = "/whatif";
            if (req.method == "POST" && rest.size() > suffix.size() &&
                rest.compare(rest.size() - suffix.size(), suffix.size(), suffix) == 0) {
                return post_whatif(rest.substr(0, rest.size() - suffix.size()), req);
            }
            if (req.method == "GET" && rest.find('/') == std::string::npos && !rest.empty()) {
                return get_assessment(rest);
            }
        }
        return error_response(Error(ErrorCode::not_found, "no route for " + req.method + " " + p, p));
    } catch (const Error& e) {
        return error_response(e);
    } catch (const std::exception& e) {
        spdlog::error("request {} {} failed: {}", req.method, req.path, e.what());
        return error_response(Error(ErrorCode::io_error, e.what()));
    }
}

Response Service::get_catalog() { return ok(catalog_to_json(ctx_.catalog)); }

Response Service::get_questionnaire(const Request& req) {
    auto it = req.query.find("description");
    if (it == req.query.end() || it->second.empty()) return ok(questionnaire_to_json(ctx_.questionnaire));
    auto gen = ctx_.make_generator();
    try {
        return ok(custom_questionnaire_to_json(customize_questionnaire(ctx_.questionnaire, it->second, *gen)));
    } catch (const Error& e) {
        if (!is_transport_error(e.code())) throw;
        CustomQuestionnaire base{ctx_.questionnaire.version, it->second, ctx_.questionnaire.items, "none",
                                 {std::string("customization unavailable: ") + e.what()}};
        return ok(custom_questionnaire_to_json(base));
    }
}

Response Service::post_profile(const Request& req) {
    json body = parse_body(req.body);
    std::string sid = take_session(body);
    ResponseDocument doc = parse_response_document(body);
    if (!sid.empty()) sessions_.save_draft(sid, doc.responses);
    SystemProfile profile = build_profile(ctx_.questionnaire, doc);
    {
        std::lock_guard lock(mu_);
        profiles_[profile.profile_id] = profile;
    }
    return ok(profile_to_json(profile));
}

Response Service::post_assessment(const Request& req) {
    json body = parse_body(req.body);
    std::string sid = take_session(body);

    SystemProfile profile;
    if (body.contains("responses")) {
        ResponseDocument doc = parse_response_document(body);
        if (!sid.empty()) sessions_.save_draft(sid, doc.responses);
        profile = build_profile(ctx_.questionnaire, doc);
    } else {
        detail::check_keys(body, "request body", {"profile_id"});
        std::string pid = detail::get_string(body, "profile_id", "request body");
        std::lock_guard lock(mu_);
        auto it = profiles_.find(pid);
        if (it == profiles_.end()) throw Error(ErrorCode::not_found, "unknown profile " + pid, pid);
        profile = it->second;
    }

    RecordStore store = snapshot();
    RiskAssessment a = assess(ctx_.catalog, profile, store, ctx_.config, {ctx_.clock()});
    remember(a);
    if (!sid.empty()) sessions_.record_assessment(sid, a.assessment_id);
    return ok(assessment_to_json(a));
}

Response Service::get_assessment(const std::string& id) {
    auto a = lookup(id);
    if (!a) throw Error(ErrorCode::not_found, "unknown assessment " + id, id);
    return ok(assessment_to_json(*a));
}

Response Service::post_whatif(const std::string& id, const Request& req) {
    auto base = lookup(id);
    if (!base) throw Error(ErrorCode::not_found, "unknown assessment " + id, id);
    json body = parse_body(req.body);
    detail::check_keys(body, "whatif", {}, {"countermeasure", "retrain_rate", "rates", "session_id"});
    std::string sid = take_session(body);

    CountermeasureProfile cm;
    if (body.contains("retrain_rate")) {
        cm = uniform_retraining(*base, detail::get_number(body, "retrain_rate", "whatif"));
    }
    if (body.contains("rates")) {
        detail::expect_object(body.at("rates"), "rates");
        for (const auto& [attack, rate] : body.at("rates").items()) {
            if (!rate.is_number()) throw Error(ErrorCode::parse_error, "rate for " + attack + " must be a number", attack);
            cm.rates[AttackId(attack)] = rate.get<double>();
        }
    }
    if (body.contains("countermeasure")) cm.name = detail::get_string(body, "countermeasure", "whatif");
    if (cm.rates.empty() && !body.contains("retrain_rate")) {
        throw Error(ErrorCode::invalid_argument, "whatif needs retrain_rate or rates", "whatif");
    }

    RiskAssessment after = reassess_with_countermeasure(*base, cm);
    remember(after);
    if (!sid.empty()) sessions_.record_assessment(sid, after.assessment_id);
    return ok(json::parse(render_comparison(*base, after, ReportFormat::machine, after.breakdowns.size())));
}

Response Service::post_ingest(const Request& req) {
    ParsedRecords parsed = parse_records_jsonl(req.body);
    std::lock_guard lock(mu_);
    IngestReport report = ingest_records(ctx_.store, parsed.records);
    ctx_.store = report.store;
    json body = ingest_report_to_json(report);
    for (const auto& e : parsed.errors) {
        body["rejected"].push_back({{"record_id", ""}, {"line", e.line}, {"reason", "parse error: " + e.message}});
    }
    return ok(body);
}

Response Service::get_stats() { return ok(dataset_stats(snapshot()).to_json()); }

void Service::remember(const RiskAssessment& a) {
    std::lock_guard lock(mu_);
    assessments_[a.assessment_id] = a;
    if (ctx_.assessment_dir.empty()) return;
    std::filesystem::create_directories(ctx_.assessment_dir);
    std::ofstream out(ctx_.assessment_dir + "/" + a.assessment_id + ".json");
    out << render_report(a, ReportFormat::machine, 1);
}

std::optional<RiskAssessment> Service::lookup(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = assessments_.find(id);
    if (it != assessments_.end()) return it->second;
    if (ctx_.assessment_dir.empty() || id.find('/') != std::string::npos || id.find("..") != std::string::npos) {
        return std::nullopt;
    }
    std::string path = ctx_.assessment_dir + "/" + id + ".json";
    if (!std::filesystem::exists(path)) return std::nullopt;
    return load_assessment_file(path);
}

// ---------------------------------------------------------------------------
// HTTP shell
// ---------------------------------------------------------------------------

ServiceHandle::~ServiceHandle() { stop(); }

void ServiceHandle::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::unique_ptr<ServiceHandle> serve(const std::string& host, int port, std::shared_ptr<Service> service) {
    auto handle = std::unique_ptr<ServiceHandle>(new ServiceHandle());
    handle->server_ = std::make_unique<httplib::Server>();
    handle->service_ = service;

    auto forward = [service](const httplib::Request& hreq, httplib::Response& hres) {
        Request req{hreq.method, hreq.path, {}, hreq.body};
        for (const auto& [k, v] : hreq.params) req.query[k] = v;
        auto start = std::chrono::steady_clock::now();
        Response res = service->handle(req);
        hres.status = res.status;
        hres.set_content(res.body, res.content_type);
        spdlog::info("{} {} -> {} ({} ms)", hreq.method, hreq.path, res.status,
                     std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
                         .count());
    };
    handle->server_->Get(".*", forward);
    handle->server_->Post(".*", forward);

    if (port == 0) {
        handle->port_ = handle->server_->bind_to_any_port(host);
    } else {
        handle->port_ = handle->server_->bind_to_port(host, port) ? port : -1;
    }
    if (handle->port_ < 0) {
        throw Error(ErrorCode::io_error, "cannot bind " + host + ":" + std::to_string(port), host);
    }
    handle->thread_ = std::thread([srv = handle->server_.get()] { srv->listen_after_bind(); });
    handle->server_->wait_until_ready();
    return handle;
}

}  // namespace amlrisk::service
