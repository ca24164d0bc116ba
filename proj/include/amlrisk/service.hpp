#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "amlrisk/catalog.hpp"
#include "amlrisk/config.hpp"
#include "amlrisk/engine.hpp"
#include "amlrisk/gateway.hpp"
#include "amlrisk/knowledge.hpp"
#include "amlrisk/profiling.hpp"

namespace httplib {
class Server;
}

namespace amlrisk::service {

struct EngineContext {
    Catalog catalog;
    Questionnaire questionnaire;
    RecordStore store;
    EngineConfig config;
    std::function<std::unique_ptr<TextGenerator>()> make_generator;
    std::function<std::string()> clock;  // created_at for new assessments
    std::string assessment_dir;          // optional on-disk copy of every assessment
};

struct SessionState {
    std::string session_id;
    Responses draft_responses;
    std::string last_assessment_id;
};

class SessionStore {
public:
    SessionState get(const std::string& id) const;
    void save_draft(const std::string& id, const Responses& responses);
    void record_assessment(const std::string& id, const std::string& assessment_id);
    void expire(const std::string& id);

private:
    mutable std::mutex mu_;
    std::map<std::string, SessionState> sessions_;
};

struct Request {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
};

struct Response {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

/// Transport-independent request handling; the HTTP server is a thin shell over it.
class Service {
public:
    /// Throws Error(invalid_catalog) when the catalog fails validation.
    explicit Service(EngineContext ctx);

    Response handle(const Request& req);

    RecordStore snapshot() const;
    SessionStore& sessions() { return sessions_; }

private:
    Response get_catalog();
    Response get_questionnaire(const Request& req);
    Response post_profile(const Request& req);
    Response post_assessment(const Request& req);
    Response get_assessment(const std::string& id);
    Response post_whatif(const std::string& id, const Request& req);
    Response post_ingest(const Request& req);
    Response get_stats();

    void remember(const RiskAssessment& a);
    std::optional<RiskAssessment> lookup(const std::string& id) const;

    EngineContext ctx_;
    mutable std::mutex mu_;
    std::map<std::string, SystemProfile> profiles_;
    std::map<std::string, RiskAssessment> assessments_;
    SessionStore sessions_;
};

/// Error body: {"error": {"code", "message", "subject"}}.
Response error_response(const Error& e);
int http_status(ErrorCode code);

class ServiceHandle {
public:
    ~ServiceHandle();
    int port() const noexcept { return port_; }
    void stop();

private:
    friend std::unique_ptr<ServiceHandle> serve(const std::string&, int, std::shared_ptr<Service>);
    std::unique_ptr<httplib::Server> server_;
    std::shared_ptr<Service> service_;
    std::thread thread_;
    int port_ = 0;
};

/// Binds and starts serving on a background thread; port 0 picks a free port.
/// Throws Error(io_error) on bind failure.
std::unique_ptr<ServiceHandle> serve(const std::string& host, int port, std::shared_ptr<Service> service);

std::string utc_now();

}  // namespace amlrisk::service
