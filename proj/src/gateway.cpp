#include "amlrisk/gateway.hpp"

#include <cstdlib>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "json_util.hpp"

#ifndef AMLRISK_DATA_DIR
#define AMLRISK_DATA_DIR "data"
#endif

namespace amlrisk {

using nlohmann::json;

std::string_view to_string(Purpose p) {
    return p == Purpose::customize_questionnaire ? "customize-questionnaire" : "scenario";
}

bool is_transport_error(ErrorCode code) noexcept {
    return code == ErrorCode::transport_timeout || code == ErrorCode::transport_auth ||
           code == ErrorCode::transport_malformed || code == ErrorCode::transport_network;
}

// ---------------------------------------------------------------------------
// Templates
// ---------------------------------------------------------------------------

std::string render_template(const std::string& text, const std::map<std::string, std::string>& vars) {
    std::string out;
    std::size_t pos = 0;
    while (true) {
        std::size_t open = text.find("{{", pos);
        if (open == std::string::npos) break;
        std::size_t close = text.find("}}", open + 2);
        if (close == std::string::npos) break;
        out.append(text, pos, open - pos);
        std::string name = text.substr(open + 2, close - open - 2);
        std::string filter;
        if (auto bar = name.find('|'); bar != std::string::npos) {
            filter = name.substr(bar + 1);
            name.resize(bar);
            if (filter != "escape") {
                throw Error(ErrorCode::invalid_argument, "unknown template filter '" + filter + "'", name);
            }
        }
        auto it = vars.find(name);
        if (it == vars.end()) {
            throw Error(ErrorCode::invalid_argument, "unbound template variable '" + name + "'", name);
        }
        if (filter.empty()) {
            out += it->second;
        } else {
            std::string quoted = json(it->second).dump();
            out.append(quoted, 1, quoted.size() - 2);
        }
        pos = close + 2;
    }
    out.append(text, pos, std::string::npos);
    return out;
}

PromptLibrary PromptLibrary::load_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    PromptLibrary lib;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        throw Error(ErrorCode::io_error, "prompt directory not found: " + dir, dir);
    }
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        auto rel = fs::relative(entry.path(), dir);
        rel.replace_extension();
        lib.add(rel.generic_string(), detail::read_file(entry.path().string()));
    }
    return lib;
}

PromptLibrary PromptLibrary::bundled() { return load_dir(std::string(AMLRISK_DATA_DIR) + "/prompts"); }

void PromptLibrary::add(const std::string& id, std::string text) { templates_[id] = std::move(text); }

bool PromptLibrary::has(const std::string& id) const { return templates_.count(id) != 0; }

std::string PromptLibrary::render(const std::string& id,
                                  const std::map<std::string, std::string>& vars) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) {
        throw Error(ErrorCode::invalid_argument, "unknown prompt template '" + id + "'", id);
    }
    return render_template(it->second, vars);
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

Completion TextGenerator::complete(const GenerationRequest& request) {
    auto start = std::chrono::steady_clock::now();
    try {
        Completion c = do_complete(request);
        if (c.text.size() > request.max_length) c.text.resize(request.max_length);
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start);
        spdlog::debug("generation purpose={} template={} provider={} latency_ms={}",
                      to_string(request.purpose), request.template_id, name(), ms.count());
        return c;
    } catch (const Error& e) {
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start);
        spdlog::warn("generation failed purpose={} provider={} latency_ms={} code={}",
                     to_string(request.purpose), name(), ms.count(), to_string(e.code()));
        throw;
    }
}

StubGenerator::StubGenerator(std::shared_ptr<const PromptLibrary> prompts)
    : prompts_(std::move(prompts)) {}

Completion StubGenerator::do_complete(const GenerationRequest& request) {
    return {prompts_->render("stub/" + request.template_id, request.variables), "stub"};
}

namespace {

class HttplibTransport final : public HttpTransport {
public:
    HttpResponse post(const std::string& url, const std::map<std::string, std::string>& headers,
                      const std::string& body, std::chrono::milliseconds timeout) override {
        auto scheme_end = url.find("://");
        auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
        std::string origin = url.substr(0, path_start);
        std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

        httplib::Client client(origin);
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
        auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());

        httplib::Headers h;
        for (const auto& [k, v] : headers) h.emplace(k, v);
        auto res = client.Post(path, h, body, "application/json");
        if (!res) {
            auto err = res.error();
            if (err == httplib::Error::Read || err == httplib::Error::Write ||
                err == httplib::Error::ConnectionTimeout) {
                throw Error(ErrorCode::transport_timeout, "request timed out: " + httplib::to_string(err),
                            origin);
            }
            throw Error(ErrorCode::transport_network, "request failed: " + httplib::to_string(err), origin);
        }
        return {res->status, res->body};
    }
};

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport() { return std::make_unique<HttplibTransport>(); }

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        const char* v = std::getenv(name.c_str());
        if (!v) return std::nullopt;
        return std::string(v);
    };
}

RemoteGenerator::RemoteGenerator(ProviderConfig config, std::shared_ptr<const PromptLibrary> prompts,
                                 std::unique_ptr<HttpTransport> transport, const EnvLookup& env)
    : sleep([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }),
      config_(std::move(config)),
      prompts_(std::move(prompts)),
      transport_(std::move(transport)) {
    auto secret = env(config_.credential_env);
    if (!secret || secret->empty()) {
        throw Error(ErrorCode::invalid_argument,
                    "remote provider needs credential variable " + config_.credential_env + " to be set",
                    config_.credential_env);
    }
    credential_ = *secret;
}

Completion RemoteGenerator::do_complete(const GenerationRequest& request) {
    std::string prompt = prompts_->render(request.template_id, request.variables);
    json body = {{"model", config_.model},
                 {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                 {"max_tokens", request.max_length}};
    std::map<std::string, std::string> headers{{"Authorization", "Bearer " + credential_}};

    int attempts = std::max(1, config_.retry.attempts);
    last_attempts_ = 0;
    for (int attempt = 1;; ++attempt) {
        last_attempts_ = attempt;
        bool last = attempt == attempts;
        try {
            HttpResponse res = transport_->post(config_.endpoint, headers, body.dump(), request.timeout);
            spdlog::info("remote attempt {} purpose={} status={}", attempt, to_string(request.purpose),
                         res.status);
            if (res.status == 401 || res.status == 403) {
                throw Error(ErrorCode::transport_auth,
                            "provider rejected credentials (HTTP " + std::to_string(res.status) + ")",
                            config_.credential_env);
            }
            if (retryable_status(res.status)) {
                if (last) {
                    throw Error(ErrorCode::transport_network,
                                "provider returned HTTP " + std::to_string(res.status), config_.endpoint);
                }
                sleep(config_.retry.backoff * attempt);
                continue;
            }
            if (res.status != 200) {
                throw Error(ErrorCode::transport_malformed,
                            "unexpected HTTP " + std::to_string(res.status), config_.endpoint);
            }
            json parsed = json::parse(res.body, nullptr, false);
            if (parsed.is_discarded() || !parsed.contains("choices") || !parsed["choices"].is_array() ||
                parsed["choices"].empty()) {
                throw Error(ErrorCode::transport_malformed, "malformed provider response", config_.endpoint);
            }
            const json& msg = parsed["choices"][0].value("message", json::object());
            if (!msg.contains("content") || !msg["content"].is_string()) {
                throw Error(ErrorCode::transport_malformed, "provider response has no content",
                            config_.endpoint);
            }
            return {msg["content"].get<std::string>(), config_.model};
        } catch (const Error& e) {
            bool transient = e.code() == ErrorCode::transport_timeout ||
                             e.code() == ErrorCode::transport_network;
            spdlog::info("remote attempt {} purpose={} failed: {}", attempt, to_string(request.purpose),
                         to_string(e.code()));
            if (!transient || last) throw;
            sleep(config_.retry.backoff * attempt);
        }
    }
}

std::unique_ptr<TextGenerator> make_generator(const ProviderConfig& config,
                                              std::shared_ptr<const PromptLibrary> prompts,
                                              const EnvLookup& env) {
    if (config.provider == "stub") return std::make_unique<StubGenerator>(std::move(prompts));
    if (config.provider == "remote") {
        return std::make_unique<RemoteGenerator>(config, std::move(prompts), make_http_transport(), env);
    }
    throw Error(ErrorCode::invalid_argument, "unknown provider '" + config.provider + "'", "provider");
}

}  // namespace amlrisk
