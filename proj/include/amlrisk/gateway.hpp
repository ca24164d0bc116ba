#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "amlrisk/types.hpp"

namespace amlrisk {

enum class Purpose { customize_questionnaire, scenario };

std::string_view to_string(Purpose p);

struct GenerationRequest {
    Purpose purpose = Purpose::scenario;
    std::string template_id;
    std::map<std::string, std::string> variables;
    std::size_t max_length = 4096;
    std::chrono::milliseconds timeout{30000};
};

struct Completion {
    std::string text;
    std::string generator;  // "stub" or the remote model id
};

/// Prompt templates loaded from a directory of `<id>.txt` files. Templates use
/// `{{name}}` placeholders; `{{name|escape}}` inserts the value escaped for use
/// inside a JSON string literal. Files under `stub/` are the offline stub's canned responses.
class PromptLibrary {
public:
    static PromptLibrary load_dir(const std::string& dir);
    static PromptLibrary bundled();

    void add(const std::string& id, std::string text);
    bool has(const std::string& id) const;
    /// Throws Error(invalid_argument) on an unknown id or an unbound variable.
    std::string render(const std::string& id, const std::map<std::string, std::string>& vars) const;

private:
    std::map<std::string, std::string> templates_;
};

std::string render_template(const std::string& text, const std::map<std::string, std::string>& vars);

class TextGenerator {
public:
    virtual ~TextGenerator() = default;

    Completion complete(const GenerationRequest& request);

    virtual std::string name() const = 0;

protected:
    virtual Completion do_complete(const GenerationRequest& request) = 0;
};

/// Deterministic offline generator: renders `stub/<template_id>` from the library.
class StubGenerator final : public TextGenerator {
public:
    explicit StubGenerator(std::shared_ptr<const PromptLibrary> prompts);
    std::string name() const override { return "stub"; }

protected:
    Completion do_complete(const GenerationRequest& request) override;

private:
    std::shared_ptr<const PromptLibrary> prompts_;
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// Injectable transport; throws Error(transport_timeout | transport_network).
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post(const std::string& url, const std::map<std::string, std::string>& headers,
                              const std::string& body, std::chrono::milliseconds timeout) = 0;
};

std::unique_ptr<HttpTransport> make_http_transport();

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds backoff{200};
};

struct ProviderConfig {
    std::string provider = "stub";  // stub | remote
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-4o-mini";
    std::string credential_env = "AMLRISK_LLM_API_KEY";
    RetryPolicy retry;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

EnvLookup process_env();

/// Chat-completions client. Construction fails with Error(invalid_argument)
/// naming the credential variable when it is unset.
class RemoteGenerator final : public TextGenerator {
public:
    RemoteGenerator(ProviderConfig config, std::shared_ptr<const PromptLibrary> prompts,
                    std::unique_ptr<HttpTransport> transport, const EnvLookup& env);

    std::string name() const override { return config_.model; }
    int last_attempts() const noexcept { return last_attempts_; }

    /// Sleep hook so tests can skip the backoff.
    std::function<void(std::chrono::milliseconds)> sleep;

protected:
    Completion do_complete(const GenerationRequest& request) override;

private:
    ProviderConfig config_;
    std::shared_ptr<const PromptLibrary> prompts_;
    std::unique_ptr<HttpTransport> transport_;
    std::string credential_;
    int last_attempts_ = 0;
};

std::unique_ptr<TextGenerator> make_generator(const ProviderConfig& config,
                                              std::shared_ptr<const PromptLibrary> prompts,
                                              const EnvLookup& env);

bool is_transport_error(ErrorCode code) noexcept;

}  // namespace amlrisk
