#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace iclh::model_client {

enum class BackendKind { http_completions, http_chat, scripted };

struct CompletionRequest {
    std::string prompt;
    double temperature = 0.0;
    int max_tokens = 16;
    std::string model_name;
    // When set (chat backends), sent as the leading system message.
    std::optional<std::string> system_message;

    void validate() const;
};

struct BackendConfig {
    BackendKind kind = BackendKind::scripted;
    std::string base_url;
    std::string api_key;
    double timeout_s = 30.0;
    int max_retries = 3;
    double backoff_base_s = 0.5;

    void validate() const;
};

// System message used on first-trial chat queries when the zero-shot
// fallback is enabled.
extern const std::string kZeroShotFallbackSystemMessage;

class ModelClient {
  public:
    virtual ~ModelClient() = default;
    virtual std::string complete(const CompletionRequest& request) = 0;
};

using LogSink = std::function<void(const std::string& json_line)>;

// Completion-protocol request with retry/backoff on transient failures.
std::string complete(const CompletionRequest& request, const BackendConfig& config,
                     const LogSink& log = nullptr);

// Chat-protocol request; honors request.system_message.
std::string chat_complete(const CompletionRequest& request, const BackendConfig& config,
                          const LogSink& log = nullptr);

class HttpModelClient : public ModelClient {
  public:
    HttpModelClient(BackendConfig config, LogSink log = nullptr);
    std::string complete(const CompletionRequest& request) override;

  private:
    BackendConfig config_;
    LogSink log_;
};

} // namespace iclh::model_client
