#include "iclh/model_client.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "iclh/errors.hpp"

namespace iclh::model_client {

using nlohmann::json;

const std::string kZeroShotFallbackSystemMessage =
    "If no previous examples, sample y from your prior distribution. But do not give "
    "any non numerical answer! Even if you are unsure, try to predict y as well as "
    "possible.";

void CompletionRequest::validate() const {
    if (temperature < 0.0 || temperature > 2.0)
        throw ContractError("CompletionRequest: temperature must be in [0, 2]");
    if (max_tokens < 1) throw ContractError("CompletionRequest: max_tokens must be >= 1");
}

void BackendConfig::validate() const {
    if (max_retries < 0) throw ContractError("BackendConfig: max_retries must be >= 0");
    if (timeout_s <= 0.0) throw ContractError("BackendConfig: timeout must be > 0");
    if (kind != BackendKind::scripted && base_url.empty())
        throw ConfigError("BackendConfig: base_url required for http backends");
}

namespace {

struct ParsedUrl {
    std::string host_part; // scheme://host:port
    std::string path_prefix;
};

ParsedUrl split_url(const std::string& url) {
    ParsedUrl out;
    auto scheme_end = url.find("://");
    std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = url.find('/', host_start);
    if (path_start == std::string::npos) {
        out.host_part = url;
    } else {
        out.host_part = url.substr(0, path_start);
        out.path_prefix = url.substr(path_start);
        while (!out.path_prefix.empty() && out.path_prefix.back() == '/')
            out.path_prefix.pop_back();
    }
    return out;
}

bool is_retryable_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

void emit_log(const LogSink& log, const json& entry) {
    if (log) log(entry.dump());
}

std::string http_request(const CompletionRequest& request, const BackendConfig& config,
                         bool chat, const LogSink& log) {
    request.validate();
    config.validate();

    json body;
    body["model"] = request.model_name;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    const char* endpoint;
    if (chat) {
        json messages = json::array();
        if (request.system_message)
            messages.push_back({{"role", "system"}, {"content", *request.system_message}});
        messages.push_back({{"role", "user"}, {"content", request.prompt}});
        body["messages"] = messages;
        endpoint = "/v1/chat/completions";
    } else {
        body["prompt"] = request.prompt;
        endpoint = "/v1/completions";
    }

    ParsedUrl url = split_url(config.base_url);
    std::string path = url.path_prefix + endpoint;

    std::mt19937_64 jitter_rng(std::random_device{}());
    std::uniform_real_distribution<double> jitter(0.0, 1.0);

    int attempts = 0;
    std::string last_error;
    while (attempts <= config.max_retries) {
        ++attempts;
        httplib::Client cli(url.host_part);
        cli.set_connection_timeout(std::chrono::milliseconds(
            static_cast<long long>(config.timeout_s * 1000.0)));
        cli.set_read_timeout(std::chrono::milliseconds(
            static_cast<long long>(config.timeout_s * 1000.0)));
        httplib::Headers headers;
        if (!config.api_key.empty())
            headers.emplace("Authorization", "Bearer " + config.api_key);

        auto res = cli.Post(path, headers, body.dump(), "application/json");

        double retry_after = -1.0;
        bool retryable;
        int status = 0;
        if (!res) {
            retryable = true; // connection failure / timeout
            last_error = "transport failure: " + httplib::to_string(res.error());
        } else {
            status = res->status;
            if (status == 200) {
                json reply;
                try {
                    reply = json::parse(res->body);
                } catch (const json::exception& e) {
                    throw ProtocolError(std::string("malformed response body: ") + e.what());
                }
                try {
                    const auto& choice = reply.at("choices").at(0);
                    std::string text = chat
                        ? choice.at("message").at("content").get<std::string>()
                        : choice.at("text").get<std::string>();
                    emit_log(log, {{"event", "response"},
                                   {"attempt", attempts},
                                   {"status", status},
                                   {"chars", text.size()}});
                    return text;
                } catch (const json::exception& e) {
                    throw ProtocolError(std::string("unexpected response schema: ") + e.what());
                }
            }
            retryable = is_retryable_status(status);
            last_error = "http status " + std::to_string(status);
            if (res->has_header("Retry-After")) {
                try {
                    retry_after = std::stod(res->get_header_value("Retry-After"));
                } catch (const std::exception&) {
                }
            }
        }

        emit_log(log, {{"event", retryable ? "retry" : "error"},
                       {"attempt", attempts},
                       {"status", status},
                       {"detail", last_error}});
        if (!retryable)
            throw TransportError("non-retryable failure: " + last_error);
        if (attempts > config.max_retries) break;
        double delay = retry_after >= 0.0
            ? retry_after
            : config.backoff_base_s * std::pow(2.0, attempts - 1) *
                  (0.5 + 0.5 * jitter(jitter_rng));
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
    throw TransportError("retries exhausted after " + std::to_string(attempts) +
                         " attempts: " + last_error);
}

} // namespace

std::string complete(const CompletionRequest& request, const BackendConfig& config,
                     const LogSink& log) {
    return http_request(request, config, config.kind == BackendKind::http_chat, log);
}

std::string chat_complete(const CompletionRequest& request, const BackendConfig& config,
                          const LogSink& log) {
    if (config.kind != BackendKind::http_chat)
        throw ContractError("chat_complete requires an http_chat backend");
    return http_request(request, config, true, log);
}

HttpModelClient::HttpModelClient(BackendConfig config, LogSink log)
    : config_(std::move(config)), log_(std::move(log)) {
    config_.validate();
}

std::string HttpModelClient::complete(const CompletionRequest& request) {
    return http_request(request, config_, config_.kind == BackendKind::http_chat, log_);
}

} // namespace iclh::model_client
