#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tokshap {

enum class BackendKind { openai_compatible, ollama, mock };

struct BackendConfig {
    BackendKind kind = BackendKind::mock;

    // Mock backends, all deterministic:
    //   echo              response = prompt
    //   constant          response = constant_text regardless of input
    //   drop-stoplist     response = prompt with stoplist words removed
    //   sorted-signature  response = sorted unique whitespace units, joined
    std::string mock_name = "echo";
    std::string constant_text;
    std::vector<std::string> stoplist;

    std::string base_url;  // HTTP kinds; scheme://host[:port][/prefix]
    std::string model_name;
    std::string api_key;   // empty -> TOKSHAP_API_KEY env var, if set
    double temperature = 0.0;
    int timeout_ms = 30000;
    int max_retries = 2;
    int backoff_ms = 250;  // first retry delay; doubles per attempt
    int max_concurrency = 4;
    std::string cache_dir;  // empty disables the response cache

    // Parses a backend spec string:
    //   "mock:echo" | "mock:constant:<text>" | "mock:drop-stoplist[:w1,w2,...]"
    //   | "mock:sorted-signature" | "openai-compatible" | "ollama"
    // drop-stoplist without an explicit list uses the bundled injection pool.
    static BackendConfig from_spec(const std::string& spec);

    // Stable identifier recorded in run metadata and used in cache keys.
    std::string id() const;
};

struct ModelResponse {
    std::string prompt;
    std::string text;
    bool from_cache = false;
    std::int64_t latency_ms = 0;
};

// One entry of complete_batch: either a response or a positional error.
struct BatchItem {
    std::optional<ModelResponse> response;
    std::string error_kind;
    std::string error_message;

    bool ok() const { return response.has_value(); }
};

class BackendClient {
public:
    explicit BackendClient(BackendConfig config);
    ~BackendClient();

    BackendClient(const BackendClient&) = delete;
    BackendClient& operator=(const BackendClient&) = delete;

    const BackendConfig& config() const;

    // Cache-first completion. Throws BackendUnreachableError,
    // BackendRejectedError or MalformedResponseError.
    ModelResponse complete(const std::string& prompt);

    // Order-preserving batch. Duplicate prompts hit the upstream at most
    // once; a failing item is reported at its index and does not abort the
    // remaining items. Calls run concurrently up to max_concurrency.
    std::vector<BatchItem> complete_batch(const std::vector<std::string>& prompts);

    // Number of completions that reached the transport or mock evaluator,
    // i.e. were not served from cache.
    std::uint64_t upstream_calls() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace tokshap
