#include "tokshap/model_backend.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <openssl/evp.h>

#include <httplib.h>
#include <json.hpp>

#include "tokshap/assets.hpp"
#include "tokshap/errors.hpp"

namespace tokshap {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    EVP_Digest(data.data(), data.size(), digest, &digest_len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(digest_len * 2);
    for (unsigned int i = 0; i < digest_len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string kind_name(BackendKind kind) {
    switch (kind) {
        case BackendKind::openai_compatible: return "openai-compatible";
        case BackendKind::ollama: return "ollama";
        case BackendKind::mock: return "mock";
    }
    return "unknown";
}

std::vector<std::string> whitespace_units(const std::string& text) {
    std::vector<std::string> units;
    std::istringstream in(text);
    std::string unit;
    while (in >> unit) units.push_back(unit);
    return units;
}

std::string join_units(const std::vector<std::string>& units) {
    std::string out;
    for (const auto& u : units) {
        if (!out.empty()) out += ' ';
        out += u;
    }
    return out;
}

std::string format_temperature(double t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", t);
    return buf;
}

// Splits base_url into the origin httplib connects to and a path prefix that
// is prepended to endpoint paths.
void split_base_url(const std::string& base_url, std::string& origin, std::string& prefix) {
    const auto scheme_end = base_url.find("://");
    const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = base_url.find('/', host_start);
    if (path_start == std::string::npos) {
        origin = base_url;
        prefix.clear();
    } else {
        origin = base_url.substr(0, path_start);
        prefix = base_url.substr(path_start);
        while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    }
}

std::string body_excerpt(const std::string& body) {
    constexpr std::size_t kMax = 200;
    if (body.size() <= kMax) return body;
    return body.substr(0, kMax) + "...";
}

}  // namespace

BackendConfig BackendConfig::from_spec(const std::string& spec) {
    BackendConfig config;
    if (spec == "openai-compatible") {
        config.kind = BackendKind::openai_compatible;
        return config;
    }
    if (spec == "ollama") {
        config.kind = BackendKind::ollama;
        return config;
    }
    if (spec.starts_with("mock:")) {
        config.kind = BackendKind::mock;
        std::string rest = spec.substr(5);
        if (rest == "echo" || rest == "sorted-signature") {
            config.mock_name = rest;
            return config;
        }
        if (rest.starts_with("constant:")) {
            config.mock_name = "constant";
            config.constant_text = rest.substr(9);
            return config;
        }
        if (rest == "constant") {
            config.mock_name = "constant";
            return config;
        }
        if (rest == "drop-stoplist" || rest.starts_with("drop-stoplist:")) {
            config.mock_name = "drop-stoplist";
            if (rest.size() > 14) {
                std::stringstream in(rest.substr(14));
                std::string word;
                while (std::getline(in, word, ',')) {
                    if (!word.empty()) config.stoplist.push_back(word);
                }
            }
            if (config.stoplist.empty()) config.stoplist = default_word_pool();
            return config;
        }
        throw Error("ConfigError", "unknown mock backend: " + spec);
    }
    throw Error("ConfigError", "unknown backend spec: " + spec);
}

std::string BackendConfig::id() const {
    if (kind == BackendKind::mock) return "mock:" + mock_name;
    return kind_name(kind) + ":" + base_url + ":" + model_name;
}

struct BackendClient::Impl {
    BackendConfig config;
    std::atomic<std::uint64_t> upstream_calls{0};

    explicit Impl(BackendConfig cfg) : config(std::move(cfg)) {
        if (config.temperature < 0.0) {
            throw Error("ConfigError", "temperature must be >= 0");
        }
        if (config.max_concurrency < 1) {
            throw Error("ConfigError", "max_concurrency must be >= 1");
        }
        if (config.kind == BackendKind::mock && config.mock_name == "drop-stoplist" &&
            config.stoplist.empty()) {
            config.stoplist = default_word_pool();
        }
    }

    std::string cache_key(const std::string& prompt) const {
        const std::string material = kind_name(config.kind) + '\n' + config.base_url + '\n' +
                                     config.model_name + '\n' +
                                     format_temperature(config.temperature) + '\n' + prompt;
        return sha256_hex(material);
    }

    fs::path cache_path(const std::string& key) const {
        return fs::path(config.cache_dir) / (key + ".json");
    }

    std::optional<std::string> cache_lookup(const std::string& prompt) const {
        if (config.cache_dir.empty()) return std::nullopt;
        const fs::path path = cache_path(cache_key(prompt));
        std::ifstream in(path, std::ios::binary);
        if (!in) return std::nullopt;
        try {
            json doc = json::parse(in);
            if (!doc.contains("text") || !doc["text"].is_string()) return std::nullopt;
            return doc["text"].get<std::string>();
        } catch (const json::exception&) {
            return std::nullopt;  // corrupt entry, treat as miss
        }
    }

    void cache_store(const std::string& prompt, const std::string& text) const {
        if (config.cache_dir.empty()) return;
        std::error_code ec;
        fs::create_directories(config.cache_dir, ec);
        const std::string key = cache_key(prompt);
        const fs::path final_path = cache_path(key);
        // Write-to-temp-then-rename keeps concurrent writers safe; values are
        // deterministic per key, so last-writer-wins is harmless.
        const fs::path tmp_path =
            final_path.parent_path() /
            (key + ".tmp." + std::to_string(static_cast<unsigned long>(::getpid())) + "." +
             std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()) & 0xFFFF));
        json doc{{"kind", kind_name(config.kind)},
                 {"base_url", config.base_url},
                 {"model", config.model_name},
                 {"temperature", config.temperature},
                 {"prompt", prompt},
                 {"text", text}};
        {
            std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
            if (!out) return;  // cache is best-effort
            out << doc.dump();
        }
        fs::rename(tmp_path, final_path, ec);
        if (ec) fs::remove(tmp_path, ec);
    }

    std::string evaluate_mock(const std::string& prompt) const {
        if (config.mock_name == "echo") return prompt;
        if (config.mock_name == "constant") return config.constant_text;
        if (config.mock_name == "drop-stoplist") {
            std::vector<std::string> kept;
            for (auto& unit : whitespace_units(prompt)) {
                if (std::find(config.stoplist.begin(), config.stoplist.end(), unit) ==
                    config.stoplist.end()) {
                    kept.push_back(std::move(unit));
                }
            }
            return join_units(kept);
        }
        if (config.mock_name == "sorted-signature") {
            auto units = whitespace_units(prompt);
            std::set<std::string> unique(units.begin(), units.end());
            return join_units({unique.begin(), unique.end()});
        }
        throw Error("ConfigError", "unknown mock backend: " + config.mock_name);
    }

    std::string http_request(const std::string& prompt) const {
        std::string origin, prefix;
        split_base_url(config.base_url, origin, prefix);
        if (origin.empty()) {
            throw BackendUnreachableError("no base_url configured for HTTP backend");
        }

        std::string path;
        json body;
        if (config.kind == BackendKind::openai_compatible) {
            path = prefix + "/v1/chat/completions";
            body = {{"model", config.model_name},
                    {"temperature", config.temperature},
                    {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
        } else {
            path = prefix + "/api/generate";
            body = {{"model", config.model_name}, {"prompt", prompt}, {"stream", false}};
        }

        httplib::Client client(origin);
        client.set_connection_timeout(0, config.timeout_ms * 1000LL);
        client.set_read_timeout(config.timeout_ms / 1000, (config.timeout_ms % 1000) * 1000);
        client.set_write_timeout(config.timeout_ms / 1000, (config.timeout_ms % 1000) * 1000);

        httplib::Headers headers;
        std::string key = config.api_key;
        if (key.empty()) {
            if (const char* env = std::getenv("TOKSHAP_API_KEY")) key = env;
        }
        if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);

        const std::string payload = body.dump();
        std::string last_error;
        int delay_ms = config.backoff_ms;
        for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
                delay_ms *= 2;
            }
            auto res = client.Post(path, headers, payload, "application/json");
            if (!res) {
                last_error = httplib::to_string(res.error());
                continue;  // transport error, retry
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status);
                if (attempt == config.max_retries) {
                    throw BackendRejectedError(res->status, body_excerpt(res->body));
                }
                continue;
            }
            if (res->status < 200 || res->status >= 300) {
                throw BackendRejectedError(res->status, body_excerpt(res->body));
            }
            return parse_http_body(res->body);
        }
        throw BackendUnreachableError("backend " + origin + " unreachable after " +
                                      std::to_string(config.max_retries + 1) +
                                      " attempts: " + last_error);
    }

    std::string parse_http_body(const std::string& raw) const {
        json doc;
        try {
            doc = json::parse(raw);
        } catch (const json::exception& e) {
            throw MalformedResponseError(std::string("response is not JSON: ") + e.what());
        }
        try {
            if (config.kind == BackendKind::openai_compatible) {
                const auto& choices = doc.at("choices");
                if (!choices.is_array() || choices.empty()) {
                    throw MalformedResponseError("response has no choices");
                }
                const auto& content = choices[0].at("message").at("content");
                return content.is_null() ? std::string{} : content.get<std::string>();
            }
            return doc.at("response").get<std::string>();
        } catch (const json::exception& e) {
            throw MalformedResponseError(std::string("unexpected response shape: ") + e.what());
        }
    }

    ModelResponse complete_one(const std::string& prompt) {
        const auto started = std::chrono::steady_clock::now();
        if (auto cached = cache_lookup(prompt)) {
            return {prompt, *cached, true, 0};
        }

        upstream_calls.fetch_add(1, std::memory_order_relaxed);
        std::string text;
        if (config.kind == BackendKind::mock) {
            text = evaluate_mock(prompt);
        } else {
            text = http_request(prompt);
        }
        cache_store(prompt, text);

        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - started)
                                 .count();
        return {prompt, std::move(text), false, elapsed};
    }
};

BackendClient::BackendClient(BackendConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

BackendClient::~BackendClient() = default;

const BackendConfig& BackendClient::config() const {
    return impl_->config;
}

std::uint64_t BackendClient::upstream_calls() const {
    return impl_->upstream_calls.load(std::memory_order_relaxed);
}

ModelResponse BackendClient::complete(const std::string& prompt) {
    if (prompt.empty()) throw Error("EmptyPrompt", "cannot complete an empty prompt");
    return impl_->complete_one(prompt);
}

std::vector<BatchItem> BackendClient::complete_batch(const std::vector<std::string>& prompts) {
    // Resolve each distinct prompt once; duplicates share the result.
    std::vector<std::string> distinct;
    std::unordered_map<std::string, std::size_t> slot_of;
    distinct.reserve(prompts.size());
    for (const auto& prompt : prompts) {
        if (slot_of.emplace(prompt, distinct.size()).second) distinct.push_back(prompt);
    }

    std::vector<BatchItem> resolved(distinct.size());
    const auto worker_body = [&](std::size_t i) {
        try {
            resolved[i].response = complete(distinct[i]);
        } catch (const Error& e) {
            resolved[i].error_kind = e.kind();
            resolved[i].error_message = e.what();
        } catch (const std::exception& e) {
            resolved[i].error_kind = "BackendUnreachable";
            resolved[i].error_message = e.what();
        }
    };

    const int workers = std::min<int>(std::max(1, impl_->config.max_concurrency),
                                      static_cast<int>(distinct.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < distinct.size(); ++i) worker_body(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
                    if (i >= distinct.size()) return;
                    worker_body(i);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    std::vector<BatchItem> out;
    out.reserve(prompts.size());
    std::vector<bool> first_use(distinct.size(), true);
    for (const auto& prompt : prompts) {
        const std::size_t slot = slot_of[prompt];
        BatchItem item = resolved[slot];
        if (item.ok() && !first_use[slot]) item.response->from_cache = true;
        first_use[slot] = false;
        out.push_back(std::move(item));
    }
    return out;
}

}  // namespace tokshap
