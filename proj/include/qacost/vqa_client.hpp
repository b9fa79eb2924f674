#pragma once

// VQA detector adapters: severity parsing, the endpoint client contract, a
// fixture-replaying mock, an HTTP client with bounded exponential backoff, and
// aggregation of detailed answers into coarse pass/flag decisions.
//
// Wire schema "qacost.vqa.v1" (JSON over HTTP POST):
//   request  {"schema", "defect_id", "image_id", "system", "objective",
//             "question", "image_ref": {"uri": ...} | {"bytes_base64": ...}}
//   response {"schema", "answer"}

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qacost/taxonomy.hpp"

namespace qacost {

inline constexpr const char* kVqaSchema = "qacost.vqa.v1";

struct VqaResponse {
    std::string raw_text;
    std::optional<int> parsed_severity;  // 1..3 when parsing succeeded
};

/// Total: never throws. The first standalone integer in {1,2,3} wins; the
/// phrases "no defect", "some defect", "significant defect" are a fallback.
VqaResponse parse_severity(std::string_view raw_text);

/// Opaque image reference: either a URI or raw bytes.
struct ImageRef {
    std::string uri;
    std::string bytes;

    static ImageRef from_uri(std::string u) { return {std::move(u), {}}; }
    static ImageRef from_bytes(std::string b) { return {{}, std::move(b)}; }
};

struct VqaRequest {
    std::string image_id;
    PromptBundle prompt;
    ImageRef image;

    std::string to_json() const;
};

/// Rough token estimate (4 characters per token) for c_aqa calibration.
std::uint64_t estimate_tokens(std::string_view text);

struct TokenUsage {
    std::uint64_t calls = 0;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t response_tokens = 0;

    /// Average cost per call under per-1000-token prices.
    double cost_per_call(double price_in_per_1k, double price_out_per_1k) const;
};

/// Endpoint contract. Implementations are safe to share between threads.
class VqaClient {
public:
    virtual ~VqaClient() = default;

    /// Returns the raw answer text. Throws Error(timeout) or EndpointError.
    std::string ask(const VqaRequest& request);

    TokenUsage token_usage() const;

protected:
    virtual std::string do_ask(const VqaRequest& request) = 0;

private:
    std::atomic<std::uint64_t> calls_{0};
    std::atomic<std::uint64_t> prompt_tokens_{0};
    std::atomic<std::uint64_t> response_tokens_{0};
};

/// Replays canned answers keyed by (defect_id, image_id). A miss is
/// EndpointError(404).
class MockVqaClient : public VqaClient {
public:
    MockVqaClient() = default;

    void add(std::string defect_id, std::string image_id, std::string answer);

    /// Loads `<dir>/<image_id>/<defect_id>.txt`; one trailing newline is dropped.
    static std::unique_ptr<MockVqaClient> from_fixture_dir(const std::filesystem::path& dir);

    std::size_t size() const { return answers_.size(); }

protected:
    std::string do_ask(const VqaRequest& request) override;

private:
    std::map<std::pair<std::string, std::string>, std::string> answers_;
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{500};
    double factor = 2.0;

    /// Delay after failed attempt number `attempt` (1-based).
    std::chrono::milliseconds delay_after(int attempt) const;
};

/// Transient failures worth another attempt: 408, 429 and 5xx.
bool is_retryable_status(int status);

struct HttpClientConfig {
    std::string endpoint;  // http://host[:port]/path
    std::chrono::milliseconds timeout{30'000};
    RetryPolicy retry;
};

class HttpVqaClient : public VqaClient {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    /// Throws Error(invalid_argument) for a malformed or non-http endpoint.
    explicit HttpVqaClient(HttpClientConfig config, Sleeper sleeper = {});

    const HttpClientConfig& config() const { return config_; }

protected:
    std::string do_ask(const VqaRequest& request) override;

private:
    HttpClientConfig config_;
    Sleeper sleeper_;
    std::string host_;
    int port_ = 80;
    std::string path_;
};

/// Sends one prompt for one image and parses the answer.
VqaResponse query_detector(VqaClient& client, const PromptBundle& bundle, const std::string& image_id,
                           const ImageRef& image);

struct DetailedAnswer {
    std::string detailed_id;
    VqaResponse response;
};

/// Queries every listed detailed defect (default: the 13 core ones) in
/// catalog order.
std::vector<DetailedAnswer> query_catalog(VqaClient& client, const std::string& image_id, const ImageRef& image,
                                          std::string_view object_class, std::string_view product_type,
                                          const std::vector<const DetailedDefect*>& defects = core_detailed_defects());

enum class CoarseOutcome { pass, flag, abstain };
enum class UnparseablePolicy { flag, abstain };

std::string_view to_string(CoarseOutcome o);

struct CoarseDecision {
    std::string coarse_id;
    CoarseOutcome outcome = CoarseOutcome::abstain;
    std::optional<int> severity;  // max over parseable detailed answers
};

inline constexpr int kDefaultFlagThreshold = 2;

/// Coarse severity is the max of its detailed severities; flag iff >= threshold.
/// Coarse defects without any parseable answer follow `policy`. One decision
/// per coarse defect that has answers, in catalog order.
std::vector<CoarseDecision> coarse_decision(const std::vector<DetailedAnswer>& answers,
                                            int threshold = kDefaultFlagThreshold,
                                            UnparseablePolicy policy = UnparseablePolicy::flag);

}  // namespace qacost
