#include "qacost/vqa_client.hpp"

#include <httplib.h>

#include <cmath>
#include <json.hpp>
#include <thread>

#include "qacost/csv.hpp"
#include "qacost/error.hpp"

namespace qacost {

namespace {

std::string base64(std::string_view in) {
    static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((in.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= in.size(); i += 3) {
        const std::uint32_t v = (std::uint32_t(std::uint8_t(in[i])) << 16) |
                                (std::uint32_t(std::uint8_t(in[i + 1])) << 8) | std::uint8_t(in[i + 2]);
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += kAlphabet[(v >> 6) & 63];
        out += kAlphabet[v & 63];
    }
    if (const std::size_t rest = in.size() - i; rest > 0) {
        std::uint32_t v = std::uint32_t(std::uint8_t(in[i])) << 16;
        if (rest == 2) v |= std::uint32_t(std::uint8_t(in[i + 1])) << 8;
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

struct Attempt {
    enum class Kind { ok, timeout, failed } kind;
    int status = 0;
    std::string body;
    std::string detail;
};

}  // namespace

std::string VqaRequest::to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = kVqaSchema;
    j["defect_id"] = prompt.defect_id;
    j["image_id"] = image_id;
    j["system"] = prompt.knowledge_text;
    j["objective"] = prompt.objective_text;
    j["question"] = prompt.question_text;
    if (!image.uri.empty())
        j["image_ref"] = {{"uri", image.uri}};
    else
        j["image_ref"] = {{"bytes_base64", base64(image.bytes)}};
    return j.dump();
}

std::uint64_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

double TokenUsage::cost_per_call(double price_in_per_1k, double price_out_per_1k) const {
    if (calls == 0) return 0.0;
    const double total = static_cast<double>(prompt_tokens) / 1000.0 * price_in_per_1k +
                         static_cast<double>(response_tokens) / 1000.0 * price_out_per_1k;
    return total / static_cast<double>(calls);
}

std::string VqaClient::ask(const VqaRequest& request) {
    std::string answer = do_ask(request);
    calls_ += 1;
    prompt_tokens_ += estimate_tokens(request.prompt.knowledge_text) + estimate_tokens(request.prompt.objective_text) +
                      estimate_tokens(request.prompt.question_text);
    response_tokens_ += estimate_tokens(answer);
    return answer;
}

TokenUsage VqaClient::token_usage() const { return {calls_.load(), prompt_tokens_.load(), response_tokens_.load()}; }

void MockVqaClient::add(std::string defect_id, std::string image_id, std::string answer) {
    answers_[{std::move(defect_id), std::move(image_id)}] = std::move(answer);
}

std::unique_ptr<MockVqaClient> MockVqaClient::from_fixture_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec))
        throw Error(ErrorCode::io_error, "fixture directory '" + dir.string() + "' does not exist");
    auto client = std::make_unique<MockVqaClient>();
    for (const auto& image_dir : std::filesystem::directory_iterator(dir)) {
        if (!image_dir.is_directory()) continue;
        for (const auto& file : std::filesystem::directory_iterator(image_dir.path())) {
            if (file.path().extension() != ".txt") continue;
            std::string text = csv::read_file(file.path());
            if (!text.empty() && text.back() == '\n') text.pop_back();
            if (!text.empty() && text.back() == '\r') text.pop_back();
            client->add(file.path().stem().string(), image_dir.path().filename().string(), std::move(text));
        }
    }
    return client;
}

std::string MockVqaClient::do_ask(const VqaRequest& request) {
    const auto it = answers_.find({request.prompt.defect_id, request.image_id});
    if (it == answers_.end())
        throw EndpointError(404, "mock endpoint has no answer for defect '" + request.prompt.defect_id +
                                     "' on image '" + request.image_id + "'");
    return it->second;
}

std::chrono::milliseconds RetryPolicy::delay_after(int attempt) const {
    const double ms = static_cast<double>(base_delay.count()) * std::pow(factor, attempt - 1);
    return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(ms)));
}

bool is_retryable_status(int status) { return status == 408 || status == 429 || (status >= 500 && status <= 599); }

HttpVqaClient::HttpVqaClient(HttpClientConfig config, Sleeper sleeper)
    : config_(std::move(config)), sleeper_(std::move(sleeper)) {
    if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    if (config_.retry.max_attempts < 1) throw Error(ErrorCode::invalid_argument, "max_attempts must be >= 1");

    constexpr std::string_view kScheme = "http://";
    const std::string& uri = config_.endpoint;
    if (uri.rfind(kScheme, 0) != 0)
        throw Error(ErrorCode::invalid_argument, "endpoint '" + uri + "' must start with http://");
    const std::string rest = uri.substr(kScheme.size());
    const std::size_t slash = rest.find('/');
    const std::string authority = rest.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : rest.substr(slash);
    const std::size_t colon = authority.rfind(':');
    host_ = authority.substr(0, colon);
    if (colon != std::string::npos) {
        const long long port = csv::parse_integer(authority.substr(colon + 1), "endpoint port");
        if (port < 1 || port > 65535) throw Error(ErrorCode::invalid_argument, "endpoint port out of range");
        port_ = static_cast<int>(port);
    }
    if (host_.empty()) throw Error(ErrorCode::invalid_argument, "endpoint '" + uri + "' has no host");
}

std::string HttpVqaClient::do_ask(const VqaRequest& request) {
    const std::string body = request.to_json();
    const auto timeout_s = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - timeout_s);

    Attempt last{Attempt::Kind::failed, 0, {}, "no attempt made"};
    for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
        httplib::Client http(host_, port_);
        http.set_connection_timeout(timeout_s.count(), timeout_us.count());
        http.set_read_timeout(timeout_s.count(), timeout_us.count());
        http.set_write_timeout(timeout_s.count(), timeout_us.count());

        const auto res = http.Post(path_, body, "application/json");
        if (!res) {
            const auto err = res.error();
            const bool timed_out = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout;
            last = {timed_out ? Attempt::Kind::timeout : Attempt::Kind::failed, 0, {}, httplib::to_string(err)};
        } else if (res->status >= 200 && res->status < 300) {
            try {
                const auto j = nlohmann::json::parse(res->body);
                return j.at("answer").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                throw EndpointError(res->status, std::string("malformed endpoint response: ") + e.what());
            }
        } else {
            last = {Attempt::Kind::failed, res->status, res->body, "HTTP " + std::to_string(res->status)};
            if (!is_retryable_status(res->status)) break;
        }
        if (attempt < config_.retry.max_attempts) sleeper_(config_.retry.delay_after(attempt));
    }
    if (last.kind == Attempt::Kind::timeout)
        throw Error(ErrorCode::timeout, "VQA endpoint " + config_.endpoint + " timed out after " +
                                            std::to_string(config_.retry.max_attempts) + " attempt(s)");
    throw EndpointError(last.status, "VQA endpoint " + config_.endpoint + " failed: " + last.detail);
}

VqaResponse query_detector(VqaClient& client, const PromptBundle& bundle, const std::string& image_id,
                           const ImageRef& image) {
    return parse_severity(client.ask(VqaRequest{image_id, bundle, image}));
}

std::vector<DetailedAnswer> query_catalog(VqaClient& client, const std::string& image_id, const ImageRef& image,
                                          std::string_view object_class, std::string_view product_type,
                                          const std::vector<const DetailedDefect*>& defects) {
    std::vector<DetailedAnswer> out;
    out.reserve(defects.size());
    for (const DetailedDefect* d : defects) {
        const PromptBundle bundle = render_prompt(d->id, object_class, product_type);
        out.push_back({std::string(d->id), query_detector(client, bundle, image_id, image)});
    }
    return out;
}

std::string_view to_string(CoarseOutcome o) {
    switch (o) {
        case CoarseOutcome::pass: return "pass";
        case CoarseOutcome::flag: return "flag";
        case CoarseOutcome::abstain: return "abstain";
    }
    return "abstain";
}

std::vector<CoarseDecision> coarse_decision(const std::vector<DetailedAnswer>& answers, int threshold,
                                            UnparseablePolicy policy) {
    std::vector<CoarseDecision> out;
    for (const CoarseDefect& coarse : coarse_defects()) {
        bool any = false;
        std::optional<int> worst;
        for (const DetailedAnswer& a : answers) {
            const DetailedDefect* d = find_detailed(a.detailed_id);
            if (!d) throw Error(ErrorCode::unknown_defect, "unknown detailed defect '" + a.detailed_id + "'");
            if (d->coarse_id != coarse.id) continue;
            any = true;
            if (a.response.parsed_severity) worst = std::max(worst.value_or(1), *a.response.parsed_severity);
        }
        if (!any) continue;
        CoarseDecision decision{std::string(coarse.id), CoarseOutcome::abstain, worst};
        if (worst)
            decision.outcome = *worst >= threshold ? CoarseOutcome::flag : CoarseOutcome::pass;
        else
            decision.outcome = policy == UnparseablePolicy::flag ? CoarseOutcome::flag : CoarseOutcome::abstain;
        out.push_back(std::move(decision));
    }
    return out;
}

}  // namespace qacost
