#include <doctest.h>

#include <httplib.h>

#include <json.hpp>
#include <mutex>
#include <thread>

#include "qacost/error.hpp"
#include "qacost/vqa_client.hpp"

using namespace qacost;
using namespace std::chrono_literals;

namespace {

const std::filesystem::path kMock = std::filesystem::path(QACOST_TEST_DATA) / "vqa_mock";

DetailedAnswer answer(std::string id, std::string raw) { return {std::move(id), parse_severity(raw)}; }

// Serves a scripted sequence of statuses, then the answer.
class ScriptedServer {
public:
    explicit ScriptedServer(std::vector<int> statuses, std::chrono::milliseconds delay = 0ms)
        : statuses_(std::move(statuses)) {
        server_.Post("/v1/ask", [this, delay](const httplib::Request& req, httplib::Response& res) {
            std::size_t n;
            {
                std::lock_guard lock(mu_);
                n = hits_++;
                bodies_.push_back(req.body);
            }
            if (delay > 0ms) std::this_thread::sleep_for(delay);
            const int status = n < statuses_.size() ? statuses_[n] : 200;
            res.status = status;
            if (status == 200)
                res.set_content(R"({"schema":"qacost.vqa.v1","answer":"Severity: 2"})", "application/json");
            else
                res.set_content("busy", "text/plain");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~ScriptedServer() {
        server_.stop();
        thread_.join();
    }

    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/ask"; }
    std::size_t hits() {
        std::lock_guard lock(mu_);
        return hits_;
    }
    std::string first_body() {
        std::lock_guard lock(mu_);
        return bodies_.front();
    }

private:
    httplib::Server server_;
    std::vector<int> statuses_;
    std::mutex mu_;
    std::size_t hits_ = 0;
    std::vector<std::string> bodies_;
    int port_ = 0;
    std::thread thread_;
};

struct RecordingSleeper {
    std::shared_ptr<std::vector<std::chrono::milliseconds>> delays = std::make_shared<std::vector<std::chrono::milliseconds>>();
    HttpVqaClient::Sleeper fn() {
        return [d = delays](std::chrono::milliseconds ms) { d->push_back(ms); };
    }
};

VqaRequest sample_request() {
    return {"img001", render_prompt("scale_mismatch", "lamp", "lighting"), ImageRef::from_uri("s3://bucket/img001.png")};
}

}  // namespace

TEST_CASE("mock client replays canned answers") {
    MockVqaClient mock;
    mock.add("scale_mismatch", "img9", "1");
    const auto r = query_detector(mock, render_prompt("scale_mismatch", "a", "b"), "img9", ImageRef::from_uri("u"));
    CHECK(r.parsed_severity == 1);
    try {
        query_detector(mock, render_prompt("scale_mismatch", "a", "b"), "other", ImageRef::from_uri("u"));
        FAIL("expected a miss");
    } catch (const EndpointError& e) {
        CHECK(e.status() == 404);
        CHECK(e.code() == ErrorCode::endpoint_error);
    }
    CHECK(mock.token_usage().calls == 1);
}

TEST_CASE("fixture replay for one image") {
    const auto mock = MockVqaClient::from_fixture_dir(kMock);
    CHECK(mock->size() == 26);
    const auto answers = query_catalog(*mock, "img001", ImageRef::from_uri("u"), "lamp", "lighting");
    REQUIRE(answers.size() == 13);
    const auto core = core_detailed_defects();
    for (std::size_t i = 0; i < 13; ++i) CHECK(answers[i].detailed_id == core[i]->id);
    CHECK(answers[6].response.parsed_severity == 3);
    CHECK(answers[11].response.parsed_severity == 1);

    const auto decisions = coarse_decision(answers);
    REQUIRE(decisions.size() == 6);
    const CoarseOutcome expected[] = {CoarseOutcome::pass, CoarseOutcome::flag, CoarseOutcome::flag,
                                      CoarseOutcome::pass, CoarseOutcome::pass, CoarseOutcome::pass};
    for (std::size_t i = 0; i < 6; ++i) CHECK(decisions[i].outcome == expected[i]);

    const auto usage = mock->token_usage();
    CHECK(usage.calls == 13);
    CHECK(usage.prompt_tokens > 13 * 100);
    CHECK(usage.cost_per_call(1.0, 0.0) == doctest::Approx(usage.prompt_tokens / 13.0 / 1000.0));

    CHECK_THROWS_AS(MockVqaClient::from_fixture_dir(kMock / "nope"), Error);
}

TEST_CASE("coarse aggregation") {
    const auto pass = coarse_decision({answer("surface_texture", "1"), answer("color_blending", "1"),
                                       answer("structural_distortion", "2")},
                                      3);
    REQUIRE(pass.size() == 1);
    CHECK(pass[0].outcome == CoarseOutcome::pass);
    CHECK(pass[0].severity == 2);

    const auto flag = coarse_decision({answer("objects_layout", "1"), answer("floating_objects", "3")}, 2);
    CHECK(flag[0].outcome == CoarseOutcome::flag);

    const auto unparseable = coarse_decision({answer("objects_distortion", "unsure")});
    CHECK(unparseable[0].outcome == CoarseOutcome::flag);
    CHECK_FALSE(unparseable[0].severity);
    const auto abstain = coarse_decision({answer("objects_distortion", "unsure")}, 2, UnparseablePolicy::abstain);
    CHECK(abstain[0].outcome == CoarseOutcome::abstain);

    // Unparseable answers are ignored when a sibling parsed.
    const auto mixed = coarse_decision({answer("scene_structural_distortion", "?"), answer("occlusion_discontinuity", "1")});
    CHECK(mixed[0].outcome == CoarseOutcome::pass);
    CHECK_THROWS_AS(coarse_decision({answer("sky", "1")}), Error);
}

TEST_CASE("request body schema") {
    VqaRequest req = sample_request();
    const auto j = nlohmann::json::parse(req.to_json());
    CHECK(j["schema"] == kVqaSchema);
    CHECK(j["defect_id"] == "scale_mismatch");
    CHECK(j["image_id"] == "img001");
    CHECK(j["system"] == std::string(kKnowledgeText));
    CHECK(j["image_ref"]["uri"] == "s3://bucket/img001.png");
    req.image = ImageRef::from_bytes("Man");
    CHECK(nlohmann::json::parse(req.to_json())["image_ref"]["bytes_base64"] == "TWFu");
    req.image = ImageRef::from_bytes("Ma");
    CHECK(nlohmann::json::parse(req.to_json())["image_ref"]["bytes_base64"] == "TWE=");
    req.image = ImageRef::from_bytes("M");
    CHECK(nlohmann::json::parse(req.to_json())["image_ref"]["bytes_base64"] == "TQ==");
}

TEST_CASE("retry policy") {
    const RetryPolicy p;
    CHECK(p.max_attempts == 3);
    CHECK(p.delay_after(1) == 500ms);
    CHECK(p.delay_after(2) == 1000ms);
    CHECK(is_retryable_status(429));
    CHECK(is_retryable_status(503));
    CHECK(is_retryable_status(408));
    CHECK_FALSE(is_retryable_status(400));
    CHECK_FALSE(is_retryable_status(404));
    CHECK_THROWS_AS(HttpVqaClient({"https://x/y", 1000ms, RetryPolicy{}}), Error);
    CHECK_THROWS_AS(HttpVqaClient({"http://:80/y", 1000ms, RetryPolicy{}}), Error);
    CHECK_THROWS_AS(HttpVqaClient({"http://h:99999/y", 1000ms, RetryPolicy{}}), Error);
}

TEST_CASE("http client retries transient failures with backoff") {
    ScriptedServer server({429, 503});
    RecordingSleeper sleeper;
    HttpVqaClient client({server.endpoint(), 2000ms, RetryPolicy{}}, sleeper.fn());
    const VqaRequest req = sample_request();
    CHECK(parse_severity(client.ask(req)).parsed_severity == 2);
    CHECK(server.hits() == 3);
    CHECK(*sleeper.delays == std::vector<std::chrono::milliseconds>{500ms, 1000ms});
    CHECK(nlohmann::json::parse(server.first_body())["question"] == req.prompt.question_text);
}

TEST_CASE("http client gives up after bounded attempts") {
    ScriptedServer server({503, 503, 503, 503});
    RecordingSleeper sleeper;
    HttpVqaClient client({server.endpoint(), 2000ms, RetryPolicy{}}, sleeper.fn());
    try {
        client.ask(sample_request());
        FAIL("expected EndpointError");
    } catch (const EndpointError& e) {
        CHECK(e.status() == 503);
    }
    CHECK(server.hits() == 3);
    CHECK(sleeper.delays->size() == 2);
}

TEST_CASE("http client does not retry a client error") {
    ScriptedServer server({400});
    RecordingSleeper sleeper;
    HttpVqaClient client({server.endpoint(), 2000ms, RetryPolicy{}}, sleeper.fn());
    try {
        client.ask(sample_request());
        FAIL("expected EndpointError");
    } catch (const EndpointError& e) {
        CHECK(e.status() == 400);
    }
    CHECK(server.hits() == 1);
    CHECK(sleeper.delays->empty());
}

TEST_CASE("http client timeout") {
    ScriptedServer server({}, 400ms);
    RecordingSleeper sleeper;
    HttpVqaClient client({server.endpoint(), 100ms, RetryPolicy{2, 500ms, 2.0}}, sleeper.fn());
    try {
        client.ask(sample_request());
        FAIL("expected timeout");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::timeout);
    }
    CHECK(server.hits() == 2);
    CHECK(*sleeper.delays == std::vector<std::chrono::milliseconds>{500ms});
}

TEST_CASE("unreachable endpoint") {
    RecordingSleeper sleeper;
    // Bind and release a port so nothing is listening on it.
    int port;
    {
        httplib::Server s;
        port = s.bind_to_any_port("127.0.0.1");
    }
    HttpVqaClient client({"http://127.0.0.1:" + std::to_string(port) + "/", 500ms, RetryPolicy{2, 1ms, 2.0}},
                         sleeper.fn());
    try {
        client.ask(sample_request());
        FAIL("expected failure");
    } catch (const EndpointError& e) {
        CHECK(e.status() == 0);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::timeout);
    }
}

TEST_CASE("malformed success body") {
    httplib::Server s;
    s.Post("/", [](const httplib::Request&, httplib::Response& res) { res.set_content("{}", "application/json"); });
    const int port = s.bind_to_any_port("127.0.0.1");
    std::thread t([&] { s.listen_after_bind(); });
    s.wait_until_ready();
    HttpVqaClient client({"http://127.0.0.1:" + std::to_string(port), 2000ms, RetryPolicy{}});
    CHECK_THROWS_AS(client.ask(sample_request()), EndpointError);
    s.stop();
    t.join();
}
