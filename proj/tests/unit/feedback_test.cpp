#include <brain/errors.hpp>
#include <brain/feedback.hpp>
#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "temp_dir.hpp"

namespace brain {
namespace {

BugReport report(std::string title, std::string description = "") {
    BugReport r;
    r.bug_id = "B-1";
    r.system = "s";
    r.version = "v";
    r.title = std::move(title);
    r.description = std::move(description);
    return r;
}

CodeSegment segment(std::string body, std::string doc_id = "doc") {
    CodeSegment s;
    s.doc_id = std::move(doc_id);
    s.kind = SegmentKind::method;
    s.name = "m";
    s.body_text = std::move(body);
    return s;
}

TEST(Prompt, ContainsTemplateAndSlots) {
    const Prompt p = build_prompt(report("Login fails", "LDAP realm ignored"), segment("void login() {}"), true);
    EXPECT_NE(p.system_text.find("Provide your output in JSON format"), std::string::npos);
    EXPECT_EQ(p.system_text, relevance_instructions());
    EXPECT_NE(p.user_text.find("Login fails\n\nLDAP realm ignored"), std::string::npos);
    EXPECT_NE(p.user_text.find("void login() {}"), std::string::npos);
    EXPECT_EQ(p.report_slot, "Login fails\n\nLDAP realm ignored");
}

TEST(Prompt, NoSystemRoleFoldsInstructionsIntoUserBlock) {
    const Prompt p = build_prompt(report("t"), segment("x()"), false);
    EXPECT_TRUE(p.system_text.empty());
    EXPECT_TRUE(p.user_text.starts_with(relevance_instructions()));
}

TEST(Prompt, Deterministic) {
    const Prompt a = build_prompt(report("t", "d"), segment("x()"), true);
    const Prompt b = build_prompt(report("t", "d"), segment("x()"), true);
    EXPECT_EQ(a.system_text, b.system_text);
    EXPECT_EQ(a.user_text, b.user_text);
}

TEST(Prompt, BudgetTruncatesOnlyTheCodeSlot) {
    const std::string code(5000, 'x');
    const Prompt p = build_prompt(report("title", "description"), segment(code), true, 2000);
    EXPECT_LE(p.system_text.size() + p.user_text.size(), 2000u);
    EXPECT_EQ(p.report_slot, "title\n\ndescription");
    EXPECT_LT(p.segment_slot.size(), code.size());
    EXPECT_THROW(build_prompt(report("t"), segment(""), true), ContractViolation);
}

TEST(MockOracle, SharedTokensDecide) {
    MockOracle oracle(3);
    const Prompt yes = build_prompt(report("ldap auth fails"), segment("if (ldapAuth.fails()) retry();"), true);
    EXPECT_EQ(oracle.complete(yes), R"({"relevance": "yes"})");
    const Prompt no = build_prompt(report("ldap auth fails"), segment("int sum(int a, int b) { return a + b; }"), true);
    EXPECT_EQ(oracle.complete(no), R"({"relevance": "no"})");
    const Prompt two = build_prompt(report("ldap auth fails"), segment("ldapAuth();"), true);
    EXPECT_EQ(oracle.complete(two), R"({"relevance": "no"})");
}

TEST(Verdict, Tiers) {
    auto v = parse_verdict(R"({"relevance": "yes"})");
    EXPECT_TRUE(v.relevant);
    EXPECT_EQ(v.source, VerdictSource::json);
    v = parse_verdict(R"({"relevance": "No"})");
    EXPECT_FALSE(v.relevant);
    EXPECT_EQ(v.source, VerdictSource::json);
    v = parse_verdict("Sure \xe2\x80\x94 relevance: no, the code is unrelated.");
    EXPECT_FALSE(v.relevant);
    EXPECT_EQ(v.source, VerdictSource::string_match);
    v = parse_verdict("```json\n{\"relevance\": \"yes\"}\n```");
    EXPECT_TRUE(v.relevant);
    v = parse_verdict("yesterday nothing; YES.");
    EXPECT_TRUE(v.relevant);
    EXPECT_EQ(v.source, VerdictSource::string_match);
    v = parse_verdict("");
    EXPECT_FALSE(v.relevant);
    EXPECT_EQ(v.source, VerdictSource::default_irrelevant);
    v = parse_verdict("maybe");
    EXPECT_EQ(v.source, VerdictSource::default_irrelevant);
    EXPECT_EQ(v.raw_response, "maybe");
}

TEST(Verdict, DocumentRelevanceIsOr) {
    auto make = [](bool r) {
        RelevanceVerdict v;
        v.relevant = r;
        return v;
    };
    EXPECT_TRUE(document_relevance(std::vector<RelevanceVerdict>{make(false), make(true), make(false)}));
    EXPECT_FALSE(document_relevance(std::vector<RelevanceVerdict>{make(false), make(false)}));
    EXPECT_FALSE(document_relevance(std::vector<RelevanceVerdict>{}));
}

TEST(Cache, RoundTripAndKeying) {
    test::TempDir dir;
    VerdictCache cache(dir.path() / "cache");
    const Prompt p = build_prompt(report("t"), segment("x()"), true);
    const std::string key = VerdictCache::key_for(p, "model-a");
    EXPECT_NE(key, VerdictCache::key_for(p, "model-b"));
    EXPECT_EQ(key.size(), 64u);
    EXPECT_FALSE(cache.get(key).has_value());
    RelevanceVerdict v = parse_verdict(R"({"relevance": "yes"})");
    cache.put(key, v);
    const auto back = cache.get(key);
    ASSERT_TRUE(back.has_value());
    EXPECT_TRUE(back->relevant);
    EXPECT_EQ(back->source, VerdictSource::json);
    EXPECT_EQ(back->raw_response, v.raw_response);
}

class CountingOracle : public RelevanceOracle {
  public:
    std::string complete(const Prompt& prompt) override {
        ++calls;
        if (prompt.segment_slot.find("boom") != std::string::npos) {
            throw OracleUnavailableError("down", "", 0);
        }
        return prompt.segment_slot.find("match") != std::string::npos ? "yes" : "no";
    }
    std::string model_name() const override { return "counting"; }
    std::atomic<int> calls{0};
};

TEST(Engine, VerdictsParallelToCandidates) {
    CountingOracle oracle;
    FeedbackEngine engine(oracle, FeedbackOptions{});
    std::vector<CandidateSegments> cands = {
        {"d1", {segment("a()", "d1"), segment("match()", "d1")}},
        {"d2", {segment("b()", "d2")}},
        {"d3", {}},
    };
    const auto result = engine.judge(report("t"), cands);
    ASSERT_EQ(result.verdicts.size(), 3u);
    EXPECT_EQ(result.verdicts[0].size(), 2u);
    EXPECT_EQ(result.verdicts[0][1].segment_ref.segment_index, 1u);
    EXPECT_EQ(result.verdicts[0][1].segment_ref.doc_id, "d1");
    EXPECT_EQ(result.relevant, (std::vector<bool>{true, false, false}));
    EXPECT_FALSE(result.degraded);
    EXPECT_EQ(engine.oracle_calls(), 3u);

    engine.judge(report("t"), cands);
    EXPECT_EQ(engine.oracle_calls(), 3u);
}

TEST(Engine, SegmentCapPerDocument) {
    CountingOracle oracle;
    FeedbackOptions options;
    options.max_segments_per_doc = 1;
    FeedbackEngine engine(oracle, options);
    std::vector<CandidateSegments> cands = {{"d1", {segment("a()", "d1"), segment("match()", "d1")}}};
    const auto result = engine.judge(report("t"), cands);
    EXPECT_EQ(result.verdicts[0].size(), 1u);
    EXPECT_FALSE(result.relevant[0]);
}

TEST(Engine, FailureAbortsUnlessBestEffort) {
    CountingOracle oracle;
    std::vector<CandidateSegments> cands = {{"d1", {segment("boom()", "d1"), segment("match()", "d1")}}};
    FeedbackEngine strict(oracle, FeedbackOptions{});
    try {
        strict.judge(report("t"), cands);
        FAIL() << "expected OracleUnavailableError";
    } catch (const OracleUnavailableError& e) {
        EXPECT_EQ(e.doc_id(), "d1");
        EXPECT_EQ(e.segment_index(), 0u);
    }
    FeedbackOptions lenient;
    lenient.best_effort = true;
    FeedbackEngine relaxed(oracle, lenient);
    const auto result = relaxed.judge(report("t"), cands);
    EXPECT_TRUE(result.degraded);
    EXPECT_TRUE(result.relevant[0]);
    EXPECT_EQ(result.verdicts[0][0].source, VerdictSource::default_irrelevant);
}

TEST(Engine, WarmDiskCacheSkipsOracle) {
    test::TempDir dir;
    auto cache = std::make_shared<VerdictCache>(dir.path());
    std::vector<CandidateSegments> cands = {{"d1", {segment("match()", "d1"), segment("x()", "d1")}}};
    CountingOracle first;
    FeedbackEngine a(first, FeedbackOptions{}, cache);
    a.judge(report("t"), cands);
    EXPECT_EQ(first.calls.load(), 2);
    CountingOracle second;
    FeedbackEngine b(second, FeedbackOptions{}, cache);
    const auto result = b.judge(report("t"), cands);
    EXPECT_EQ(second.calls.load(), 0);
    EXPECT_EQ(b.cache_hits(), 2u);
    EXPECT_TRUE(result.relevant[0]);
}

class FakeEndpoint {
  public:
    explicit FakeEndpoint(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
        server_.Post("/v1/chat/completions", [this, handler](const httplib::Request& req, httplib::Response& res) {
            ++hits;
            last_body = req.body;
            last_auth = req.get_header_value("Authorization");
            handler(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeEndpoint() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

    std::atomic<int> hits{0};
    std::string last_body;
    std::string last_auth;

  private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

OracleConfig http_config(const std::string& url) {
    OracleConfig c;
    c.mode = OracleMode::http;
    c.endpoint_url = url;
    c.model_name = "test-model";
    c.max_retries = 2;
    c.retry_backoff = std::chrono::milliseconds(1);
    c.request_timeout = std::chrono::milliseconds(2000);
    c.api_key_env = "BRAIN_TEST_ORACLE_KEY";
    return c;
}

TEST(HttpOracle, ParsesChatCompletion) {
    FakeEndpoint endpoint([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"{\"relevance\": \"yes\"}"}}]})",
                        "application/json");
    });
    ::setenv("BRAIN_TEST_ORACLE_KEY", "secret-key", 1);
    HttpOracle oracle(http_config(endpoint.url()));
    const Prompt p = build_prompt(report("t"), segment("x()"), true);
    const std::string text = oracle.complete(p);
    EXPECT_EQ(text, R"({"relevance": "yes"})");
    EXPECT_EQ(endpoint.last_auth, "Bearer secret-key");
    EXPECT_NE(endpoint.last_body.find("\"model\":\"test-model\""), std::string::npos);
    EXPECT_NE(endpoint.last_body.find("\"role\":\"system\""), std::string::npos);
    ::unsetenv("BRAIN_TEST_ORACLE_KEY");
}

TEST(HttpOracle, RetriesThenGivesUp) {
    FakeEndpoint endpoint([](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    HttpOracle oracle(http_config(endpoint.url()));
    EXPECT_THROW(oracle.complete(build_prompt(report("t"), segment("x()"), true)), OracleUnavailableError);
    EXPECT_EQ(endpoint.hits.load(), 3);
}

TEST(HttpOracle, AuthFailureIsImmediate) {
    FakeEndpoint endpoint([](const httplib::Request&, httplib::Response& res) { res.status = 401; });
    HttpOracle oracle(http_config(endpoint.url()));
    EXPECT_THROW(oracle.complete(build_prompt(report("t"), segment("x()"), true)), OracleAuthError);
    EXPECT_EQ(endpoint.hits.load(), 1);
}

TEST(HttpOracle, UnreachableEndpoint) {
    OracleConfig c = http_config("http://127.0.0.1:1/v1/chat/completions");
    c.max_retries = 0;
    HttpOracle oracle(c);
    EXPECT_THROW(oracle.complete(build_prompt(report("t"), segment("x()"), true)), OracleUnavailableError);
}

TEST(OracleConfig, Validation) {
    OracleConfig c;
    c.mode = OracleMode::http;
    EXPECT_THROW(c.validate(), ConfigError);
    c.endpoint_url = "ftp://x";
    EXPECT_THROW(HttpOracle{c}, ConfigError);
    OracleConfig mock;
    mock.mock_threshold = 0;
    EXPECT_THROW(mock.validate(), ConfigError);
}

}  // namespace
}  // namespace brain
