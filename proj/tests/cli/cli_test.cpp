#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "reference.hpp"
#include "temp_dir.hpp"

#ifndef BRAIN_CLI_PATH
#error "BRAIN_CLI_PATH must be defined"
#endif

namespace {

namespace fs = std::filesystem;
using brain::test::TempDir;

struct Result {
    int status = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

class Cli : public ::testing::Test {
  protected:
    Result run(const std::string& args, const std::string& env = "") {
        const fs::path out = tmp_.path() / "stdout.txt";
        const fs::path err = tmp_.path() / "stderr.txt";
        const std::string cmd = env + " " + quote(BRAIN_CLI_PATH) + " " + args + " >" + quote(out.string()) + " 2>" +
                                quote(err.string());
        const int raw = std::system(cmd.c_str());
        Result r;
        r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    std::string index_dir() const { return (tmp_.path() / "index").string(); }
    std::string common() const {
        return "--corpus-root " + quote(brain::ref::fixture_corpus().string()) + " --index-dir " + quote(index_dir());
    }
    std::string dataset() const { return quote(brain::ref::fixture_dataset().string()); }

    void build_index() { ASSERT_EQ(run("index " + common()).status, 0); }

    TempDir tmp_;
};

TEST_F(Cli, IndexReportsCountAndIsByteStable) {
    Result r = run("index " + common());
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(r.out, "indexed 20 documents for authsvc/1.0\n");
    const fs::path snap = fs::path(index_dir()) / "authsvc" / "1.0.brainidx";
    const std::string first = slurp(snap);
    ASSERT_FALSE(first.empty());
    ASSERT_EQ(run("index " + common()).status, 0);
    EXPECT_EQ(slurp(snap), first);
}

TEST_F(Cli, MissingCorpusRootFails) {
    Result r = run("index --corpus-root /nonexistent/brain --index-dir " + quote(index_dir()));
    EXPECT_EQ(r.status, 3);
    EXPECT_FALSE(r.err.empty());
    EXPECT_TRUE(r.out.empty());
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run("").status, 2);
    EXPECT_EQ(run("localize --mode fastest --bug X --dataset " + dataset()).status, 2);
    EXPECT_EQ(run("--help").status, 0);
}

TEST_F(Cli, LocalizePlantedBug) {
    build_index();
    Result full = run("localize " + common() + " --dataset " + dataset() + " --bug AUTH-103");
    ASSERT_EQ(full.status, 0) << full.err;
    const auto doc = nlohmann::json::parse(full.out);
    EXPECT_EQ(doc.at("results").at(0).at("path"), "src/main/java/com/authsvc/media/AvatarPipeline.java");

    Result base = run("localize " + common() + " --dataset " + dataset() + " --bug AUTH-103 --mode baseline_vsm");
    ASSERT_EQ(base.status, 0);
    const auto b = nlohmann::json::parse(base.out);
    std::size_t rank = 0;
    for (std::size_t i = 0; i < b.at("results").size(); ++i) {
        if (b["results"][i]["path"] == "src/main/java/com/authsvc/media/AvatarPipeline.java") rank = i + 1;
    }
    EXPECT_GT(rank, 1u);
}

TEST_F(Cli, LocalizeKOneExplainAndGraphDump) {
    build_index();
    Result r = run("localize " + common() + " --dataset " + dataset() + " --bug AUTH-101 --k 1");
    ASSERT_EQ(r.status, 0);
    EXPECT_EQ(nlohmann::json::parse(r.out).at("results").size(), 1u);

    const fs::path graphs = tmp_.path() / "graphs";
    r = run("localize " + common() + " --dataset " + dataset() + " --bug AUTH-101 --explain --dump-graph " +
            quote(graphs.string()));
    ASSERT_EQ(r.status, 0);
    const auto doc = nlohmann::json::parse(r.out);
    EXPECT_FALSE(doc.at("explain").at("expansion_terms").empty());
    EXPECT_TRUE(fs::exists(graphs / "AUTH-101.full.graph.json"));
}

TEST_F(Cli, LocalizeInlineReport) {
    build_index();
    Result r = run("localize " + common() +
                " --system authsvc --version 1.0 --title 'Webhook retry sends stale signature' --description 'payload'");
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(nlohmann::json::parse(r.out).at("results").at(0).at("path"),
              "src/main/java/com/authsvc/notify/OutboundDispatcher.java");
}

TEST_F(Cli, LocalizeErrorCodes) {
    build_index();
    EXPECT_EQ(run("localize " + common() + " --dataset " + dataset() + " --bug NOPE-1").status, 5);
    EXPECT_EQ(run("localize " + common() + " --system authsvc --version 2.0 --title 'x y z'").status, 4);
}

TEST_F(Cli, EvaluateWritesReportsAndIsDeterministic) {
    build_index();
    const fs::path a = tmp_.path() / "a", b = tmp_.path() / "b";
    Result r1 = run("evaluate " + common() + " --dataset " + dataset() + " --modes full,baseline_vsm --jobs 1 --out " +
                 quote(a.string()));
    ASSERT_EQ(r1.status, 0) << r1.err;
    Result r8 = run("evaluate " + common() + " --dataset " + dataset() + " --modes full,baseline_vsm --jobs 8 --out " +
                 quote(b.string()));
    ASSERT_EQ(r8.status, 0);
    for (const char* name : {"eval_report.json", "eval_summary.csv", "eval_per_bug.csv"}) {
        EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
    }
    EXPECT_EQ(r1.out, r8.out);
    const std::string summary = slurp(a / "eval_summary.csv");
    EXPECT_NE(summary.find("full,all,5,1.000000,1.000000"), std::string::npos);
    EXPECT_NE(summary.find("baseline_vsm,all,5,"), std::string::npos);
}

TEST_F(Cli, EvaluatePartialExit) {
    build_index();
    const fs::path data = tmp_.write("partial.jsonl",
                                     slurp(brain::ref::fixture_dataset()) +
                                         R"({"bug_id":"AUTH-999","system":"authsvc","version":"2.0","title":"ledger","fixed_files":["a.java"]})"
                                         "\n");
    Result r = run("evaluate " + common() + " --dataset " + quote(data.string()) + " --modes baseline_vsm --out " +
                quote((tmp_.path() / "p").string()));
    EXPECT_EQ(r.status, 8);
    EXPECT_NE(r.out.find("errors 1"), std::string::npos);
}

TEST_F(Cli, WarmCacheIssuesNoOracleCalls) {
    build_index();
    const std::string cache = " --cache-dir " + quote((tmp_.path() / "cache").string());
    Result cold = run("evaluate " + common() + cache + " --dataset " + dataset() + " --modes full --out " +
                   quote((tmp_.path() / "c1").string()));
    ASSERT_EQ(cold.status, 0);
    EXPECT_EQ(cold.err.find("oracle calls: 0,"), std::string::npos);
    Result warm = run("evaluate " + common() + cache + " --dataset " + dataset() + " --modes full --out " +
                   quote((tmp_.path() / "c2").string()));
    ASSERT_EQ(warm.status, 0);
    EXPECT_NE(warm.err.find("oracle calls: 0,"), std::string::npos) << warm.err;
    EXPECT_EQ(slurp(tmp_.path() / "c1" / "eval_report.json"), slurp(tmp_.path() / "c2" / "eval_report.json"));
}

TEST_F(Cli, ConfigFileAndOverrides) {
    build_index();
    const fs::path conf = tmp_.write("brain.json", nlohmann::json{{"index_dir", index_dir()},
                                                                  {"ranking.result_k", 3},
                                                                  {"ranking.mode", "baseline_vsm"}}
                                                       .dump());
    Result r = run("localize --config " + quote(conf.string()) + " --dataset " + dataset() + " --bug AUTH-102");
    ASSERT_EQ(r.status, 0) << r.err;
    auto doc = nlohmann::json::parse(r.out);
    EXPECT_EQ(doc.at("mode"), "baseline_vsm");
    EXPECT_EQ(doc.at("results").size(), 3u);
    r = run("localize --config " + quote(conf.string()) + " --set ranking.result_k=2 --mode full --dataset " + dataset() +
            " --bug AUTH-102");
    ASSERT_EQ(r.status, 0);
    doc = nlohmann::json::parse(r.out);
    EXPECT_EQ(doc.at("mode"), "full");
    EXPECT_EQ(doc.at("results").size(), 2u);
    EXPECT_EQ(run("localize --config " + quote(conf.string()) + " --set nope=1 --dataset " + dataset() + " --bug AUTH-102")
                  .status,
              2);
}

TEST_F(Cli, OracleCheckMock) {
    Result r = run("oracle-check");
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_NE(r.out.find("verdict: "), std::string::npos);
    EXPECT_NE(r.out.find("model: mock"), std::string::npos);
}

class Endpoint {
  public:
    explicit Endpoint(int status, std::string body = "") {
        server_.Post("/v1/chat/completions", [status, body](const httplib::Request&, httplib::Response& res) {
            res.status = status;
            if (!body.empty()) res.set_content(body, "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~Endpoint() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

  private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

TEST_F(Cli, OracleCheckHttp) {
    Endpoint healthy(200, R"({"choices":[{"message":{"content":"{\"relevance\": \"no\"}"}}]})");
    Result ok = run("oracle-check --set oracle.mode=http --set oracle.endpoint_url=" + healthy.url(),
                 "BRAIN_ORACLE_API_KEY=k");
    ASSERT_EQ(ok.status, 0) << ok.err;
    EXPECT_NE(ok.out.find("verdict: no"), std::string::npos);
    EXPECT_NE(ok.out.find("source: json"), std::string::npos);

    Endpoint denied(401);
    Result auth = run("oracle-check --set oracle.mode=http --set oracle.endpoint_url=" + denied.url(),
                   "BRAIN_ORACLE_API_KEY=bad");
    EXPECT_EQ(auth.status, 7);

    Result down = run("oracle-check --set oracle.mode=http --set oracle.max_retries=0 "
                   "--set oracle.endpoint_url=http://127.0.0.1:1/v1/chat/completions");
    EXPECT_EQ(down.status, 6);
}

}  // namespace
