/*
    Copyright (C) 2026 by the SelfServ project contributors

    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#include "oracles/oracles.hpp"
#include "runner.hpp"

#include <selfserv/catalyst.hpp>
#include <selfserv/text.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

namespace fs = std::filesystem;
using namespace selfserv;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("selfserv_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path file(const std::string& name, std::string_view contents) {
        auto p = dir_ / name;
        text::write_file_atomic(p, contents);
        return p;
    }
    fs::path path(const std::string& name) const { return dir_ / name; }

    int run(std::vector<std::string> args) {
        args.insert(args.begin(), "selfserv");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        out_.str("");
        err_.str("");
        return cli::main_entry(static_cast<int>(argv.size()), argv.data(), out_, err_);
    }

    fs::path dir_;
    std::ostringstream out_;
    std::ostringstream err_;
};

std::string data(const std::string& rel) {
    return std::string(SELFSERV_DATA_DIR) + "/" + rel;
}

}  // namespace

TEST_F(Cli, CepOneAlert) {
    auto rules = file("r.rules", "rule hypo: when glucose < 70 severity high\n");
    auto log = file("a.log", "p1,0,glucose,65\n");
    ASSERT_EQ(run({"cep", "--rules", rules, "--log", log, "--out", path("o.csv")}), 0) << err_.str();
    EXPECT_EQ(text::read_file(path("o.csv")), "fire_time,patient_id,rule_name,severity,predicted_crossing_time\n"
                                              "0,p1,hypo,high\n");
}

TEST_F(Cli, CepEmptyLogIsHeaderOnly) {
    auto rules = file("r.rules", "rule hypo: when glucose < 70 severity high\n");
    auto log = file("a.log", "");
    ASSERT_EQ(run({"cep", "--rules", rules, "--log", log, "--out", path("o.csv")}), 0);
    EXPECT_EQ(text::read_file(path("o.csv")), "fire_time,patient_id,rule_name,severity,predicted_crossing_time\n");
}

TEST_F(Cli, CepIsDeterministicAcrossRuns) {
    std::mt19937_64 rng(5);
    std::string body;
    for (const auto& e : oracle::random_stream(rng, 3000)) body += format_event_line(e) + "\n";
    auto log = file("a.log", body);
    auto rules = file("r.rules", oracle::kTenRules);
    ASSERT_EQ(run({"cep", "--rules", rules, "--log", log, "--out", path("1.csv")}), 0) << err_.str();
    ASSERT_EQ(run({"cep", "--rules", rules, "--log", log, "--out", path("2.csv")}), 0);
    EXPECT_EQ(text::read_file(path("1.csv")), text::read_file(path("2.csv")));
    EXPECT_GT(text::split_lines(text::read_file(path("1.csv"))).size(), 10u);
}

TEST_F(Cli, CepRefractoryFlag) {
    auto rules = file("r.rules", "rule hypo: when glucose < 70 severity high\n");
    auto log = file("a.log", "p1,0,glucose,65\np1,60,glucose,64\n");
    ASSERT_EQ(run({"cep", "--rules", rules, "--log", log, "--out", path("o.csv"), "--refractory", "0"}), 0);
    EXPECT_EQ(text::split_lines(text::read_file(path("o.csv"))).size(), 3u);
}

TEST_F(Cli, CepReportsEveryBadLineAndWritesNothing) {
    auto rules = file("r.rules", "rule hypo: when glucose < 70 severity high\n");
    auto log = file("a.log", "p1,4,glucose,65\np1,5,glucoze,1\np1,3,glucose,2000\np1,2,glucose,80\n");
    auto out = path("o.csv");
    EXPECT_NE(run({"cep", "--rules", rules, "--log", log, "--out", out}), 0);
    EXPECT_FALSE(fs::exists(out));
    EXPECT_FALSE(fs::exists(out.string() + ".partial"));
    auto lines = text::split_lines(err_.str());
    ASSERT_EQ(lines.size(), 3u) << err_.str();  // unknown kind, out of range, out of order
    EXPECT_NE(lines[0].find("a.log:2:"), std::string::npos);
    EXPECT_NE(lines[1].find("a.log:3:"), std::string::npos);
    EXPECT_NE(lines[2].find("a.log:4:"), std::string::npos);
}

TEST_F(Cli, CepRuleErrorHasPosition) {
    auto rules = file("r.rules", "rule hypo: when glucose < 70 severity hgh\n");
    auto log = file("a.log", "p1,0,glucose,65\n");
    EXPECT_NE(run({"cep", "--rules", rules, "--log", log, "--out", path("o.csv")}), 0);
    EXPECT_NE(err_.str().find("r.rules:1:39:"), std::string::npos) << err_.str();
    EXPECT_FALSE(fs::exists(path("o.csv")));
}

TEST_F(Cli, FailureLeavesNoStaleOutput) {
    auto out = file("o.csv", "old contents\n");
    auto rules = file("r.rules", "rule hypo: when glucose < 70 severity high\n");
    auto log = file("a.log", "broken\n");
    EXPECT_NE(run({"cep", "--rules", rules, "--log", log, "--out", out}), 0);
    EXPECT_FALSE(fs::exists(out));
}

TEST_F(Cli, CatalystMaryAnn) {
    ASSERT_EQ(run({"catalyst", "--registry", data("catalyst/mary_ann.csv"), "--taxonomy",
                   data("catalyst/taxonomy.txt"), "--out", path("p.csv")}),
              0)
        << err_.str();
    auto csv = text::read_file(path("p.csv"));
    auto lines = text::split_lines(csv);
    ASSERT_EQ(lines.size(), 2u);
    EXPECT_EQ(lines[0], "partyA,partyB,provideA,requestB,degree1,provideB,requestA,degree2,score");
    EXPECT_EQ(lines[1], "ann,mary,ann_prov_chat,mary_req_chat,exact,mary_prov_walk,ann_req_walk,exact,2.0");
}

TEST_F(Cli, CatalystEmptyRegistry) {
    auto reg = file("r.csv", "entry_id,party_id,polarity,capability,window_start,window_end,x,y,max_travel\n");
    ASSERT_EQ(run({"catalyst", "--registry", reg, "--taxonomy", data("catalyst/taxonomy.txt"), "--out", path("p.csv")}), 0);
    EXPECT_EQ(text::read_file(path("p.csv")), "partyA,partyB,provideA,requestB,degree1,provideB,requestA,degree2,score\n");
}

TEST_F(Cli, CatalystUnknownCapabilityNamesLine) {
    auto reg = file("r.csv", "e1,a,provide,transport,0,10,0,0,1\ne2,b,request,gardening,0,10,0,0,1\n");
    EXPECT_NE(run({"catalyst", "--registry", reg, "--taxonomy", data("catalyst/taxonomy.txt"), "--out", path("p.csv")}), 0);
    EXPECT_NE(err_.str().find("line 2"), std::string::npos) << err_.str();
    EXPECT_FALSE(fs::exists(path("p.csv")));
}

TEST_F(Cli, CatalystRandomFixtureMatchesBruteForce) {
    std::mt19937_64 rng(2024);
    auto tax = catalyst::Taxonomy::care_default();
    auto entries = oracle::random_registry(rng, tax, 200, 40);
    std::string body(catalyst::registry_csv_header());
    body += "\n";
    for (const auto& e : entries) body += catalyst::format_registry_line(e) + "\n";
    auto reg = file("r.csv", body);
    ASSERT_EQ(run({"catalyst", "--registry", reg, "--taxonomy", data("catalyst/taxonomy.txt"), "--out", path("p.csv")}), 0);
    std::string expected(catalyst::proposal_csv_header());
    expected += "\n";
    for (const auto& p : oracle::brute_winwins(entries, tax)) expected += catalyst::format_proposal_line(p) + "\n";
    EXPECT_EQ(text::read_file(path("p.csv")), expected);
    EXPECT_GT(text::split_lines(expected).size(), 2u);
}

TEST_F(Cli, SimZeroTicks) {
    auto cfg = file("c.cfg", "ticks = 0\n");
    ASSERT_EQ(run({"sim", "--config", cfg, "--out", path("m.csv")}), 0) << err_.str();
    auto csv = text::read_file(path("m.csv"));
    EXPECT_EQ(text::split_lines(csv)[1], "traditional,1,0.0,0,0,0,0.0,0,0,0,0.0,0.0,0.0");
}

TEST_F(Cli, SimBadKeyIsNamed) {
    auto cfg = file("c.cfg", "ticks = 10\nn_doctors = 3\n");
    EXPECT_NE(run({"sim", "--config", cfg, "--out", path("m.csv")}), 0);
    EXPECT_NE(err_.str().find("n_doctors"), std::string::npos);
    EXPECT_FALSE(fs::exists(path("m.csv")));
    auto bad_value = file("d.cfg", "sensor_sensitivity = 1.2\n");
    EXPECT_NE(run({"sim", "--config", bad_value, "--out", path("m.csv")}), 0);
    EXPECT_NE(err_.str().find("sensor_sensitivity"), std::string::npos);
}

TEST_F(Cli, CompareNoVerifiersZeroDiff) {
    auto cfg = file("c.cfg", "ticks = 1500\nn_verifiers = 0\n");
    ASSERT_EQ(run({"compare", "--config", cfg, "--seeds", "1..3", "--out", path("c.csv"), "--threads", "2"}), 0)
        << err_.str();
    auto csv = text::read_file(path("c.csv"));
    auto lines = text::split_lines(csv);
    ASSERT_EQ(lines.size(), 13u);
    for (std::size_t i = 11; i < 13; ++i) {
        auto fields = text::split_fields(lines[i]);
        for (std::size_t f = 2; f < fields.size(); ++f) EXPECT_EQ(fields[f], "0.0") << lines[i];
    }
}

TEST_F(Cli, CompareSeedRangeValidation) {
    auto cfg = file("c.cfg", "ticks = 10\n");
    EXPECT_NE(run({"compare", "--config", cfg, "--seeds", "5..1", "--out", path("c.csv")}), 0);
    EXPECT_NE(run({"compare", "--config", cfg, "--seeds", "3..3", "--out", path("c.csv")}), 0);
    EXPECT_NE(run({"compare", "--config", cfg, "--seeds", "x", "--out", path("c.csv")}), 0);
    EXPECT_EQ(cli::parse_seed_range("2..4"), (std::vector<std::uint64_t>{2, 3, 4}));
    EXPECT_THROW(cli::parse_seed_range("..4"), std::invalid_argument);
}

TEST_F(Cli, UnknownFlagsAndMissingArgumentsAreErrors) {
    auto cfg = file("c.cfg", "ticks = 10\n");
    EXPECT_NE(run({"sim", "--config", cfg, "--out", path("m.csv"), "--verbose-ish"}), 0);
    EXPECT_NE(run({"sim", "--config", cfg}), 0);
    EXPECT_NE(run({"sim", "--config", path("missing.cfg").string(), "--out", path("m.csv")}), 0);
    EXPECT_NE(run({}), 0);
    EXPECT_NE(run({"teleport"}), 0);
}

TEST_F(Cli, HelpDocumentsEveryFlag) {
    EXPECT_EQ(run({"cep", "--help"}), 0);
    for (const char* flag : {"--rules", "--log", "--out", "--refractory"}) {
        EXPECT_NE(out_.str().find(flag), std::string::npos) << flag;
    }
    EXPECT_EQ(run({"compare", "--help"}), 0);
    for (const char* flag : {"--config", "--seeds", "--out", "--threads"}) {
        EXPECT_NE(out_.str().find(flag), std::string::npos) << flag;
    }
    EXPECT_EQ(run({"catalyst", "--help"}), 0);
    EXPECT_NE(out_.str().find("--taxonomy"), std::string::npos);
}
