#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ncqsm/cli.hpp"

using namespace ncqsm;
using cli::json;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run invoke(std::initializer_list<const char*> args)
{
    std::vector<const char*> argv{"ncqsm"};
    argv.insert(argv.end(), args.begin(), args.end());
    std::ostringstream out, err;
    Run r;
    r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::filesystem::path scratch(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / "ncqsm_test_cli";
    std::filesystem::create_directories(dir);
    const auto p = dir / name;
    std::filesystem::remove(p);
    return p;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

TEST(Cli, BcGibbsExample)
{
    const auto r = invoke({"bc", "gibbs", "--r", "1/2", "--beta", "2", "--N", "1000000"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = json::parse(r.out);
    EXPECT_EQ(doc["schema"], 1);
    EXPECT_EQ(doc["command"], "bc gibbs");
    EXPECT_NEAR(doc["result"]["value"].get<double>(), -0.5, 1e-5);
    EXPECT_GT(doc["result"]["tail_bound"].get<double>(), 0.0);
    EXPECT_TRUE(doc.contains("timestamp"));
}

TEST(Cli, GasRelationsExample)
{
    const auto r = invoke({"gas", "relations", "--N", "10000", "--max-gen", "30"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = json::parse(r.out);
    EXPECT_EQ(doc["result"]["failures"], 0);
    EXPECT_TRUE(doc["pass"].get<bool>());
}

TEST(Cli, IdenticalConfigGivesIdenticalReport)
{
    const auto a = invoke({"cantor", "zeta", "--s", "0.5,1,2"});
    const auto b = invoke({"cantor", "zeta", "--s", "0.5,1,2"});
    ASSERT_EQ(a.code, 0);
    auto da = json::parse(a.out);
    auto db = json::parse(b.out);
    da.erase("timestamp");
    db.erase("timestamp");
    EXPECT_EQ(da.dump(2), db.dump(2));
}

TEST(Cli, ExitCodes)
{
    EXPECT_EQ(invoke({"bc", "gibbs", "--bogus"}).code, 64);
    EXPECT_EQ(invoke({}).code, 64);
    EXPECT_EQ(invoke({"bc"}).code, 64);
    EXPECT_EQ(invoke({"bc", "gibbs", "--beta", "3,2"}).code, 64);
    EXPECT_EQ(invoke({"bc", "gibbs", "--N", "1.5"}).code, 64);
    EXPECT_EQ(invoke({"bc", "gibbs", "--r", "1/x"}).code, 64);
    EXPECT_EQ(invoke({"bc", "gibbs", "--beta", "1"}).code, 64);
    EXPECT_EQ(invoke({"arith", "series", "--N", "1e9"}).code, 3);
    EXPECT_EQ(invoke({"cantor", "grading", "--M", "2"}).code, 3);
    EXPECT_EQ(invoke({"--help"}).code, 0);

    const auto theta = invoke({"bc", "theta", "--N", "100000", "--beta", "0.5,1,2"});
    EXPECT_EQ(theta.code, 2);
    const auto doc = json::parse(theta.out);
    ASSERT_EQ(doc["failing"].size(), 1u);
    EXPECT_NE(doc["failing"][0].get<std::string>().find("beta=0.5"), std::string::npos);
    EXPECT_NE(theta.err.find("failing:"), std::string::npos);
}

TEST(Cli, CsvRowsAndAtomicWrite)
{
    const auto out = scratch("kms.json");
    const auto csv = scratch("kms.csv");
    const auto r = invoke({"boundary", "kms", "--out", out.c_str(), "--csv", csv.c_str()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    EXPECT_FALSE(std::filesystem::exists(out.string() + ".tmp"));
    const auto doc = json::parse(slurp(out));
    std::istringstream lines(slurp(csv));
    std::vector<std::string> rows;
    for (std::string line; std::getline(lines, line);)
        rows.push_back(line);
    ASSERT_EQ(rows.size(), doc["rows"].size() + 1);
    EXPECT_EQ(rows.front(), "beta,residual");
    EXPECT_EQ(doc["result"]["zeros"], 1);
}

TEST(Cli, CsvQuoting)
{
    const json rows = json::array({{{"a", "x,y"}, {"b", 1}}, {{"a", "say \"hi\""}, {"b", nullptr}}});
    EXPECT_EQ(cli::detail::to_csv(rows), "a,b\n\"x,y\",1\n\"say \"\"hi\"\"\",\n");
}

TEST(Cli, GoldenComparisonIgnoresTimestamp)
{
    const auto golden = scratch("golden.json");
    ASSERT_EQ(invoke({"boundary", "certificate", "--L", "2,3", "--out", golden.c_str()}).code, 0);
    auto doc = json::parse(slurp(golden));
    doc["timestamp"] = "1970-01-01T00:00:00Z";
    std::ofstream(golden) << doc.dump(2);
    const auto same = invoke({"boundary", "certificate", "--L", "2,3", "--golden", golden.c_str()});
    EXPECT_EQ(same.code, 0) << same.err;
    EXPECT_NE(same.err.find("golden match"), std::string::npos);
    const auto other = invoke({"boundary", "certificate", "--L", "2,4", "--golden", golden.c_str()});
    EXPECT_EQ(other.code, 2);
    EXPECT_NE(other.err.find("golden mismatch"), std::string::npos);
}

TEST(Cli, SuiteRunsSelectedCriteria)
{
    const auto r = invoke({"suite", "--criterion", "8,4", "--profile", "strict"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = json::parse(r.out);
    ASSERT_EQ(doc["result"]["criteria"].size(), 2u);
    EXPECT_EQ(doc["result"]["criteria"][0]["id"], 8);
    EXPECT_EQ(doc["config"]["profile"], "strict");
    EXPECT_EQ(invoke({"suite", "--criterion", "11"}).code, 64);
}

TEST(Acceptance, ThreadCountDoesNotChangeResults)
{
    const std::vector<int> ids{9, 4, 8};
    const auto one = acceptance::run_criteria(ids, acceptance::Profile::desk, 1);
    const auto three = acceptance::run_criteria(ids, acceptance::Profile::desk, 3);
    ASSERT_EQ(one.size(), 3u);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        EXPECT_EQ(one[i].id, ids[i]);
        EXPECT_EQ(three[i].id, ids[i]);
        ASSERT_EQ(one[i].checks.size(), three[i].checks.size());
        for (std::size_t c = 0; c < one[i].checks.size(); ++c) {
            EXPECT_EQ(one[i].checks[c].name, three[i].checks[c].name);
            EXPECT_EQ(one[i].checks[c].value, three[i].checks[c].value);
        }
    }
    EXPECT_THROW(acceptance::run_criteria({0}, acceptance::Profile::desk), domain_error);
}
