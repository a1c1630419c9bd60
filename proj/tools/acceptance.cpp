#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ncqsm/acceptance.hpp"

using namespace ncqsm::acceptance;

int main(int argc, char** argv)
{
    CLI::App app{"Run the ncqsm acceptance criteria"};
    std::vector<int> ids;
    std::string profile = "desk";
    bool verbose = false;
    app.add_option("--criterion,-c", ids, "criterion ids (default: all)")->check(CLI::Range(1, criterion_count));
    app.add_option("--profile", profile, "tolerance profile")->check(CLI::IsMember({"desk", "strict"}));
    app.add_flag("--verbose,-v", verbose, "print every check");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 64;
    }
    if (ids.empty())
        for (int k = 1; k <= criterion_count; ++k)
            ids.push_back(k);

    unsigned threads = 1;
    if (const char* env = std::getenv("NCQSM_THREADS"))
        threads = static_cast<unsigned>(std::max(1, std::atoi(env)));

    bool all = true;
    for (const auto& r : run_criteria(ids, parse_profile(profile), threads)) {
        all = all && r.pass();
        std::printf("%s criterion %d: %s (%.1fs)\n", r.pass() ? "PASS" : "FAIL", r.id, r.title.c_str(), r.seconds);
        if (!r.error.empty())
            std::printf("    error: %s\n", r.error.c_str());
        for (const auto& c : r.checks)
            if (verbose || !c.pass)
                std::printf("    %s %s: %.6g %s %.6g\n", c.pass ? "ok  " : "FAIL", c.name.c_str(), c.value,
                            c.relation.c_str(), c.bound);
    }
    return all ? 0 : 2;
}
