// One line per acceptance criterion. Exit status is nonzero when any
// criterion fails or overruns its runtime budget.
//   acceptance [--quick] [--only N[,N...]] [--json PATH]

#include <cstdio>
#include <cstring>
#include <set>
#include <string>

#include "vnl/criteria.hpp"

int main(int argc, char** argv) {
    vnl::CriterionOptions opt;
    std::set<int> only;
    std::string json_out;
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--quick")) opt.quick = true;
        else if (!std::strcmp(argv[i], "--only") && i + 1 < argc) {
            std::string s = argv[++i];
            for (std::size_t p = 0; p < s.size();) {
                const auto q = s.find(',', p);
                only.insert(std::stoi(s.substr(p, q - p)));
                p = q == std::string::npos ? s.size() : q + 1;
            }
        } else if (!std::strcmp(argv[i], "--json") && i + 1 < argc) json_out = argv[++i];
        else {
            std::fprintf(stderr, "usage: %s [--quick] [--only N,..] [--json PATH]\n", argv[0]);
            return 2;
        }
    }
    int failed = 0;
    vnl::json all = vnl::json::array();
    for (const auto& e : vnl::criteria()) {
        if (!only.empty() && !only.count(e.id)) continue;
        vnl::CriterionResult r;
        try {
            r = vnl::run_timed(e, opt);
        } catch (const std::exception& ex) {
            std::printf("criterion %2d %-10s ERROR %s\n", e.id, e.suite.c_str(), ex.what());
            std::fflush(stdout);
            ++failed;
            continue;
        }
        const bool ok = r.pass && r.within_budget();
        failed += !ok;
        std::printf("criterion %2d %-10s %s  %6.1fs/%4.0fs  %s\n", r.id, r.suite.c_str(), ok ? "PASS" : "FAIL", r.runtime,
                    r.budget, r.title.c_str());
        std::fflush(stdout);
        auto j = r.deterministic_json();
        j["runtime_s"] = r.runtime;
        all.push_back(j);
        if (!ok) std::printf("    metrics: %s\n    tolerances: %s\n", r.metrics.dump().c_str(), r.tolerances.dump().c_str());
    }
    if (!json_out.empty()) vnl::write_json(json_out, all);
    return failed ? 1 : 0;
}
