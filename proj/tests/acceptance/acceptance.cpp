// Acceptance suite: one PASS/FAIL line per criterion; exit 0 iff all pass.
// Usage: acceptance [id ...]

#include <cstdlib>
#include <iostream>

#include "conic/acceptance.hpp"

int main(int argc, char** argv) {
    conic::AcceptanceOptions opt;
    for (int i = 1; i < argc; ++i) opt.only.push_back(std::atoi(argv[i]));
    const auto lines = conic::run_acceptance(opt, [](const conic::AcceptanceLine& l) {
        std::cout << conic::format_line(l) << std::endl;
    });
    int failed = 0;
    for (const auto& l : lines) failed += !l.pass;
    std::cout << lines.size() - failed << "/" << lines.size() << " criteria pass" << std::endl;
    return failed == 0 ? 0 : 1;
}
