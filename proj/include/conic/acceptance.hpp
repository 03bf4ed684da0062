#pragma once
// Acceptance suite: thirteen pinned checks, one PASS/FAIL line each.

#include <functional>
#include <string>
#include <vector>

namespace conic {

struct AcceptanceLine {
    int id = 0;
    std::string title;
    bool pass = false;
    std::string detail;     ///< measured values against their pinned bounds
    double seconds = 0;
    double budget = 0;      ///< runtime budget in seconds (0 = none)
};

struct AcceptanceOptions {
    std::vector<int> only;  ///< empty = all thirteen
    std::string work_dir;   ///< scratch space for the determinism runs; empty = temp dir
};

std::vector<AcceptanceLine> run_acceptance(const AcceptanceOptions& opt,
                                           const std::function<void(const AcceptanceLine&)>& on_line = {});

/// "PASS  4  flat-plane oracle  ...  (12.3 s / 120 s)"
std::string format_line(const AcceptanceLine& l);

}  // namespace conic
