// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Each criterion pins its tolerances in src/verify.cpp.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "qws/verify.hpp"

namespace {

struct Criterion {
    int number;
    std::string title;
    std::function<std::vector<qws::CheckResult>()> run;
};

} // namespace

int main() {
    const std::uint64_t seed = 20240901;
    std::vector<Criterion> criteria = {
        {1, "hitting-time identity HT(s) = sin^4 theta(s) HT",
         [&] { return qws::acceptance_thm3_identity(seed); }},
        {2, "hitting-time derivative ODE",
         [&] { return qws::acceptance_ht_ode(seed); }},
        {3, "discriminant derivative closed form",
         [&] { return qws::acceptance_discriminant_derivative(seed); }},
        {4, "walk spectral decomposition vs dense operator",
         [&] { return qws::acceptance_lemma1(seed); }},
        {5, "interpolated-update simulation circuit",
         [&] { return qws::acceptance_simulation_circuit(seed); }},
        {6, "fixed-parameter search success at desk scale",
         [&] { return qws::acceptance_thm4_desk(seed); }},
        {7, "phase-estimation backend equivalence",
         [&] { return qws::acceptance_backend_equivalence(seed); }},
        {8, "balanced-overlap window", [&] { return qws::acceptance_fact4_window(); }},
        {9, "classical Monte Carlo baseline",
         [&] { return qws::acceptance_classical_baseline(seed); }},
        {10, "doubling-search cost statistics",
         [&] { return qws::acceptance_thm5_statistics(seed); }},
        {11, "2D-grid scaling bands", [&] { return qws::acceptance_grid_scaling(); }},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        auto start = std::chrono::steady_clock::now();
        bool pass = true;
        std::string detail;
        try {
            auto checks = criterion.run();
            for (const auto& check : checks) {
                pass = pass && check.pass;
                char buf[256];
                std::snprintf(buf, sizeof(buf), "%s%s=%.3g (tol %.3g)",
                              detail.empty() ? "" : ", ", check.quantity.c_str(), check.value,
                              check.tolerance);
                detail += buf;
            }
        } catch (const std::exception& err) {
            pass = false;
            detail = std::string("exception: ") + err.what();
        }
        auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
        if (!pass) ++failures;
        std::printf("criterion %2d %-4s [%6.2fs] %s -- %s\n", criterion.number,
                    pass ? "PASS" : "FAIL", elapsed.count(), criterion.title.c_str(),
                    detail.c_str());
        std::fflush(stdout);
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
