// Regenerates the bundled coverage files for the ISAs whose polytopes are
// derived numerically rather than hard-coded. Usage:
//   gen_isa_data <output-dir> [name...]

#include <qroute/coverage_derive.hpp>

#include <chrono>
#include <cstdio>

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <output-dir> [name...]\n", argv[0]);
        return 2;
    }
    std::string out_dir = argv[1];
    std::vector<std::string> names;
    for (int i = 2; i < argc; ++i) names.push_back(argv[i]);
    if (names.empty()) names = {"ZZPhase", "ZZPhase_", "SQiSW_", "Het"};

    qroute::DeriveOptions opts;
    for (const auto& name : names) {
        auto t0 = std::chrono::steady_clock::now();
        std::printf("deriving %s...\n", name.c_str());
        std::fflush(stdout);
        try {
            qroute::IsaSpec isa =
                qroute::derive_isa(name, qroute::builtin_basis(name), 3.0, 0.025, opts);
            qroute::validate_isa(isa);
            qroute::save_isa(isa, out_dir + "/" + name + ".json");
            double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            size_t polys = 0;
            for (const auto& e : isa.coverage) polys += e.region.size();
            std::printf("%s: %zu cost levels, %zu polytopes, swap_cost=%.6f (%.1fs)\n",
                        name.c_str(), isa.coverage.size(), polys, isa.swap_cost, secs);
        } catch (const std::exception& e) {
            std::printf("%s FAILED: %s\n", name.c_str(), e.what());
            return 1;
        }
        std::fflush(stdout);
    }
    return 0;
}
