#pragma once

// ISA specifications: basis gates with costs, coverage sets as unions of
// convex polytopes over canonical coefficients, and the synthesis-cost
// query used by routing and circuit metrics.

#include "canonical.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace qroute {

class UnknownIsaError : public std::runtime_error {
public:
    explicit UnknownIsaError(const std::string& name)
        : std::runtime_error("unknown ISA: " + name) {}
};

class NotCoveredError : public std::runtime_error {
public:
    NotCoveredError(const std::string& isa, const CanonicalCoeffs& k)
        : std::runtime_error("ISA " + isa + " does not cover (" + std::to_string(k.a) + ", " +
                             std::to_string(k.b) + ", " + std::to_string(k.c) +
                             "): malformed coverage data") {}
};

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

class IsaParseError : public std::runtime_error {
public:
    explicit IsaParseError(const std::string& what) : std::runtime_error(what) {}
};

struct BasisGate {
    std::string name;
    CanonicalCoeffs coeffs;
    double cost = 0.0;
};

struct HalfSpace {
    Eigen::Vector3d normal;
    double offset = 0.0;
};

inline constexpr double kMembershipTol = 1e-9;

/// Convex region {x : normal . x <= offset for all halfspaces}.
struct Polytope {
    std::vector<HalfSpace> halfspaces;

    bool contains(const CanonicalCoeffs& k, double tol = kMembershipTol) const {
        Eigen::Vector3d x(k.a, k.b, k.c);
        for (const auto& h : halfspaces)
            if (h.normal.dot(x) > h.offset + tol * std::max(1.0, h.normal.norm())) return false;
        return true;
    }
};

/// The normalized Weyl region 1/2 >= a >= b >= |c| as a convex polytope.
inline Polytope weyl_region() {
    return Polytope{{
        {{1, 0, 0}, 0.5},
        {{-1, 1, 0}, 0.0},
        {{0, -1, 1}, 0.0},
        {{0, -1, -1}, 0.0},
    }};
}

/// A single-point region {v}.
inline Polytope point_polytope(const CanonicalCoeffs& v) {
    Polytope p;
    const std::array<double, 3> vals{v.a, v.b, v.c};
    for (int axis = 0; axis < 3; ++axis) {
        Eigen::Vector3d n = Eigen::Vector3d::Zero();
        n(axis) = 1;
        p.halfspaces.push_back({n, vals[axis]});
        p.halfspaces.push_back({-n, -vals[axis]});
    }
    return p;
}

/// Axis-aligned box [lo, hi] intersected with the Weyl region.
inline Polytope box_polytope(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
    Polytope p = weyl_region();
    for (int axis = 0; axis < 3; ++axis) {
        Eigen::Vector3d n = Eigen::Vector3d::Zero();
        n(axis) = 1;
        p.halfspaces.push_back({n, hi(axis)});
        p.halfspaces.push_back({-n, -lo(axis)});
    }
    return p;
}

struct CoverageEntry {
    double cost = 0.0;
    std::vector<Polytope> region;  // membership is any-of

    bool contains(const CanonicalCoeffs& k, double tol = kMembershipTol) const {
        return std::any_of(region.begin(), region.end(),
                           [&](const Polytope& p) { return p.contains(k, tol); });
    }
};

struct IsaSpec {
    std::string name;
    std::vector<BasisGate> basis;
    std::vector<CoverageEntry> coverage;  // ascending by cost
    double swap_cost = 0.0;
};

/// Minimum coverage cost for synthesizing Can(coeffs); 0 for the identity.
inline double synth_cost(const IsaSpec& isa, const CanonicalCoeffs& coeffs) {
    if (coeffs.is_identity()) return 0.0;
    for (const auto& entry : isa.coverage)
        if (entry.contains(coeffs)) return entry.cost;
    throw NotCoveredError(isa.name, coeffs);
}

/// Per-trial synthesis-cost cache keyed on rounded coefficients.
class CostCache {
public:
    explicit CostCache(const IsaSpec& isa) : isa_(&isa) {}

    double cost(const CanonicalCoeffs& k) {
        uint64_t key = hash(k);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        double c = synth_cost(*isa_, k);
        cache_.emplace(key, c);
        return c;
    }

    const IsaSpec& isa() const { return *isa_; }

private:
    static uint64_t hash(const CanonicalCoeffs& k) {
        auto q = [](double v) {
            double s = v * 1e9;
            return static_cast<uint64_t>(static_cast<int64_t>(s < 0 ? s - 0.5 : s + 0.5) +
                                         (1ll << 40));
        };
        uint64_t h = q(k.a);
        h = h * 0x100000001b3ull ^ q(k.b);
        h = h * 0x100000001b3ull ^ q(k.c);
        return h;
    }
    const IsaSpec* isa_;
    std::unordered_map<uint64_t, double> cache_;
};

/// Checks all IsaSpec invariants; throws ValidationError naming the first
/// violated one. Universality is verified on a coefficient grid.
inline void validate_isa(const IsaSpec& isa, double grid = 0.05) {
    if (isa.coverage.empty()) throw ValidationError("universality: empty coverage");
    for (size_t i = 1; i < isa.coverage.size(); ++i)
        if (!(isa.coverage[i].cost > isa.coverage[i - 1].cost))
            throw ValidationError("coverage costs not strictly increasing");
    for (const auto& g : isa.basis) {
        if (!(g.cost > 0)) throw ValidationError("basis gate " + g.name + " has non-positive cost");
        if (!g.coeffs.is_identity()) {
            double c = synth_cost(isa, g.coeffs);
            if (c > g.cost + 1e-9)
                throw ValidationError("basis gate " + g.name +
                                      " not contained in a region of cost <= its own cost");
        }
    }
    // universality: every normalized grid point must be covered
    int steps = static_cast<int>(std::round(0.5 / grid));
    for (int ia = 0; ia <= steps; ++ia)
        for (int ib = 0; ib <= ia; ++ib)
            for (int ic = -ib; ic <= ib; ++ic) {
                CanonicalCoeffs k{ia * grid, ib * grid, ic * grid};
                if (std::abs(k.a - 0.5) < 1e-12 && k.c < 0) continue;
                if (k.is_identity()) continue;
                if (!isa.coverage.back().contains(k))
                    throw ValidationError("universality: (" + std::to_string(k.a) + ", " +
                                          std::to_string(k.b) + ", " + std::to_string(k.c) +
                                          ") not covered by the final entry");
            }
    // polytopes must stay inside the normalized Weyl region
    Polytope chamber = weyl_region();
    for (const auto& entry : isa.coverage)
        for (const auto& poly : entry.region)
            for (int ia = -steps; ia <= steps; ++ia)
                for (int ib = -steps; ib <= steps; ++ib)
                    for (int ic = -steps; ic <= steps; ++ic) {
                        CanonicalCoeffs k{ia * grid, ib * grid, ic * grid};
                        if (poly.contains(k, 1e-12) && !chamber.contains(k, 1e-9))
                            throw ValidationError("polytope extends outside the Weyl region");
                    }
}

// --- serialization ---------------------------------------------------------

inline nlohmann::json isa_to_json(const IsaSpec& isa) {
    nlohmann::json j;
    j["name"] = isa.name;
    j["basis"] = nlohmann::json::array();
    for (const auto& g : isa.basis)
        j["basis"].push_back(
            {{"name", g.name}, {"a", g.coeffs.a}, {"b", g.coeffs.b}, {"c", g.coeffs.c}, {"cost", g.cost}});
    j["coverage"] = nlohmann::json::array();
    for (const auto& e : isa.coverage) {
        nlohmann::json polys = nlohmann::json::array();
        for (const auto& p : e.region) {
            nlohmann::json hs = nlohmann::json::array();
            for (const auto& h : p.halfspaces)
                hs.push_back({{"normal", {h.normal(0), h.normal(1), h.normal(2)}}, {"offset", h.offset}});
            polys.push_back(hs);
        }
        j["coverage"].push_back({{"cost", e.cost}, {"polytopes", polys}});
    }
    return j;
}

inline IsaSpec isa_from_json(const nlohmann::json& j) {
    IsaSpec isa;
    try {
        isa.name = j.at("name").get<std::string>();
        for (const auto& g : j.at("basis")) {
            BasisGate bg;
            bg.name = g.at("name").get<std::string>();
            bg.coeffs = {g.at("a").get<double>(), g.at("b").get<double>(), g.at("c").get<double>()};
            bg.cost = g.at("cost").get<double>();
            isa.basis.push_back(bg);
        }
        for (const auto& e : j.at("coverage")) {
            CoverageEntry entry;
            entry.cost = e.at("cost").get<double>();
            for (const auto& pj : e.at("polytopes")) {
                Polytope p;
                for (const auto& hj : pj) {
                    HalfSpace h;
                    auto n = hj.at("normal");
                    h.normal = Eigen::Vector3d(n.at(0).get<double>(), n.at(1).get<double>(),
                                               n.at(2).get<double>());
                    h.offset = hj.at("offset").get<double>();
                    p.halfspaces.push_back(h);
                }
                entry.region.push_back(std::move(p));
            }
            isa.coverage.push_back(std::move(entry));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IsaParseError(std::string("malformed ISA document: ") + e.what());
    }
    std::sort(isa.coverage.begin(), isa.coverage.end(),
              [](const CoverageEntry& x, const CoverageEntry& y) { return x.cost < y.cost; });
    validate_isa(isa);
    isa.swap_cost = synth_cost(isa, {0.5, 0.5, 0.5});
    return isa;
}

inline void save_isa(const IsaSpec& isa, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IsaParseError("cannot open " + path + " for writing");
    out << isa_to_json(isa).dump(1) << "\n";
}

inline IsaSpec load_isa(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IsaParseError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IsaParseError(std::string("invalid JSON in ") + path + ": " + e.what());
    }
    return isa_from_json(j);
}

// --- builtin ISAs ----------------------------------------------------------

namespace detail {

inline BasisGate make_cx() { return {"CX", {0.5, 0, 0}, 1.0}; }
inline BasisGate make_sqisw() { return {"SQiSW", {0.25, 0.25, 0}, 0.75}; }
inline BasisGate make_iswap() { return {"iSWAP", {0.5, 0.5, 0}, 1.5}; }
// Mirror of SQiSW; note the coefficient triple follows the matrix oracle
// SWAP * Can(1/4,1/4,0) ~ Can(1/2,1/4,1/4) (see docs/coverage.md).
inline BasisGate make_ecp() { return {"ECP", {0.5, 0.25, 0.25}, 1.25}; }
inline BasisGate make_zz(int t) {
    // ZZ(pi/t) ~ Can(1/t, 0, 0), cost 2/t
    return {"ZZ(pi/" + std::to_string(t) + ")", {1.0 / t, 0, 0}, 2.0 / t};
}
inline BasisGate make_pswap(int t) {
    // pSWAP(pi/t) ~ Can(1/2, 1/2, 1/2 - 1/t), cost 2 - 1/t
    return {"pSWAP(pi/" + std::to_string(t) + ")", {0.5, 0.5, 0.5 - 1.0 / t}, 2.0 - 1.0 / t};
}

inline IsaSpec hardcoded_cx_isa() {
    IsaSpec isa;
    isa.name = "CX";
    isa.basis = {make_cx()};
    Polytope plane = weyl_region();
    plane.halfspaces.push_back({{0, 0, 1}, 0.0});
    plane.halfspaces.push_back({{0, 0, -1}, 0.0});
    isa.coverage = {
        {1.0, {point_polytope({0.5, 0, 0})}},
        {2.0, {plane}},
        {3.0, {weyl_region()}},
    };
    isa.swap_cost = 3.0;
    return isa;
}

inline IsaSpec hardcoded_sqisw_isa() {
    IsaSpec isa;
    isa.name = "SQiSW";
    isa.basis = {make_sqisw(), make_iswap()};
    Polytope tetra = weyl_region();  // two sqrt(iSWAP): a >= b + |c|
    tetra.halfspaces.push_back({{-1, 1, 1}, 0.0});
    tetra.halfspaces.push_back({{-1, 1, -1}, 0.0});
    isa.coverage = {
        {0.75, {point_polytope({0.25, 0.25, 0})}},
        {1.5, {tetra, point_polytope({0.5, 0.5, 0})}},
        {2.25, {weyl_region()}},
    };
    isa.swap_cost = 2.25;
    return isa;
}

inline std::string default_isa_data_dir() {
    if (const char* env = std::getenv("QROUTE_ISA_DIR")) return env;
#ifdef QROUTE_DATA_DIR
    return std::string(QROUTE_DATA_DIR) + "/data/isa";
#else
    return "data/isa";
#endif
}

} // namespace detail

/// Basis gate list for each of the six builtin ISA names.
inline std::vector<BasisGate> builtin_basis(const std::string& name) {
    using namespace detail;
    if (name == "CX") return {make_cx()};
    if (name == "ZZPhase") return {make_zz(6), make_zz(4), make_zz(2)};
    if (name == "SQiSW") return {make_sqisw(), make_iswap()};
    if (name == "ZZPhase_")
        return {make_zz(6), make_zz(4), make_zz(2), make_pswap(6), make_pswap(4), make_pswap(2)};
    if (name == "SQiSW_") return {make_sqisw(), make_iswap(), make_ecp(), make_cx()};
    if (name == "Het") return {make_zz(6), make_zz(4), make_zz(2), make_sqisw(), make_iswap()};
    throw UnknownIsaError(name);
}

/// CX and SQiSW are hard-coded; the other four load bundled coverage files
/// (searched in `data_dir`, then $QROUTE_ISA_DIR).
inline IsaSpec builtin_isa(const std::string& name, std::string data_dir = "") {
    if (name == "CX") return detail::hardcoded_cx_isa();
    if (name == "SQiSW") return detail::hardcoded_sqisw_isa();
    if (name != "ZZPhase" && name != "ZZPhase_" && name != "SQiSW_" && name != "Het")
        throw UnknownIsaError(name);
    if (data_dir.empty()) data_dir = detail::default_isa_data_dir();
    return load_isa(data_dir + "/" + name + ".json");
}

inline const std::vector<std::string>& builtin_isa_names() {
    static const std::vector<std::string> names{"CX",       "ZZPhase", "SQiSW",
                                                "ZZPhase_", "SQiSW_",  "Het"};
    return names;
}

} // namespace qroute
