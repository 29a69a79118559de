#pragma once

// Cost metrics over a (usually consolidated) circuit: total synthesis cost,
// cost-weighted critical path, and unweighted 2Q depth.

#include "circuit.hpp"
#include "isa.hpp"

#include <json.hpp>

namespace qroute {

struct CostReport {
    double c_count = 0.0;
    double c_depth = 0.0;
    int can_count = 0;
    int depth_2q = 0;
    int swap_count = 0;
};

inline nlohmann::json report_to_json(const CostReport& r) {
    return {{"c_count", r.c_count},
            {"c_depth", r.c_depth},
            {"can_count", r.can_count},
            {"depth_2q", r.depth_2q},
            {"swap_count", r.swap_count}};
}

/// 1Q and Measure nodes weigh zero; Swap nodes weigh isa.swap_cost; identity
/// canonical nodes are free and do not count toward can_count or depth.
inline CostReport cost_report(const CircuitDag& dag, const IsaSpec& isa) {
    CostReport rep;
    CostCache cache(isa);
    std::vector<double> wtime(dag.qubit_count, 0.0);
    std::vector<int> dtime(dag.qubit_count, 0);
    for (const auto& g : dag.nodes) {
        if (!g.is_two_qubit()) continue;
        double w;
        if (g.kind == GateKind::Swap) {
            ++rep.swap_count;
            w = isa.swap_cost;
        } else {
            w = cache.cost(g.coeffs);
        }
        if (g.kind == GateKind::Canonical && g.coeffs.is_identity()) continue;
        ++rep.can_count;
        rep.c_count += w;
        int q0 = g.qubits[0], q1 = g.qubits[1];
        double t = std::max(wtime[q0], wtime[q1]) + w;
        wtime[q0] = wtime[q1] = t;
        int d = std::max(dtime[q0], dtime[q1]) + 1;
        dtime[q0] = dtime[q1] = d;
    }
    for (int q = 0; q < dag.qubit_count; ++q) {
        rep.c_depth = std::max(rep.c_depth, wtime[q]);
        rep.depth_2q = std::max(rep.depth_2q, dtime[q]);
    }
    return rep;
}

} // namespace qroute
