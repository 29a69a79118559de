#pragma once

// 2Q-block consolidation: maximal runs of two-qubit gates on one pair,
// together with 1Q gates interleaved on either wire, collapse into a single
// canonical node with exact local dressings. Blocks whose canonical part is
// identity (all |coeffs| <= 1e-8) are dropped; their locals stay as 1Q gates.
// Barriers fence consolidation and are not present in the output.

#include "circuit.hpp"

#include <map>
#include <memory>

namespace qroute {

namespace consolidate_detail {

struct Block {
    int q0 = -1, q1 = -1;  // q0 = low tensor bit
    Matrix4 m = Matrix4::Identity();
};

inline bool is_identity_1q(const Matrix2& m) {
    Complex tr = m.trace();
    if (std::abs(tr) < 1e-12) return false;
    return (m * std::abs(tr) / tr - Matrix2::Identity()).norm() < 1e-12;
}

} // namespace consolidate_detail

inline CircuitDag consolidate_2q_blocks(const CircuitDag& dag) {
    using consolidate_detail::Block;
    CircuitDag out;
    out.qubit_count = dag.qubit_count;
    out.cbit_count = dag.cbit_count;

    std::vector<Matrix2> pending(dag.qubit_count, Matrix2::Identity());
    std::map<int, std::shared_ptr<Block>> open;  // qubit -> its open block

    auto flush_pending = [&](int q) {
        if (!consolidate_detail::is_identity_1q(pending[q]))
            out.add(one_qubit_gate(q, pending[q]));
        pending[q] = Matrix2::Identity();
    };

    auto close_block = [&](int q) {
        auto it = open.find(q);
        if (it == open.end()) return;
        Block blk = *it->second;
        open.erase(blk.q0);
        open.erase(blk.q1);
        KakFactors f = kak_decompose(blk.m);
        if (f.coeffs.approx_equal({0, 0, 0}, 1e-8)) {
            // trivial 2Q content: keep only the merged locals
            pending[blk.q0] = pending[blk.q0] * f.after_1 * f.before_1;
            pending[blk.q1] = pending[blk.q1] * f.after_0 * f.before_0;
        } else {
            out.add(canonical_gate(blk.q0, blk.q1, f.coeffs, f));
        }
    };

    for (const auto& g : dag.nodes) {
        switch (g.kind) {
            case GateKind::OneQubit:
                pending[g.qubits[0]] = g.matrix * pending[g.qubits[0]];
                break;
            case GateKind::Barrier:
                for (int q : g.qubits) {
                    close_block(q);
                    flush_pending(q);
                }
                break;
            case GateKind::Measure:
                close_block(g.qubits[0]);
                flush_pending(g.qubits[0]);
                out.add(g);
                break;
            case GateKind::Canonical:
            case GateKind::Swap: {
                int a = g.qubits[0], b = g.qubits[1];
                Matrix4 m = node_matrix(g);
                auto ita = open.find(a);
                bool same_pair = ita != open.end() &&
                                 ((ita->second->q0 == a && ita->second->q1 == b) ||
                                  (ita->second->q0 == b && ita->second->q1 == a));
                if (!same_pair) {
                    close_block(a);
                    close_block(b);
                    auto blk = std::make_shared<Block>();
                    blk->q0 = a;
                    blk->q1 = b;
                    open[a] = blk;
                    open[b] = blk;
                }
                Block& blk = *open[a];
                if (blk.q0 != a)  // node order reversed relative to the block
                    m = swap_matrix4() * m * swap_matrix4();
                Matrix4 pend = Eigen::kroneckerProduct(pending[blk.q1], pending[blk.q0]);
                pending[blk.q0] = Matrix2::Identity();
                pending[blk.q1] = Matrix2::Identity();
                blk.m = m * pend * blk.m;
                break;
            }
        }
    }
    std::vector<int> open_qubits;
    for (const auto& [q, blk] : open) open_qubits.push_back(q);
    for (int q : open_qubits) close_block(q);
    for (int q = 0; q < dag.qubit_count; ++q) flush_pending(q);
    return out;
}

} // namespace qroute
