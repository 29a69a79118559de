#pragma once

// Circuit data model: gate nodes over qubit wires, appended in execution
// order (the node vector is always a valid topological order), plus the
// small-n unitary simulator used as the verification oracle.
//
// Qubit ordering is little-endian throughout: for a node on (qubits[0],
// qubits[1]), the 4x4 matrix acts on basis |q1 q0> with qubits[0] as the
// least significant bit. Tensor factors named *_1 in KakFactors therefore
// act on qubits[0], and *_0 on qubits[1].

#include "canonical.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qroute {

class TooLarge : public std::runtime_error {
public:
    explicit TooLarge(const std::string& what) : std::runtime_error(what) {}
};

enum class GateKind { OneQubit, Canonical, Swap, Measure, Barrier };

struct Gate {
    GateKind kind = GateKind::OneQubit;
    std::vector<int> qubits;
    Matrix2 matrix = Matrix2::Identity();     // OneQubit
    CanonicalCoeffs coeffs;                   // Canonical (always normalized)
    std::optional<KakFactors> dressings;      // Canonical: exact local frame
    int cbit = -1;                            // Measure target

    bool is_two_qubit() const { return kind == GateKind::Canonical || kind == GateKind::Swap; }
};

inline Gate one_qubit_gate(int q, const Matrix2& m) {
    Gate g;
    g.kind = GateKind::OneQubit;
    g.qubits = {q};
    g.matrix = m;
    return g;
}

inline Gate canonical_gate(int q0, int q1, const CanonicalCoeffs& coeffs,
                           std::optional<KakFactors> dressings = std::nullopt) {
    Gate g;
    g.kind = GateKind::Canonical;
    g.qubits = {q0, q1};
    g.coeffs = normalize_coeffs(coeffs);
    g.dressings = std::move(dressings);
    return g;
}

inline Gate swap_gate(int q0, int q1) {
    Gate g;
    g.kind = GateKind::Swap;
    g.qubits = {q0, q1};
    return g;
}

inline Matrix4 swap_matrix4() {
    Matrix4 m = Matrix4::Zero();
    m(0, 0) = m(1, 2) = m(2, 1) = m(3, 3) = 1;
    return m;
}

/// 4x4 matrix of a 2Q node in the |q1 q0> ordering described above.
inline Matrix4 node_matrix(const Gate& g) {
    switch (g.kind) {
        case GateKind::Canonical:
            return g.dressings ? g.dressings->reconstruct() : canonical_matrix(g.coeffs);
        case GateKind::Swap:
            return swap_matrix4();
        default:
            throw std::logic_error("node_matrix: not a 2Q node");
    }
}

struct CircuitDag {
    int qubit_count = 0;
    int cbit_count = 0;
    std::vector<Gate> nodes;

    void add(Gate g) { nodes.push_back(std::move(g)); }

    /// Node indices per qubit, in wire order.
    std::vector<std::vector<int>> wires() const {
        std::vector<std::vector<int>> w(qubit_count);
        for (size_t i = 0; i < nodes.size(); ++i)
            for (int q : nodes[i].qubits) w[q].push_back(static_cast<int>(i));
        return w;
    }

    int two_qubit_count() const {
        int n = 0;
        for (const auto& g : nodes) n += g.is_two_qubit() ? 1 : 0;
        return n;
    }
};

inline CircuitDag strip_measurements(const CircuitDag& dag) {
    CircuitDag out;
    out.qubit_count = dag.qubit_count;
    out.cbit_count = dag.cbit_count;
    for (const auto& g : dag.nodes)
        if (g.kind != GateKind::Measure) out.nodes.push_back(g);
    return out;
}

namespace detail {

inline void apply_1q(Eigen::MatrixXcd& u, int n, int q, const Matrix2& m) {
    const long dim = 1l << n;
    const long bit = 1l << q;
    for (long col = 0; col < dim; ++col)
        for (long i = 0; i < dim; ++i) {
            if (i & bit) continue;
            Complex a0 = u(i, col), a1 = u(i | bit, col);
            u(i, col) = m(0, 0) * a0 + m(0, 1) * a1;
            u(i | bit, col) = m(1, 0) * a0 + m(1, 1) * a1;
        }
}

inline void apply_2q(Eigen::MatrixXcd& u, int n, int q0, int q1, const Matrix4& m) {
    const long dim = 1l << n;
    const long b0 = 1l << q0, b1 = 1l << q1;
    for (long col = 0; col < dim; ++col)
        for (long i = 0; i < dim; ++i) {
            if ((i & b0) || (i & b1)) continue;
            // matrix row index bits: (q1, q0)
            Complex a00 = u(i, col);
            Complex a01 = u(i | b0, col);
            Complex a10 = u(i | b1, col);
            Complex a11 = u(i | b0 | b1, col);
            u(i, col) = m(0, 0) * a00 + m(0, 1) * a01 + m(0, 2) * a10 + m(0, 3) * a11;
            u(i | b0, col) = m(1, 0) * a00 + m(1, 1) * a01 + m(1, 2) * a10 + m(1, 3) * a11;
            u(i | b1, col) = m(2, 0) * a00 + m(2, 1) * a01 + m(2, 2) * a10 + m(2, 3) * a11;
            u(i | b0 | b1, col) =
                m(3, 0) * a00 + m(3, 1) * a01 + m(3, 2) * a10 + m(3, 3) * a11;
        }
}

} // namespace detail

/// Full circuit unitary with qubit 0 as the least significant index bit.
inline Eigen::MatrixXcd simulate_unitary(const CircuitDag& dag) {
    if (dag.qubit_count > 12)
        throw TooLarge("simulate_unitary: " + std::to_string(dag.qubit_count) + " qubits > 12");
    const int n = dag.qubit_count;
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(1l << n, 1l << n);
    for (const auto& g : dag.nodes) {
        switch (g.kind) {
            case GateKind::OneQubit:
                detail::apply_1q(u, n, g.qubits[0], g.matrix);
                break;
            case GateKind::Canonical:
            case GateKind::Swap:
                detail::apply_2q(u, n, g.qubits[0], g.qubits[1], node_matrix(g));
                break;
            case GateKind::Barrier:
                break;
            case GateKind::Measure:
                throw std::invalid_argument("simulate_unitary: strip measurements first");
        }
    }
    return u;
}

} // namespace qroute
