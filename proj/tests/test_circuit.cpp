#include <qroute/consolidate.hpp>
#include <qroute/metrics.hpp>
#include <qroute/qasm.hpp>

#include <fstream>
#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace qroute;
using qroute::testing::phase_distance;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string benchmark_path(const std::string& name) {
    return std::string(QROUTE_SOURCE_DIR) + "/benchmarks/" + name;
}

const char* kHeader = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[4];\n";

// Random OpenQASM text over the supported vocabulary.
std::string random_qasm(std::mt19937_64& rng, int n_qubits, int n_gates) {
    struct Entry { const char* name; int params, qubits; };
    static const Entry vocab[] = {
        {"h", 0, 1},   {"x", 0, 1},    {"s", 0, 1},    {"tdg", 0, 1},  {"rx", 1, 1},
        {"ry", 1, 1},  {"rz", 1, 1},   {"u1", 1, 1},   {"u2", 2, 1},   {"u3", 3, 1},
        {"cx", 0, 2},  {"cz", 0, 2},   {"swap", 0, 2}, {"cp", 1, 2},   {"crz", 1, 2},
        {"rzz", 1, 2}, {"rxx", 1, 2},  {"ryy", 1, 2},  {"iswap", 0, 2},
    };
    std::uniform_int_distribution<int> pick(0, std::size(vocab) - 1);
    std::uniform_int_distribution<int> qd(0, n_qubits - 1);
    std::uniform_real_distribution<double> ang(-3.0, 3.0);
    std::ostringstream os;
    os << "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[" << n_qubits << "];\n";
    for (int i = 0; i < n_gates; ++i) {
        const Entry& e = vocab[pick(rng)];
        os << e.name;
        if (e.params) {
            os << "(";
            for (int p = 0; p < e.params; ++p) os << (p ? "," : "") << ang(rng);
            os << ")";
        }
        int q0 = qd(rng), q1 = q0;
        while (e.qubits == 2 && q1 == q0) q1 = qd(rng);
        os << " q[" << q0 << "]";
        if (e.qubits == 2) os << ",q[" << q1 << "]";
        os << ";\n";
    }
    return os.str();
}

TEST(ParseQasm, SingleCxBecomesCanonicalHalf) {
    CircuitDag dag = parse_qasm(std::string(kHeader) + "cx q[0],q[1];");
    ASSERT_EQ(dag.nodes.size(), 1u);
    EXPECT_EQ(dag.nodes[0].kind, GateKind::Canonical);
    EXPECT_TRUE(dag.nodes[0].coeffs.approx_equal({0.5, 0.0, 0.0}, 1e-9));
    ASSERT_TRUE(dag.nodes[0].dressings.has_value());
    EXPECT_LT(phase_distance(node_matrix(dag.nodes[0]), qasm_detail::mat_cx_low_control()),
              1e-9);
}

TEST(ParseQasm, EmptyBodyGivesWiresOnly) {
    CircuitDag dag = parse_qasm("OPENQASM 2.0;\nqreg q[3];\n");
    EXPECT_EQ(dag.qubit_count, 3);
    EXPECT_TRUE(dag.nodes.empty());
}

TEST(ParseQasm, GateDefinitionsExpand) {
    std::string src = "OPENQASM 2.0;\nqreg q[2];\n"
                      "gate foo(t) a,b { rz(t/2) a; cx a,b; rz(-t/2) b; }\n"
                      "foo(pi/3) q[0],q[1];\n";
    CircuitDag dag = parse_qasm(src);
    ASSERT_EQ(dag.nodes.size(), 3u);
    EXPECT_EQ(dag.nodes[0].kind, GateKind::OneQubit);
    EXPECT_EQ(dag.nodes[1].kind, GateKind::Canonical);
    EXPECT_LT(phase_distance(dag.nodes[0].matrix, qasm_detail::mat_rz(kPi / 6)), 1e-12);
    EXPECT_LT(phase_distance(dag.nodes[2].matrix, qasm_detail::mat_rz(-kPi / 6)), 1e-12);
}

TEST(ParseQasm, RegisterBroadcastAndMeasure) {
    std::string src = "OPENQASM 2.0;\nqreg q[3];\ncreg c[3];\nh q;\nmeasure q -> c;\n";
    CircuitDag dag = parse_qasm(src);
    ASSERT_EQ(dag.nodes.size(), 6u);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(dag.nodes[i].kind, GateKind::OneQubit);
    for (int i = 3; i < 6; ++i) {
        EXPECT_EQ(dag.nodes[i].kind, GateKind::Measure);
        EXPECT_EQ(dag.nodes[i].cbit, i - 3);
    }
}

TEST(ParseQasm, ErrorsCarryPosition) {
    try {
        parse_qasm("OPENQASM 2.0;\nqreg q[2];\nbogus q[0];\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line, 3);
        EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
    }
}

TEST(ParseQasm, UnsupportedFeatures) {
    EXPECT_THROW(parse_qasm("qreg q[1];\ncreg c[1];\nif (c==1) x q[0];\n"), UnsupportedFeature);
    EXPECT_THROW(parse_qasm("qreg q[1];\nreset q[0];\n"), UnsupportedFeature);
    EXPECT_THROW(parse_qasm("include \"other.inc\";\n"), UnsupportedFeature);
    EXPECT_THROW(parse_qasm("qreg q[2];\ncreg c[2];\nmeasure q[0] -> c[0];\nx q[0];\n"),
                 UnsupportedFeature);
}

TEST(Simulate, SingleCxMatchesConvention) {
    CircuitDag dag = parse_qasm("qreg q[2];\ncx q[0],q[1];\n");
    Eigen::MatrixXcd u = simulate_unitary(dag);
    // control = q[0] = least significant bit
    EXPECT_LT(phase_distance(Matrix4(u), qasm_detail::mat_cx_low_control()), 1e-12);
}

TEST(Simulate, EmptyCircuitIsIdentity) {
    CircuitDag dag = parse_qasm("qreg q[2];\n");
    EXPECT_LT((simulate_unitary(dag) - Eigen::MatrixXcd::Identity(4, 4)).norm(), 1e-15);
}

TEST(Simulate, TooManyQubitsThrows) {
    CircuitDag dag;
    dag.qubit_count = 13;
    EXPECT_THROW(simulate_unitary(dag), TooLarge);
}

TEST(Consolidate, DoubleCxCancels) {
    CircuitDag dag = parse_qasm("qreg q[2];\ncx q[0],q[1];\ncx q[0],q[1];\n");
    CircuitDag out = consolidate_2q_blocks(dag);
    EXPECT_EQ(out.two_qubit_count(), 0);
}

TEST(Consolidate, CxThenSwapIsMirror) {
    CircuitDag dag = parse_qasm("qreg q[2];\ncx q[0],q[1];\nswap q[0],q[1];\n");
    CircuitDag out = consolidate_2q_blocks(dag);
    ASSERT_EQ(out.two_qubit_count(), 1);
    for (const auto& g : out.nodes)
        if (g.is_two_qubit()) EXPECT_TRUE(g.coeffs.approx_equal({0.5, 0.5, 0.0}, 1e-9));
}

TEST(Consolidate, HadamardSandwichIsStillCxClass) {
    CircuitDag dag = parse_qasm("qreg q[2];\nh q[1];\ncx q[0],q[1];\nh q[1];\n");
    CircuitDag out = consolidate_2q_blocks(dag);
    ASSERT_EQ(out.two_qubit_count(), 1);
    for (const auto& g : out.nodes)
        if (g.is_two_qubit()) EXPECT_TRUE(g.coeffs.approx_equal({0.5, 0.0, 0.0}, 1e-9));
}

TEST(Consolidate, BarrierBlocksMerging) {
    CircuitDag merged = parse_qasm("qreg q[2];\ncx q[0],q[1];\ncx q[0],q[1];\n");
    CircuitDag fenced =
        parse_qasm("qreg q[2];\ncx q[0],q[1];\nbarrier q[0],q[1];\ncx q[0],q[1];\n");
    EXPECT_EQ(consolidate_2q_blocks(merged).two_qubit_count(), 0);
    EXPECT_EQ(consolidate_2q_blocks(fenced).two_qubit_count(), 2);
}

TEST(Consolidate, SerialChainDepthCollapses) {
    std::ostringstream os;
    os << "qreg q[2];\n";
    for (int i = 0; i < 9; ++i) os << "cp(" << 0.3 + 0.1 * i << ") q[0],q[1];\nh q[1];\n";
    CircuitDag out = consolidate_2q_blocks(parse_qasm(os.str()));
    IsaSpec cx = builtin_isa("CX");
    EXPECT_LE(cost_report(out, cx).depth_2q, 1);
}

TEST(Consolidate, PreservesUnitaryOnRandomCircuits) {
    std::mt19937_64 rng(7771);
    for (int trial = 0; trial < 40; ++trial) {
        int n = 2 + static_cast<int>(rng() % 4);
        CircuitDag dag = parse_qasm(random_qasm(rng, n, 24));
        CircuitDag out = consolidate_2q_blocks(dag);
        for (const auto& g : out.nodes)
            EXPECT_TRUE(g.kind == GateKind::Canonical || g.kind == GateKind::OneQubit ||
                        g.kind == GateKind::Measure);
        EXPECT_LT(phase_distance(simulate_unitary(dag), simulate_unitary(out)), 1e-8)
            << "trial " << trial;
    }
}

TEST(EmitQasm, RoundTripIsUnitarilyEquivalent) {
    std::mt19937_64 rng(4242);
    for (int trial = 0; trial < 40; ++trial) {
        int n = 2 + static_cast<int>(rng() % 3);
        CircuitDag dag = parse_qasm(random_qasm(rng, n, 20));
        CircuitDag back = parse_qasm(emit_qasm(dag));
        EXPECT_LT(phase_distance(simulate_unitary(dag), simulate_unitary(back)), 1e-8)
            << "trial " << trial;
    }
}

TEST(EmitQasm, TextualFixpointAfterOneCycle) {
    std::mt19937_64 rng(90210);
    for (int trial = 0; trial < 25; ++trial) {
        int n = 2 + static_cast<int>(rng() % 3);
        CircuitDag dag = parse_qasm(random_qasm(rng, n, 18));
        std::string e1 = emit_qasm(dag);
        std::string e2 = emit_qasm(parse_qasm(e1));
        EXPECT_EQ(e1, e2) << "trial " << trial;
    }
}

TEST(EmitQasm, ConsolidatedFixpointAndMeasureLines) {
    std::string src = "qreg q[3];\ncreg c[3];\nh q[0];\ncx q[0],q[1];\ncx q[1],q[2];\n"
                      "measure q -> c;\n";
    CircuitDag dag = consolidate_2q_blocks(parse_qasm(src));
    std::string e1 = emit_qasm(dag);
    EXPECT_NE(e1.find("measure q[2] -> c[2];"), std::string::npos);
    EXPECT_EQ(e1, emit_qasm(parse_qasm(e1)));
}

TEST(EmitQasm, BareCanonicalUsesAxisTriple) {
    CircuitDag dag;
    dag.qubit_count = 2;
    dag.add(canonical_gate(0, 1, {0.5, 0.0, 0.0}));
    std::string text = emit_qasm(dag);
    EXPECT_NE(text.find("rxx("), std::string::npos);
    EXPECT_EQ(text.find("u3("), std::string::npos);  // identity dressings omitted
    EXPECT_EQ(text, emit_qasm(parse_qasm(text)));
}

TEST(CostReport, EmptyCircuitAllZero) {
    CircuitDag dag;
    dag.qubit_count = 2;
    CostReport r = cost_report(dag, builtin_isa("CX"));
    EXPECT_EQ(r.c_count, 0.0);
    EXPECT_EQ(r.c_depth, 0.0);
    EXPECT_EQ(r.can_count, 0);
    EXPECT_EQ(r.depth_2q, 0);
    EXPECT_EQ(r.swap_count, 0);
}

TEST(CostReport, SwapNodeUnderSqisw) {
    CircuitDag dag;
    dag.qubit_count = 2;
    dag.add(swap_gate(0, 1));
    CostReport r = cost_report(dag, builtin_isa("SQiSW"));
    EXPECT_NEAR(r.c_count, 2.25, 1e-12);
    EXPECT_EQ(r.swap_count, 1);
}

TEST(Qft18, ConsolidatedMetricsUnderCx) {
    CircuitDag dag = parse_qasm(read_file(benchmark_path("qft_18.qasm")));
    CircuitDag out = consolidate_2q_blocks(dag);
    CostReport r = cost_report(out, builtin_isa("CX"));
    EXPECT_EQ(r.can_count, 153);
    EXPECT_NEAR(r.c_count, 306.0, 1e-9);
    EXPECT_NEAR(r.c_depth, 66.0, 1e-9);
}

TEST(Qft8, ConsolidationPreservesUnitary) {
    CircuitDag dag = parse_qasm(read_file(benchmark_path("qft_8.qasm")));
    CircuitDag out = consolidate_2q_blocks(dag);
    EXPECT_LT(phase_distance(simulate_unitary(dag), simulate_unitary(out)), 1e-8);
    CircuitDag back = parse_qasm(emit_qasm(out));
    EXPECT_LT(phase_distance(simulate_unitary(dag), simulate_unitary(back)), 1e-8);
}

} // namespace
