#pragma once

// SABRE-backbone router with synthesis-cost-aware SWAP insertion.
//
// On top of the usual front-layer / extended-set machinery this tracks:
//   L  last mapped layer: per physical pair, the most recent routed 2Q node
//      with no 2Q successor on its wires (SWAPs can be absorbed into it),
//   C  commuting canonical pairs inside L (pure-XX neighbours),
//   D  per-physical-qubit weighted completion times,
// and scores each candidate SWAP by
//   H = w_g*c_g + w_d*d_depth + (dAvgDist_F + k_E*dAvgDist_E)*c_swap,
// where c_g is the mirror-cost delta when the SWAP can be absorbed by L and
// the plain SWAP synthesis cost otherwise.
//
// Absorbed SWAPs mutate the absorbing node into its mirror (SWAP * U) and
// record a wire transposition; the output then contains no explicit SWAP
// node for them. swap_count in the returned report counts insertions,
// absorbed or not.

#include "consolidate.hpp"
#include "metrics.hpp"
#include "topology.hpp"

#include <random>
#include <unordered_map>

namespace qroute {

class GraphTooSmall : public std::runtime_error {
public:
    explicit GraphTooSmall(const std::string& what) : std::runtime_error(what) {}
};

class StallDetected : public std::runtime_error {
public:
    explicit StallDetected(const std::string& what) : std::runtime_error(what) {}
};

struct Mapping {
    std::vector<int> l2p, p2l;

    static Mapping identity(int n) {
        Mapping m;
        m.l2p.resize(n);
        m.p2l.resize(n);
        for (int i = 0; i < n; ++i) m.l2p[i] = m.p2l[i] = i;
        return m;
    }

    void swap_physical(int p0, int p1) {
        int l0 = p2l[p0], l1 = p2l[p1];
        std::swap(p2l[p0], p2l[p1]);
        l2p[l0] = p1;
        l2p[l1] = p0;
    }
};

enum class RouterMode { canopus, sabre_baseline };

struct RouterConfig {
    double w_g = 1.0;
    double w_d = 0.5;
    double k_E = 0.5;
    int extended_set_size = 20;
    int trials = 4;
    int layout_restarts = 10;
    int rounds = 5;
    uint64_t seed = 0;
    RouterMode mode = RouterMode::canopus;
    int stall_limit = 0;                 // 0: use 3 * graph.n
    bool keep_explicit_swaps = false;    // disable absorption in the output
    bool drop_executable_in_delta = false;  // alternative distance-delta rule
};

struct RouteResult {
    CircuitDag circuit;
    Mapping initial;
    Mapping final_map;
    CostReport report;
    int swap_insertions = 0;
};

namespace router_detail {

inline uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

using PKey = std::pair<int, int>;
inline PKey pkey(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

inline CanonicalCoeffs node_coeffs(const Gate& g) {
    return g.kind == GateKind::Swap ? CanonicalCoeffs{0.5, 0.5, 0.5} : g.coeffs;
}

/// Embed a 4x4 node matrix on local bits (b0, b1) of a w-wire register.
inline Eigen::MatrixXcd embed_gate(const Matrix4& m, int b0, int b1, int w) {
    long dim = 1l << w;
    Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(dim, dim);
    for (long x = 0; x < dim; ++x) {
        int sx = static_cast<int>(((x >> b0) & 1) | (((x >> b1) & 1) << 1));
        long rest = x & ~((1l << b0) | (1l << b1));
        for (int sy = 0; sy < 4; ++sy) {
            long y = rest | (static_cast<long>(sy & 1) << b0) |
                     (static_cast<long>((sy >> 1) & 1) << b1);
            e(y, x) = m(sy, sx);
        }
    }
    return e;
}

/// Fixed-size sibling of embed_gate for the commutation hot path.
template <int W>
inline Eigen::Matrix<Complex, (1 << W), (1 << W)> embed_fixed(const Matrix4& m, int b0,
                                                              int b1) {
    constexpr long dim = 1l << W;
    Eigen::Matrix<Complex, dim, dim> e = Eigen::Matrix<Complex, dim, dim>::Zero();
    for (long x = 0; x < dim; ++x) {
        int sx = static_cast<int>(((x >> b0) & 1) | (((x >> b1) & 1) << 1));
        long rest = x & ~((1l << b0) | (1l << b1));
        for (int sy = 0; sy < 4; ++sy) {
            long y = rest | (static_cast<long>(sy & 1) << b0) |
                     (static_cast<long>((sy >> 1) & 1) << b1);
            e(y, x) = m(sy, sx);
        }
    }
    return e;
}

/// Exact commutation of two dressed 2Q nodes on physical wires. The
/// canonical-class rule alone is not sound once local dressings enter, so
/// this compares the actual operators on the joint register.
/// y = (m embedded on bits b0, b1) * x on a W-wire register.
template <int W>
inline void apply_embedded(const Matrix4& m, int b0, int b1,
                           const Eigen::Matrix<Complex, (1 << W), 1>& x,
                           Eigen::Matrix<Complex, (1 << W), 1>& y) {
    constexpr long dim = 1l << W;
    const long m0 = 1l << b0, m1 = 1l << b1;
    for (long base = 0; base < dim; ++base) {
        if (base & (m0 | m1)) continue;
        const long i[4] = {base, base | m0, base | m1, base | m0 | m1};
        for (int r = 0; r < 4; ++r)
            y(i[r]) = m(r, 0) * x(i[0]) + m(r, 1) * x(i[1]) + m(r, 2) * x(i[2]) +
                      m(r, 3) * x(i[3]);
    }
}

inline bool nodes_commute(const Matrix4& a, const std::vector<int>& aq, const Matrix4& b,
                          const std::vector<int>& bq) {
    int wires[4] = {aq[0], aq[1], -1, -1};
    int w = 2;
    for (int q : bq) {
        if (q != wires[0] && q != wires[1] && q != wires[2]) wires[w++] = q;
    }
    if (w >= 4) return true;  // disjoint supports
    auto bit = [&](int q) { return q == wires[0] ? 0 : (q == wires[1] ? 1 : 2); };
    if (w == 2) {
        // same pair, possibly with opposite wire order; lazyProduct keeps
        // Eigen off the heap-allocating gemm path
        Matrix4 ea = embed_fixed<2>(a, bit(aq[0]), bit(aq[1]));
        Matrix4 eb = embed_fixed<2>(b, bit(bq[0]), bit(bq[1]));
        Matrix4 c = ea.lazyProduct(eb);
        c -= eb.lazyProduct(ea);
        return c.squaredNorm() < 1e-18;
    }
    // one shared wire. Cheap sound reject first: ||[A,B]v|| <= ||[A,B]||_F
    // for a unit probe vector, so a large residual proves non-commutation
    // without forming the 8x8 operators. Most random pairs exit here.
    using Vector8 = Eigen::Matrix<Complex, 8, 1>;
    static const Vector8 probe = [] {
        Vector8 v;
        std::mt19937_64 rng(0x9e3779b9ull);
        std::uniform_real_distribution<double> d(-1.0, 1.0);
        for (int i = 0; i < 8; ++i) v(i) = Complex(d(rng), d(rng));
        v /= v.norm();
        return v;
    }();
    int a0 = bit(aq[0]), a1 = bit(aq[1]), b0 = bit(bq[0]), b1 = bit(bq[1]);
    Vector8 t1, t2, u1, u2;
    apply_embedded<3>(b, b0, b1, probe, t1);
    apply_embedded<3>(a, a0, a1, t1, t2);  // AB v
    apply_embedded<3>(a, a0, a1, probe, u1);
    apply_embedded<3>(b, b0, b1, u1, u2);  // BA v
    if ((t2 - u2).squaredNorm() > 1e-18) return false;
    using Matrix8 = Eigen::Matrix<Complex, 8, 8>;
    Matrix8 ea = embed_fixed<3>(a, a0, a1);
    Matrix8 eb = embed_fixed<3>(b, b0, b1);
    Matrix8 c = ea.lazyProduct(eb);
    c -= eb.lazyProduct(ea);
    return c.squaredNorm() < 1e-18;
}

/// One routing pass over the logical circuit from a given initial mapping.
class Pass {
public:
    Pass(const CircuitDag& dag, const CouplingGraph& graph, const IsaSpec& isa,
         const RouterConfig& cfg, const Mapping& initial, uint64_t seed,
         bool materialize = true)
        : dag_(dag), graph_(graph), isa_(isa), cfg_(cfg), cache_(isa), map_(initial),
          rng_(seed), materialize_(materialize) {
        swap_cost_ = cfg.mode == RouterMode::sabre_baseline ? 3.0 : isa.swap_cost;
        stall_limit_ = cfg.stall_limit > 0 ? cfg.stall_limit : 3 * graph.n;
        eid_.assign(graph.n * graph.n, -1);
        int ne = 0;
        for (const auto& [a, b] : graph.edges) {
            eid_[a * graph.n + b] = eid_[b * graph.n + a] = ne;
            ++ne;
        }
        Lv_.assign(graph.edges.size(), -1);
        Cv_.assign(graph.edges.size(), -1);
        amemo_.assign(graph.edges.size(), AbsorbInfo{});
    }

    RouteResult run() {
        init();
        advance_fronts();
        while (!front_.empty()) {
            std::vector<int> exec;
            for (int id : front_) {
                const Gate& g = dag_.nodes[id];
                if (graph_.has_edge(map_.l2p[g.qubits[0]], map_.l2p[g.qubits[1]]))
                    exec.push_back(id);
            }
            if (!exec.empty()) {
                std::sort(exec.begin(), exec.end());
                for (int id : exec) {
                    apply_2q(id);
                    retire(id);
                }
                advance_fronts();
                stall_ = 0;
                decay_.assign(graph_.n, 1.0);
                continue;
            }
            if (stall_ >= stall_limit_) {
                force_oldest();
                stall_ = 0;
                continue;
            }
            PKey best = pick_swap();
            apply_swap(best);
            ++stall_;
        }
        finish();
        RouteResult res;
        res.circuit = std::move(out_);
        res.final_map = map_;
        res.swap_insertions = insertions_;
        res.report = cost_report(res.circuit, isa_);
        res.report.swap_count = insertions_;
        if (cfg_.mode == RouterMode::canopus) {
            // D must stay coherent with a from-scratch critical-path sweep
            double dmax = D_.empty() ? 0.0 : *std::max_element(D_.begin(), D_.end());
            if (std::abs(dmax - res.report.c_depth) > 1e-9)
                throw std::logic_error("duration records diverged from the routed circuit");
        }
        return res;
    }

private:
    // setup ----------------------------------------------------------------
    void init() {
        out_.qubit_count = graph_.n;
        out_.cbit_count = dag_.cbit_count;
        lwires_.assign(dag_.qubit_count, {});
        for (size_t i = 0; i < dag_.nodes.size(); ++i)
            for (int q : dag_.nodes[i].qubits) lwires_[q].push_back(static_cast<int>(i));
        pos_.assign(dag_.qubit_count, 0);
        done_.assign(dag_.nodes.size(), false);
        pwire_.assign(graph_.n, {});
        D_.assign(graph_.n, 0.0);
        decay_.assign(graph_.n, 1.0);
    }

    bool at_front(int id) const {
        const Gate& g = dag_.nodes[id];
        for (int q : g.qubits)
            if (pos_[q] >= static_cast<int>(lwires_[q].size()) || lwires_[q][pos_[q]] != id)
                return false;
        return true;
    }

    /// Emit 1Q fronts, stash measures, and refill the front layer.
    void advance_fronts() {
        bool progress = true;
        while (progress) {
            progress = false;
            for (int q = 0; q < dag_.qubit_count; ++q) {
                while (pos_[q] < static_cast<int>(lwires_[q].size())) {
                    int id = lwires_[q][pos_[q]];
                    const Gate& g = dag_.nodes[id];
                    if (g.kind == GateKind::OneQubit) {
                        out_.add(one_qubit_gate(map_.l2p[q], g.matrix));
                        if (cfg_.mode == RouterMode::canopus) {
                            omat_.emplace_back();
                            omat_set_.push_back(0);
                            dur_.push_back({-1.0, 0, 0});
                        }
                        pwire_[map_.l2p[q]].push_back(static_cast<int>(out_.nodes.size()) - 1);
                        done_[id] = true;
                        ++pos_[q];
                        progress = true;
                    } else if (g.kind == GateKind::Measure) {
                        measures_.push_back({q, g.cbit});
                        done_[id] = true;
                        ++pos_[q];
                        progress = true;
                    } else if (g.kind == GateKind::Barrier) {
                        done_[id] = true;  // consolidated input has none; ignore
                        ++pos_[q];
                        progress = true;
                    } else {
                        break;
                    }
                }
            }
        }
        front_.clear();
        for (int q = 0; q < dag_.qubit_count; ++q)
            if (pos_[q] < static_cast<int>(lwires_[q].size())) {
                int id = lwires_[q][pos_[q]];
                if (!done_[id] && at_front(id)) front_.insert(id);
            }
        sets_dirty_ = true;  // F/E snapshots used by pick_swap are stale
    }

    void retire(int id) {
        done_[id] = true;
        for (int q : dag_.nodes[id].qubits) ++pos_[q];
        front_.erase(id);
    }

    // Algorithm 1: append an executable 2Q gate and maintain L, C, D -------
    void apply_2q(int id) {
        const Gate& g = dag_.nodes[id];
        int p0 = map_.l2p[g.qubits[0]], p1 = map_.l2p[g.qubits[1]];
        Gate rg = g;
        rg.qubits = {p0, p1};
        int idx = static_cast<int>(out_.nodes.size());

        if (cfg_.mode == RouterMode::canopus) {
            double w = cache_.cost(g.coeffs);
            double d = std::max(D_[p0], D_[p1]) + w;
            D_[p0] = D_[p1] = d;
            // the 4x4 is only needed when a commutation screen passes
            std::optional<Matrix4> gm;
            auto gmat = [&]() -> const Matrix4& {
                if (!gm) gm = node_matrix(g);
                return *gm;
            };
            for (int p : {p0, p1})
                process_predecessor(p, pkey(p0, p1), gmat, g.coeffs, {p0, p1});
            Lv_[eid(pkey(p0, p1))] = idx;
            if (gm) {
                omat_.push_back(*gm);
                omat_set_.push_back(1);
            } else {
                omat_.emplace_back();
                omat_set_.push_back(0);
            }
            dur_.push_back({g.coeffs.is_identity() ? -1.0 : w, p0, p1});
        }
        out_.nodes.push_back(std::move(rg));
        pwire_[p0].push_back(idx);
        pwire_[p1].push_back(idx);
    }

    template <class GMat>
    void process_predecessor(int p, PKey gp, GMat&& gmat, const CanonicalCoeffs& gk,
                             const std::vector<int>& gq) {
        if (pwire_[p].empty()) return;
        int pi = pwire_[p].back();
        const Gate& pred = out_.nodes[pi];
        if (pred.is_two_qubit()) {
            PKey pp = pkey(pred.qubits[0], pred.qubits[1]);
            bool share_one = pp != gp;
            // class-level rule as a cheap screen; the exact operator check
            // still decides, since dressings break the class-level statement
            if (share_one && pred.kind == GateKind::Canonical &&
                commutes(node_coeffs(pred), gk, QubitOverlap::One) &&
                nodes_commute(omat(pi), pred.qubits, gmat(), gq)) {
                Cv_[eid(pp)] = eid(gp);
            } else {
                int ei = eid(pp);
                Lv_[ei] = -1;
                Cv_[ei] = -1;
            }
        } else {
            // walk through 1Q gates to the hidden 2Q grandparent
            for (int k = static_cast<int>(pwire_[p].size()) - 1; k >= 0; --k) {
                const Gate& gp2 = out_.nodes[pwire_[p][k]];
                if (gp2.is_two_qubit()) {
                    int ei = eid(pkey(gp2.qubits[0], gp2.qubits[1]));
                    Lv_[ei] = -1;
                    Cv_[ei] = -1;
                    break;
                }
            }
        }
    }

    // SWAP handling (Algorithm 2 + mapping update) -------------------------
    struct AbsorbInfo {
        bool ok = false;
        int idx = -1;
        double can_cost = 0, mirror_cost = 0;
        CanonicalCoeffs mirror;
    };

    const AbsorbInfo& absorb_info(const PKey& e) {
        static const AbsorbInfo none;
        if (cfg_.mode != RouterMode::canopus || cfg_.keep_explicit_swaps) return none;
        int ei = eid(e);
        int idx = Lv_[ei];
        if (idx < 0) return none;
        // nodes never mutate while they keep both their index and their L
        // entry, so a memo hit keyed on the index is exact
        AbsorbInfo& a = amemo_[ei];
        if (a.idx == idx) return a;
        const Gate& u = out_.nodes[idx];
        CanonicalCoeffs k = node_coeffs(u);
        a.idx = idx;
        a.can_cost = u.kind == GateKind::Swap ? swap_cost_ : cache_.cost(k);
        a.mirror = mirror_coeffs(k);
        a.mirror_cost = cache_.cost(a.mirror);
        a.ok = a.mirror_cost - a.can_cost <= swap_cost_ + 1e-12;
        return a;
    }

    /// Hypothetical completion time of the pair after this SWAP.
    double hypothetical_d(const PKey& e, const AbsorbInfo& a) const {
        if (a.ok) {
            int ce = Cv_[eid(e)];
            if (ce >= 0 && Lv_[ce] >= 0) {
                const Gate& succ = out_.nodes[Lv_[ce]];
                double ds = std::min(D_[succ.qubits[0]], D_[succ.qubits[1]]);
                return ds + a.mirror_cost;
            }
            return std::max(D_[e.first], D_[e.second]) + a.mirror_cost - a.can_cost;
        }
        return std::max(D_[e.first], D_[e.second]) + swap_cost_;
    }

    void apply_swap(const PKey& e) {
        ++insertions_;
        int p0 = e.first, p1 = e.second;
        AbsorbInfo a = absorb_info(e);
        bool absorb = a.ok;
        Matrix4 nm;
        if (absorb) {
            nm = swap_matrix4() * omat(a.idx);
            // the target must end up as the last 2Q op on both wires so the
            // folded SWAP only relabels 1Q traffic behind it
            absorb = try_reposition(a.idx);
        }
        if (absorb) {
            int t = reposition_target_;
            Gate& un = out_.nodes[t];
            bool old_couples = un.kind == GateKind::Swap || !un.coeffs.is_identity();
            if (materialize_) {
                KakFactors f;
                if (un.kind == GateKind::Swap) {
                    f.global_phase = std::exp(Complex(0, kPi / 4.0));
                    f.coeffs = {0.5, 0.5, 0.5};
                } else if (un.dressings) {
                    f = *un.dressings;
                } else {
                    f.coeffs = un.coeffs;
                }
                KakFactors folded = swap_fold(f);
                un.coeffs = folded.coeffs;
                un.dressings = std::move(folded);
            } else {
                // layout probes only consume the coefficient-based cost report
                un.coeffs = a.mirror;
                un.dressings.reset();
            }
            un.kind = GateKind::Canonical;
            omat_[t] = nm;
            omat_set_[t] = 1;
            // later 1Q gates on the swapped wires commute through the
            // transposition by exchanging wires; t is the last 2Q op there,
            // so everything behind it on p0/p1 is 1Q
            rewire_tail_1q(t, p0, p1);
            bool new_couples = !a.mirror.is_identity();
            dur_[t] = {new_couples ? a.mirror_cost : -1.0, un.qubits[0], un.qubits[1]};
            if (t == a.idx && new_couples) {
                // node stayed in place and is the last 2Q op on both wires:
                // only its own weight changed. A coupled node left equal
                // completion times on both ends; an uncoupled one starts at
                // their maximum.
                double base = old_couples ? D_[p0] - a.can_cost : std::max(D_[p0], D_[p1]);
                D_[p0] = D_[p1] = base + a.mirror_cost;
            } else if (t == a.idx && !old_couples) {
                // stayed uncoupled: completion times are untouched
            } else {
                recompute_durations();
            }
            // retire the node from L: a second absorption on this edge would
            // cancel the first (SWAP^2 = I) and invite a free swap/undo loop
            int ei = eid(e);
            Lv_[ei] = -1;
            // the node's class changed: cached commutation facts are stale
            Cv_[ei] = -1;
            for (int& v : Cv_)
                if (v == ei) v = -1;
        } else {
            int idx = static_cast<int>(out_.nodes.size());
            if (cfg_.mode == RouterMode::canopus) {
                double d = std::max(D_[p0], D_[p1]) + swap_cost_;
                D_[p0] = D_[p1] = d;
                Matrix4 sw = swap_matrix4();
                auto smat = [&]() -> const Matrix4& { return sw; };
                for (int p : {p0, p1})
                    process_predecessor(p, e, smat, {0.5, 0.5, 0.5}, {p0, p1});
                Lv_[eid(e)] = idx;
                omat_.push_back(sw);
                omat_set_.push_back(1);
                dur_.push_back({swap_cost_, p0, p1});
            }
            out_.add(swap_gate(p0, p1));
            pwire_[p0].push_back(idx);
            pwire_[p1].push_back(idx);
        }
        map_.swap_physical(p0, p1);
        decay_[p0] += 0.001;
        decay_[p1] += 0.001;
    }

    /// Commute node i past everything that follows it on its wires, so it
    /// becomes the last op there. Succeeds iff every such follower is a
    /// (necessarily 2Q) canonical node commuting with it exactly; 1Q traffic
    /// in between blocks the move. No-op when the node is already last.
    bool try_reposition(int i) {
        const Gate& can = out_.nodes[i];
        int p0 = can.qubits[0], p1 = can.qubits[1];
        int j = i;
        for (int p : {p0, p1})
            for (auto it = pwire_[p].rbegin(); it != pwire_[p].rend() && *it > i; ++it)
                if (out_.nodes[*it].is_two_qubit()) {
                    j = std::max(j, *it);
                    break;
                }
        reposition_target_ = i;
        if (j == i) return true;
        Matrix4 um = omat(i);
        std::vector<int> between;
        for (int p : {p0, p1})
            for (int v : pwire_[p])
                if (v > i && v <= j) between.push_back(v);
        std::sort(between.begin(), between.end());
        between.erase(std::unique(between.begin(), between.end()), between.end());
        for (int k : between) {
            const Gate& g = out_.nodes[k];
            if (g.kind != GateKind::Canonical) return false;
            if (!nodes_commute(um, can.qubits, omat(k), g.qubits)) return false;
        }
        Gate moved = out_.nodes[i];
        out_.nodes.erase(out_.nodes.begin() + i);
        out_.nodes.insert(out_.nodes.begin() + j, std::move(moved));
        Matrix4 mm = omat_[i];
        omat_.erase(omat_.begin() + i);
        omat_.insert(omat_.begin() + j, mm);
        char ms = omat_set_[i];
        omat_set_.erase(omat_set_.begin() + i);
        omat_set_.insert(omat_set_.begin() + j, ms);
        NodeDur nd = dur_[i];
        dur_.erase(dur_.begin() + i);
        dur_.insert(dur_.begin() + j, nd);
        reposition_target_ = j;
        auto remap = [&](int v) { return v == i ? j : (v > i && v <= j ? v - 1 : v); };
        for (int& v : Lv_)
            if (v >= 0) v = remap(v);
        for (auto& w : pwire_) {
            for (auto& v : w) v = remap(v);
            std::sort(w.begin(), w.end());
        }
        return true;
    }

    /// Exchange the 1Q tails of wires p0/p1 behind node t (the last 2Q op on
    /// both wires). Keeps pwire_ sorted without a full rebuild.
    void rewire_tail_1q(int t, int p0, int p1) {
        auto split = [&](std::vector<int>& w) {
            auto it = std::upper_bound(w.begin(), w.end(), t);
            std::vector<int> tail(it, w.end());
            w.erase(it, w.end());
            return tail;
        };
        std::vector<int> t0 = split(pwire_[p0]), t1 = split(pwire_[p1]);
        for (int k : t0) out_.nodes[k].qubits[0] = p1;
        for (int k : t1) out_.nodes[k].qubits[0] = p0;
        pwire_[p0].insert(pwire_[p0].end(), t1.begin(), t1.end());
        pwire_[p1].insert(pwire_[p1].end(), t0.begin(), t0.end());
    }

    void rebuild_pwire(int p) {
        pwire_[p].clear();
        for (size_t i = 0; i < out_.nodes.size(); ++i)
            for (int q : out_.nodes[i].qubits)
                if (q == p) pwire_[p].push_back(static_cast<int>(i));
    }

    /// Full re-sweep of D; used after reorderings where the incremental
    /// update rules do not apply directly.
    void recompute_durations() {
        std::fill(D_.begin(), D_.end(), 0.0);
        for (const NodeDur& nd : dur_) {
            if (nd.w < 0) continue;
            double d = std::max(D_[nd.p0], D_[nd.p1]) + nd.w;
            D_[nd.p0] = D_[nd.p1] = d;
        }
    }

    // heuristic ------------------------------------------------------------
    std::vector<std::pair<int, int>> demanded_front() const {
        std::vector<std::pair<int, int>> v;
        for (int id : front_) {
            const Gate& g = dag_.nodes[id];
            v.push_back({g.qubits[0], g.qubits[1]});
        }
        return v;
    }

    std::vector<std::pair<int, int>> extended_set() const {
        std::vector<std::pair<int, int>> v;
        size_t start = dag_.nodes.size();
        for (int q = 0; q < dag_.qubit_count; ++q)
            if (pos_[q] < static_cast<int>(lwires_[q].size()))
                start = std::min(start, static_cast<size_t>(lwires_[q][pos_[q]]));
        for (size_t i = start; i < dag_.nodes.size(); ++i) {
            if (static_cast<int>(v.size()) >= cfg_.extended_set_size) break;
            const Gate& g = dag_.nodes[i];
            if (done_[i] || !g.is_two_qubit() || front_.count(static_cast<int>(i))) continue;
            v.push_back({g.qubits[0], g.qubits[1]});
        }
        return v;
    }

    double avg_dist(const std::vector<std::pair<int, int>>& pairs,
                    const std::vector<int>& l2p) const {
        if (pairs.empty()) return 0.0;
        double s = 0;
        for (const auto& [a, b] : pairs) s += graph_.dist[l2p[a]][l2p[b]];
        return s / pairs.size();
    }

    PKey pick_swap() {
        if (sets_dirty_) {
            fp_cache_ = demanded_front();
            ep_cache_ = extended_set();
            sets_dirty_ = false;
        }
        const std::vector<std::pair<int, int>>& fp = fp_cache_;
        const std::vector<std::pair<int, int>>& ep = ep_cache_;
        active_.assign(graph_.n, 0);
        for (const auto& [a, b] : fp) {
            active_[map_.l2p[a]] = 1;
            active_[map_.l2p[b]] = 1;
        }
        cands_.clear();
        for (const auto& [i, j] : graph_.edges)
            if (active_[i] || active_[j]) cands_.push_back({i, j});
        const std::vector<PKey>& cands = cands_;

        double base_f = avg_dist(fp, map_.l2p), base_e = avg_dist(ep, map_.l2p);
        double dmax = *std::max_element(D_.begin(), D_.end());
        // scored candidate; dterm carries the raw distance delta for the
        // lookahead guard below
        std::vector<Scored>& scored = scored_;
        scored.clear();
        scored.reserve(cands.size());
        std::vector<int>& l2p = l2p_buf_;
        l2p = map_.l2p;
        for (const PKey& e : cands) {
            int l0 = map_.p2l[e.first], l1 = map_.p2l[e.second];
            std::swap(l2p[l0], l2p[l1]);
            double h, dterm = 0;
            if (cfg_.mode == RouterMode::sabre_baseline) {
                h = (avg_dist(fp, l2p) + cfg_.k_E * avg_dist(ep, l2p)) *
                    std::max(decay_[e.first], decay_[e.second]);
            } else {
                double de = avg_dist(ep, l2p) - base_e;
                double df_raw = avg_dist(fp, l2p) - base_f;
                double df = df_raw;
                if (cfg_.drop_executable_in_delta) {
                    std::vector<std::pair<int, int>> fp2 = fp;
                    fp2.erase(std::remove_if(fp2.begin(), fp2.end(),
                                             [&](const std::pair<int, int>& g) {
                                                 return graph_.has_edge(l2p[g.first],
                                                                        l2p[g.second]);
                                             }),
                              fp2.end());
                    df = avg_dist(fp2, l2p) - base_f;
                }
                dterm = df_raw + cfg_.k_E * de;
                const AbsorbInfo& a = absorb_info(e);
                double cg = a.ok ? a.mirror_cost - a.can_cost : swap_cost_;
                double nd = hypothetical_d(e, a);
                double ddepth = std::max(dmax, nd) - dmax;
                h = cfg_.w_g * cg + cfg_.w_d * ddepth + (df + cfg_.k_E * de) * swap_cost_;
            }
            scored.push_back({e, h, dterm});
            std::swap(l2p[l0], l2p[l1]);
        }
        // lookahead guard: a cheap (absorbable) SWAP that moves the demanded
        // pairs apart must not outrank a paid one that brings them together,
        // or the search drifts sideways on dense circuits. When any candidate
        // improves the distance term, only improving candidates compete on H.
        bool any_improving = false;
        if (cfg_.mode != RouterMode::sabre_baseline)
            for (const Scored& s : scored)
                if (s.dterm < -1e-12) {
                    any_improving = true;
                    break;
                }
        double best = std::numeric_limits<double>::infinity();
        std::vector<PKey>& ties = ties_;
        ties.clear();
        for (const Scored& s : scored) {
            if (any_improving && s.dterm >= -1e-12) continue;
            if (s.h < best - 1e-9) {
                best = s.h;
                ties.clear();
                ties.push_back(s.e);
            } else if (s.h <= best + 1e-9) {
                ties.push_back(s.e);
            }
        }
        if (ties.empty()) throw StallDetected("no SWAP candidate available");
        return ties[rng_() % ties.size()];
    }

    /// Stall fallback: walk the oldest front gate together along a shortest
    /// path.
    void force_oldest() {
        int id = *std::min_element(front_.begin(), front_.end());
        const Gate& g = dag_.nodes[id];
        int p0 = map_.l2p[g.qubits[0]], p1 = map_.l2p[g.qubits[1]];
        // BFS path p0 -> p1
        std::vector<int> prev(graph_.n, -1);
        std::queue<int> q;
        q.push(p0);
        prev[p0] = p0;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            if (u == p1) break;
            for (int v : graph_.adj[u])
                if (prev[v] < 0) {
                    prev[v] = u;
                    q.push(v);
                }
        }
        if (prev[p1] < 0) throw StallDetected("front gate endpoints are disconnected");
        std::vector<int> path;
        for (int v = p1; v != p0; v = prev[v]) path.push_back(v);
        path.push_back(p0);
        std::reverse(path.begin(), path.end());
        for (size_t i = 0; i + 2 < path.size(); ++i)
            apply_swap(pkey(path[i], path[i + 1]));
    }

    void finish() {
        for (const auto& [q, cbit] : measures_) {
            Gate m;
            m.kind = GateKind::Measure;
            m.qubits = {map_.l2p[q]};
            m.cbit = cbit;
            out_.add(m);
        }
    }

    const CircuitDag& dag_;
    const CouplingGraph& graph_;
    const IsaSpec& isa_;
    const RouterConfig& cfg_;
    CostCache cache_;
    Mapping map_;
    std::mt19937_64 rng_;
    double swap_cost_ = 3.0;
    int stall_limit_ = 0;

    CircuitDag out_;
    std::vector<std::vector<int>> lwires_;
    std::vector<int> pos_;
    std::vector<char> done_;
    std::set<int> front_;
    std::vector<std::vector<int>> pwire_;
    std::vector<int> eid_;   // physical pair -> coupling edge index
    std::vector<int> Lv_;    // per-edge last mapped-layer node (-1: none)
    std::vector<int> Cv_;    // per-edge commuting successor edge (-1: none)
    std::vector<AbsorbInfo> amemo_;

    int eid(const PKey& e) const { return eid_[e.first * graph_.n + e.second]; }
    std::vector<Matrix4> omat_;  // per-output-node matrices (canopus mode)
    std::vector<char> omat_set_;
    struct NodeDur {             // compact per-node record for duration sweeps
        double w;                // coupling weight, < 0 when non-coupling
        int p0, p1;
    };
    std::vector<NodeDur> dur_;

    const Matrix4& omat(int i) {
        if (!omat_set_[i]) {
            omat_[i] = node_matrix(out_.nodes[i]);
            omat_set_[i] = 1;
        }
        return omat_[i];
    }
    bool materialize_ = true;  // layout probes skip dressing bookkeeping
    std::vector<double> D_;
    std::vector<double> decay_;
    std::vector<std::pair<int, int>> fp_cache_, ep_cache_;  // F/E pair snapshots
    bool sets_dirty_ = true;
    struct Scored {
        PKey e;
        double h, dterm;
    };
    std::vector<Scored> scored_;  // pick_swap scratch, reused across calls
    std::vector<PKey> cands_, ties_;
    std::vector<char> active_;
    std::vector<int> l2p_buf_;
    std::vector<std::pair<int, int>> measures_;  // (logical qubit, cbit)
    int insertions_ = 0;
    int stall_ = 0;
    int reposition_target_ = -1;
};

inline Mapping random_mapping(int n, std::mt19937_64& rng) {
    Mapping m = Mapping::identity(n);
    for (int i = n - 1; i > 0; --i) {
        int j = static_cast<int>(rng() % (i + 1));
        std::swap(m.l2p[i], m.l2p[j]);
    }
    for (int i = 0; i < n; ++i) m.p2l[m.l2p[i]] = i;
    return m;
}

inline CircuitDag reversed_for_layout(const CircuitDag& dag) {
    CircuitDag rev;
    rev.qubit_count = dag.qubit_count;
    rev.cbit_count = 0;
    for (auto it = dag.nodes.rbegin(); it != dag.nodes.rend(); ++it)
        if (it->kind != GateKind::Measure && it->kind != GateKind::Barrier)
            rev.nodes.push_back(*it);
    return rev;
}

inline double attempt_score(const CostReport& r, const RouterConfig& cfg) {
    return cfg.w_g * r.c_count + cfg.w_d * r.c_depth;
}

} // namespace router_detail

/// Bidirectional layout refinement: forward/reverse passes feed each other's
/// final mapping; returns the initial mapping whose forward pass scored best.
inline Mapping bidirectional_layout(const CircuitDag& dag, const CouplingGraph& graph,
                                    const IsaSpec& isa, const RouterConfig& cfg) {
    using namespace router_detail;
    std::mt19937_64 rng(splitmix(cfg.seed ^ 0xb1d1ull));
    Mapping cur = random_mapping(graph.n, rng);
    if (cfg.rounds <= 0) return cur;
    CircuitDag rev = reversed_for_layout(dag);
    Mapping best = cur;
    double best_score = std::numeric_limits<double>::infinity();
    for (int r = 0; r < cfg.rounds; ++r) {
        Pass fwd(dag, graph, isa, cfg, cur, splitmix(cfg.seed ^ (2 * r + 1)), false);
        RouteResult fr = fwd.run();
        double score = attempt_score(fr.report, cfg);
        if (score < best_score) {
            best_score = score;
            best = cur;
        }
        Pass bwd(rev, graph, isa, cfg, fr.final_map, splitmix(cfg.seed ^ (2 * r + 2)), false);
        cur = bwd.run().final_map;
    }
    return best;
}

inline RouteResult route(const CircuitDag& dag, const CouplingGraph& graph, const IsaSpec& isa,
                         const RouterConfig& cfg) {
    using namespace router_detail;
    if (graph.n < dag.qubit_count)
        throw GraphTooSmall("graph has " + std::to_string(graph.n) + " qubits, circuit needs " +
                            std::to_string(dag.qubit_count));
    bool have_best = false;
    RouteResult best;
    double best_score = std::numeric_limits<double>::infinity();
    int attempts = std::max(1, cfg.trials) * std::max(1, cfg.layout_restarts);
    for (int a = 0; a < attempts; ++a) {
        RouterConfig acfg = cfg;
        acfg.seed = splitmix(cfg.seed + 0x51ab5ull * (a + 1));
        Mapping init = bidirectional_layout(dag, graph, isa, acfg);
        Pass pass(dag, graph, isa, acfg, init, splitmix(acfg.seed ^ 0xf17a1ull));
        RouteResult r = pass.run();
        r.initial = init;
        double score = attempt_score(r.report, cfg);
        if (!have_best || score < best_score - 1e-12) {
            have_best = true;
            best_score = score;
            best = std::move(r);
        }
    }
    return best;
}

/// Plain-SABRE baseline: distance+decay heuristic, explicit SWAPs, costs
/// reported in three-CX units.
inline RouteResult route_baseline(const CircuitDag& dag, const CouplingGraph& graph,
                                  const RouterConfig& cfg) {
    RouterConfig bcfg = cfg;
    bcfg.mode = RouterMode::sabre_baseline;
    return route(dag, graph, builtin_isa("CX"), bcfg);
}

} // namespace qroute
