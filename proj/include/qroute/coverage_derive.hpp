#pragma once

// Numerical derivation of ISA coverage sets. For every multiset of basis
// gates within a cost budget, the reachable set of canonical coefficients
// (with arbitrary interleaved 1Q gates) is probed on a Weyl-chamber grid:
// forward sampling proposes candidate cells, Levenberg-Marquardt refinement
// over the interleaved 1Q Euler angles confirms them, and confirmed cells
// are merged into axis-aligned boxes. Inclusion is conservative: a cell
// enters a region only when optimization reproduces its center to 1e-6.

#include "canonical.hpp"
#include "isa.hpp"

#include <atomic>
#include <functional>
#include <future>
#include <map>
#include <set>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace qroute {

class BudgetTooSmall : public std::runtime_error {
public:
    explicit BudgetTooSmall(const std::string& what) : std::runtime_error(what) {}
};

struct DeriveOptions {
    int max_gates = 4;        // cap on multiset size (keeps optimization tractable)
    int restarts = 16;        // optimizer starts per target cell
    int samples_per_factor = 1500;  // forward samples per interleaved 1Q pair
    double coeff_tol = 1e-6;  // certification threshold in coefficient space
    uint64_t seed = 0x9e3779b97f4a7c15ull;
    int threads = 0;          // 0 = hardware concurrency
};

namespace derive_detail {

struct Cell {
    int ia = 0, ib = 0, ic = 0;
    bool operator<(const Cell& o) const {
        return std::tie(ia, ib, ic) < std::tie(o.ia, o.ib, o.ic);
    }
    bool operator==(const Cell& o) const { return ia == o.ia && ib == o.ib && ic == o.ic; }
};

inline int64_t cell_key(const Cell& c) {
    return (int64_t(c.ia) << 32) | (int64_t(c.ib) << 16) | int64_t(c.ic + (1 << 14));
}

/// All representative cells of the normalized region at the given pitch.
inline std::vector<Cell> chamber_cells(int steps) {
    std::vector<Cell> cells;
    for (int ia = 0; ia <= steps; ++ia)
        for (int ib = 0; ib <= ia; ++ib)
            for (int ic = -ib; ic <= ib; ++ic) {
                if (ia == steps && ic < 0) continue;
                cells.push_back({ia, ib, ic});
            }
    return cells;
}

inline Cell nearest_cell(const CanonicalCoeffs& k, double step, int steps) {
    Cell c{static_cast<int>(std::lround(k.a / step)), static_cast<int>(std::lround(k.b / step)),
           static_cast<int>(std::lround(k.c / step))};
    if (c.ia == steps && c.ic < 0) c.ic = -c.ic;
    return c;
}

inline CanonicalCoeffs cell_center(const Cell& c, double step) {
    return {c.ia * step, c.ib * step, c.ic * step};
}

// Local-equivalence invariants (complete for SU(4)): the complex Makhlin
// invariant tr^2(m)/16 and the real (tr^2(m) - tr(m^2))/4 with m = M^T M in
// the magic basis. Smooth in the unitary, unlike the chamber coordinates.
inline Eigen::Vector3d makhlin_invariants(const Matrix4& u) {
    static const Matrix4 B = detail::magic_basis();
    Matrix4 M = B.adjoint() * u * B;
    Matrix4 m = M.transpose() * M;
    Complex trm = m.trace();
    Complex trm2 = (m * m).trace();
    Complex g1 = trm * trm / 16.0;
    Complex g2 = (trm * trm - trm2) / 4.0;
    return {g1.real(), g1.imag(), g2.real()};
}

/// Product of the multiset's canonical matrices with parameterized 1Q pairs
/// interleaved: C_1 (u_1 x v_1) C_2 ... C_k, 6(k-1) Euler angles.
class ProductEvaluator {
public:
    explicit ProductEvaluator(std::vector<Matrix4> gates) : gates_(std::move(gates)) {}

    int dim() const { return 6 * (static_cast<int>(gates_.size()) - 1); }

    Matrix4 product(const double* params) const {
        Matrix4 p = gates_[0];
        for (size_t i = 1; i < gates_.size(); ++i) {
            const double* e = params + 6 * (i - 1);
            p = p * local_pair(e) * gates_[i];
        }
        return p;
    }

    Eigen::Vector3d invariants(const double* params) const {
        return makhlin_invariants(product(params));
    }

private:
    static Matrix2 euler_zyz(double alpha, double beta, double gamma) {
        const Complex i(0, 1);
        double cb = std::cos(beta / 2), sb = std::sin(beta / 2);
        Matrix2 m;
        m << std::exp(-i * (alpha + gamma) / 2.0) * cb, -std::exp(-i * (alpha - gamma) / 2.0) * sb,
             std::exp(i * (alpha - gamma) / 2.0) * sb, std::exp(i * (alpha + gamma) / 2.0) * cb;
        return m;
    }

    static Matrix4 local_pair(const double* e) {
        Matrix2 u = euler_zyz(e[0], e[1], e[2]);
        Matrix2 v = euler_zyz(e[3], e[4], e[5]);
        Matrix4 m;
        for (int r0 = 0; r0 < 2; ++r0)
            for (int c0 = 0; c0 < 2; ++c0)
                for (int r1 = 0; r1 < 2; ++r1)
                    for (int c1 = 0; c1 < 2; ++c1)
                        m(r0 * 2 + r1, c0 * 2 + c1) = u(r0, c0) * v(r1, c1);
        return m;
    }

    std::vector<Matrix4> gates_;
};

/// Levenberg-Marquardt with a central-difference Jacobian over an arbitrary
/// residual function. Returns the final parameters.
inline std::vector<double> lm_minimize(const std::function<Eigen::VectorXd(const double*)>& res,
                                       int d, std::vector<double> params, int max_iters = 60) {
    double lambda = 1e-3;
    Eigen::VectorXd r = res(params.data());
    double cost = r.squaredNorm();
    for (int iter = 0; iter < max_iters && cost > 1e-28; ++iter) {
        Eigen::MatrixXd J(r.size(), d);
        const double h = 1e-5;
        for (int j = 0; j < d; ++j) {
            double saved = params[j];
            params[j] = saved + h;
            Eigen::VectorXd fp = res(params.data());
            params[j] = saved - h;
            J.col(j) = (fp - res(params.data())) / (2 * h);
            params[j] = saved;
        }
        Eigen::MatrixXd JtJ = J.transpose() * J;
        Eigen::VectorXd Jtr = J.transpose() * r;
        bool improved = false;
        for (int attempt = 0; attempt < 8; ++attempt) {
            Eigen::MatrixXd A = JtJ;
            A.diagonal().array() += lambda;
            Eigen::VectorXd delta = A.ldlt().solve(-Jtr);
            std::vector<double> trial = params;
            for (int j = 0; j < d; ++j) trial[j] += delta(j);
            Eigen::VectorXd rt = res(trial.data());
            double ct = rt.squaredNorm();
            if (ct < cost) {
                params = std::move(trial);
                r = rt;
                cost = ct;
                lambda = std::max(lambda * 0.35, 1e-12);
                improved = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!improved) break;
    }
    return params;
}

inline std::vector<double> lm_refine(const ProductEvaluator& eval, const Eigen::Vector3d& target,
                                     std::vector<double> params, int max_iters = 60) {
    return lm_minimize(
        [&](const double* p) -> Eigen::VectorXd {
            return eval.invariants(p) - target;
        },
        eval.dim(), std::move(params), max_iters);
}

inline Matrix4 magic_gram(const Matrix4& u) {
    static const Matrix4 B = detail::magic_basis();
    Matrix4 M = B.adjoint() * u * B;
    return M.transpose() * M;
}

/// Smooth residual whose zero set is exactly the target class: the minimal
/// polynomial of the magic Gram matrix over the target's distinct
/// eigenvalues, plus trace pins for the multiplicities. Unlike spectral
/// invariants this stays full-rank transverse to the class even when the
/// target spectrum is degenerate (divided differences hit p'(mu) != 0).
class MinPolyResidual {
public:
    MinPolyResidual(const ProductEvaluator& eval, const CanonicalCoeffs& target)
        : eval_(&eval) {
        Matrix4 mt = magic_gram(canonical_matrix(target));
        Eigen::Vector4cd lam = mt.diagonal();  // canonical reps are magic-diagonal
        tr_ = lam.sum();
        tr2_ = lam.array().square().sum();
        for (int j = 0; j < 4; ++j) {
            bool dup = false;
            for (const Complex& mu : mus_)
                if (std::abs(lam(j) - mu) < 1e-8) dup = true;
            if (!dup) mus_.push_back(lam(j));
        }
    }

    /// The Gram matrix is only defined up to sign (global phase i^k of the
    /// product); pick the branch once per start.
    void pick_branch(const double* params) {
        Complex tr = magic_gram(eval_->product(params)).trace();
        sign_ = (std::abs(tr - tr_) <= std::abs(tr + tr_)) ? 1.0 : -1.0;
    }

    Eigen::VectorXd operator()(const double* params) const {
        Matrix4 m = sign_ * magic_gram(eval_->product(params));
        Matrix4 poly = Matrix4::Identity();
        for (const Complex& mu : mus_) poly = poly * (m - mu * Matrix4::Identity());
        Eigen::VectorXd r(36);
        for (int i = 0; i < 16; ++i) {
            r(2 * i) = poly(i / 4, i % 4).real();
            r(2 * i + 1) = poly(i / 4, i % 4).imag();
        }
        Complex dtr = m.trace() - tr_;
        Complex dtr2 = (m * m).trace() - tr2_;
        r(32) = dtr.real();
        r(33) = dtr.imag();
        r(34) = dtr2.real();
        r(35) = dtr2.imag();
        return r;
    }

private:
    const ProductEvaluator* eval_;
    std::vector<Complex> mus_;
    Complex tr_, tr2_;
    double sign_ = 1.0;
};

/// Derivative-free simplex polish; used on the non-smooth coefficient-space
/// residual when invariant refinement lands just outside certification.
inline std::vector<double> nelder_mead(const std::function<double(const double*)>& f,
                                       std::vector<double> x0, double init_step, int max_iters) {
    const int d = static_cast<int>(x0.size());
    std::vector<std::pair<double, std::vector<double>>> simplex;
    simplex.reserve(d + 1);
    simplex.emplace_back(f(x0.data()), x0);
    for (int j = 0; j < d; ++j) {
        std::vector<double> v = x0;
        v[j] += init_step;
        simplex.emplace_back(f(v.data()), v);
    }
    auto cmp = [](const auto& a, const auto& b) { return a.first < b.first; };
    for (int iter = 0; iter < max_iters; ++iter) {
        std::sort(simplex.begin(), simplex.end(), cmp);
        if (simplex[0].first < 1e-9) break;
        std::vector<double> centroid(d, 0.0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) centroid[j] += simplex[i].second[j] / d;
        auto affine = [&](double t) {
            std::vector<double> v(d);
            for (int j = 0; j < d; ++j)
                v[j] = centroid[j] + t * (simplex[d].second[j] - centroid[j]);
            return v;
        };
        std::vector<double> refl = affine(-1.0);
        double fr = f(refl.data());
        if (fr < simplex[0].first) {
            std::vector<double> exp_v = affine(-2.0);
            double fe = f(exp_v.data());
            simplex[d] = fe < fr ? std::make_pair(fe, std::move(exp_v))
                                 : std::make_pair(fr, std::move(refl));
        } else if (fr < simplex[d - 1].first) {
            simplex[d] = {fr, std::move(refl)};
        } else {
            std::vector<double> con = affine(0.5);
            double fc = f(con.data());
            if (fc < simplex[d].first) {
                simplex[d] = {fc, std::move(con)};
            } else {
                for (int i = 1; i <= d; ++i) {
                    for (int j = 0; j < d; ++j)
                        simplex[i].second[j] =
                            simplex[0].second[j] + 0.5 * (simplex[i].second[j] - simplex[0].second[j]);
                    simplex[i].first = f(simplex[i].second.data());
                }
            }
        }
    }
    std::sort(simplex.begin(), simplex.end(), cmp);
    return simplex[0].second;
}

inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::future<void>> futs;
    for (int t = 0; t < threads; ++t)
        futs.push_back(std::async(std::launch::async, [&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        }));
    for (auto& f : futs) f.get();
}

struct Box {
    Cell lo, hi;
};

/// Greedy run-length merge of grid cells into axis-aligned boxes
/// (c runs, then b, then a).
inline std::vector<Box> merge_cells(const std::set<Cell>& cells) {
    // runs along c per (a, b) column
    struct Seg { int ia, ib, ic0, ic1; };
    std::vector<Seg> segs;
    for (auto it = cells.begin(); it != cells.end();) {
        Seg s{it->ia, it->ib, it->ic, it->ic};
        auto nx = std::next(it);
        while (nx != cells.end() && nx->ia == s.ia && nx->ib == s.ib && nx->ic == s.ic1 + 1) {
            s.ic1 = nx->ic;
            ++nx;
        }
        segs.push_back(s);
        it = nx;
    }
    // merge segments along b
    struct Rect { int ia, ib0, ib1, ic0, ic1; };
    std::vector<Rect> rects;
    std::sort(segs.begin(), segs.end(), [](const Seg& x, const Seg& y) {
        return std::tie(x.ia, x.ic0, x.ic1, x.ib) < std::tie(y.ia, y.ic0, y.ic1, y.ib);
    });
    for (size_t i = 0; i < segs.size();) {
        Rect r{segs[i].ia, segs[i].ib, segs[i].ib, segs[i].ic0, segs[i].ic1};
        size_t j = i + 1;
        while (j < segs.size() && segs[j].ia == r.ia && segs[j].ic0 == r.ic0 &&
               segs[j].ic1 == r.ic1 && segs[j].ib == r.ib1 + 1) {
            r.ib1 = segs[j].ib;
            ++j;
        }
        rects.push_back(r);
        i = j;
    }
    // merge rectangles along a
    std::vector<Box> boxes;
    std::sort(rects.begin(), rects.end(), [](const Rect& x, const Rect& y) {
        return std::tie(x.ib0, x.ib1, x.ic0, x.ic1, x.ia) <
               std::tie(y.ib0, y.ib1, y.ic0, y.ic1, y.ia);
    });
    for (size_t i = 0; i < rects.size();) {
        Box b{{rects[i].ia, rects[i].ib0, rects[i].ic0}, {rects[i].ia, rects[i].ib1, rects[i].ic1}};
        size_t j = i + 1;
        while (j < rects.size() && rects[j].ib0 == b.lo.ib && rects[j].ib1 == b.hi.ib &&
               rects[j].ic0 == b.lo.ic && rects[j].ic1 == b.hi.ic && rects[j].ia == b.hi.ia + 1) {
            b.hi.ia = rects[j].ia;
            ++j;
        }
        boxes.push_back(b);
        i = j;
    }
    return boxes;
}

inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t multiset_hash(const std::vector<const BasisGate*>& gates, uint64_t seed) {
    uint64_t h = seed;
    for (const auto* g : gates) {
        for (char ch : g->name) h = mix64(h ^ static_cast<uint64_t>(ch));
        h = mix64(h ^ static_cast<uint64_t>(std::llround(g->cost * 1e9)));
    }
    return h;
}

} // namespace derive_detail

/// Reachability confirmation for a single target class from one gate
/// multiset: multi-start LM refinement certified in coefficient space.
inline bool confirm_reachable(const std::vector<const BasisGate*>& gates,
                              const CanonicalCoeffs& target,
                              const std::vector<std::vector<double>>& seed_params,
                              const DeriveOptions& opts, uint64_t salt,
                              std::vector<double>* out_params = nullptr) {
    using namespace derive_detail;
    if (gates.size() == 1) return normalize_coeffs(gates[0]->coeffs).approx_equal(target, opts.coeff_tol);
    std::vector<Matrix4> mats;
    for (const auto* g : gates) mats.push_back(canonical_matrix(g->coeffs));
    ProductEvaluator eval(std::move(mats));
    Eigen::Vector3d tinv = makhlin_invariants(canonical_matrix(target));
    MinPolyResidual minpoly(eval, target);
    std::mt19937_64 rng(mix64(multiset_hash(gates, opts.seed) ^ salt));
    std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
    auto coeff_err = [&](const double* x) {
        CanonicalCoeffs k = weyl_coordinates(eval.product(x), 0x5eedull ^ salt);
        double err = std::max({std::abs(k.a - target.a), std::abs(k.b - target.b),
                               std::abs(k.c - target.c)});
        // on the a = 1/2 face, (1/2, b, -c) is the same class as (1/2, b, c)
        if (std::abs(target.a - 0.5) <= 1e-12)
            err = std::min(err, std::max({std::abs(k.a - target.a), std::abs(k.b - target.b),
                                          std::abs(k.c + target.c)}));
        return err;
    };

    std::vector<double> best;
    double best_err = std::numeric_limits<double>::infinity();
    for (int start = 0; start < opts.restarts; ++start) {
        std::vector<double> p;
        if (start < static_cast<int>(seed_params.size()))
            p = seed_params[start];
        else {
            p.resize(eval.dim());
            for (auto& x : p) x = ang(rng);
        }
        p = lm_refine(eval, tinv, std::move(p), 30);
        minpoly.pick_branch(p.data());
        p = lm_minimize([&](const double* x) { return minpoly(x); }, eval.dim(), std::move(p), 50);
        double err = coeff_err(p.data());
        if (err < best_err) {
            best_err = err;
            best = std::move(p);
        }
        if (best_err <= opts.coeff_tol) {
            if (out_params) *out_params = std::move(best);
            return true;
        }
        // all seeded starts agree the target sits outside the reachable set
        if (start >= 7 && best_err > 2e-2) break;
    }
    if (best_err < 2e-2) {
        // invariant refinement stalls quadratically at degenerate classes;
        // polish directly in coefficient space with restarted simplexes
        for (int round = 0; round < 4 && best_err > opts.coeff_tol; ++round) {
            best = nelder_mead(coeff_err, std::move(best), std::max(2.0 * best_err, 1e-4), 500);
            double err = coeff_err(best.data());
            if (err >= best_err * 0.7) {
                best_err = std::min(err, best_err);
                break;  // stagnating: boundary-limited, not degeneracy
            }
            best_err = err;
        }
    }
    if (best_err <= opts.coeff_tol) {
        if (out_params) *out_params = std::move(best);
        return true;
    }
    return false;
}

/// Derives the full coverage list (ascending, cumulative cost levels) for a
/// basis under a budget. Throws BudgetTooSmall if the chamber grid is not
/// fully covered.
inline std::vector<CoverageEntry> derive_coverage(const std::vector<BasisGate>& basis,
                                                  double budget, double grid_step,
                                                  const DeriveOptions& opts = {}) {
    using namespace derive_detail;
    if (basis.empty()) throw std::invalid_argument("derive_coverage: empty basis");
    const int steps = static_cast<int>(std::round(0.5 / grid_step));
    const double step = 0.5 / steps;
    const std::vector<Cell> all_cells = chamber_cells(steps);
    const size_t full_count = all_cells.size() - 1;  // identity cell excluded

    // enumerate multisets (by basis index, non-decreasing), grouped by total cost
    std::map<int64_t, std::vector<std::vector<int>>> groups;
    std::vector<int> cur;
    std::function<void(int, double)> enumerate = [&](int lo, double cost) {
        if (!cur.empty()) groups[std::llround(cost * 1e9)].push_back(cur);
        if (static_cast<int>(cur.size()) >= opts.max_gates) return;
        for (int i = lo; i < static_cast<int>(basis.size()); ++i) {
            if (cost + basis[i].cost > budget + 1e-9) continue;
            cur.push_back(i);
            enumerate(i, cost + basis[i].cost);
            cur.pop_back();
        }
    };
    enumerate(0, 0.0);

    std::set<Cell> reached;
    std::vector<std::pair<double, CanonicalCoeffs>> exact_points;
    std::vector<CoverageEntry> coverage;
    bool full = false;

    auto in_chamber = [&](const Cell& c) {
        return c.ia >= 0 && c.ia <= steps && c.ib >= 0 && c.ib <= c.ia && std::abs(c.ic) <= c.ib &&
               !(c.ia == steps && c.ic < 0);
    };

    for (const auto& [cost_key, multisets] : groups) {
        if (full) break;
        const double level_cost = cost_key / 1e9;
        std::set<Cell> reached_now;
        bool new_points = false;

        for (const auto& ms : multisets) {
            std::vector<const BasisGate*> gates;
            for (int i : ms) gates.push_back(&basis[i]);

            if (gates.size() == 1) {
                CanonicalCoeffs k = normalize_coeffs(gates[0]->coeffs);
                exact_points.emplace_back(level_cost, k);
                new_points = true;
                Cell c = nearest_cell(k, step, steps);
                if (cell_center(c, step).approx_equal(k, 1e-9)) reached_now.insert(c);
                continue;
            }

            std::vector<Matrix4> mats;
            for (const auto* g : gates) mats.push_back(canonical_matrix(g->coeffs));
            ProductEvaluator eval(std::move(mats));
            const int d = eval.dim();
            const uint64_t mh = multiset_hash(gates, opts.seed);

            // forward sampling proposes initial cells; confirmed parameters
            // then seed a continuation wavefront through neighboring cells
            struct Sample { double dist; std::vector<double> params; };
            std::unordered_map<int64_t, std::vector<Sample>> pool;
            {
                std::mt19937_64 rng(mh);
                std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
                int n_samples = opts.samples_per_factor * (d / 6);
                std::vector<double> p(d);
                for (int s = 0; s < n_samples; ++s) {
                    for (auto& x : p) x = ang(rng);
                    CanonicalCoeffs k = weyl_coordinates(eval.product(p.data()), 0x5a11ull);
                    Cell c = nearest_cell(k, step, steps);
                    CanonicalCoeffs cc = cell_center(c, step);
                    double dist = std::max({std::abs(k.a - cc.a), std::abs(k.b - cc.b),
                                            std::abs(k.c - cc.c)});
                    auto& v = pool[cell_key(c)];
                    v.push_back({dist, p});
                    if (v.size() > 4) {
                        std::sort(v.begin(), v.end(),
                                  [](const Sample& x, const Sample& y) { return x.dist < y.dist; });
                        v.resize(4);
                    }
                }
            }

            std::vector<std::pair<Cell, const std::vector<double>*>> pool_reps;
            for (const Cell& c : all_cells) {
                auto it = pool.find(cell_key(c));
                if (it != pool.end()) pool_reps.emplace_back(c, &it->second.front().params);
            }

            std::unordered_map<int64_t, std::vector<double>> confirmed;  // cell -> params
            std::set<Cell> confirmed_cells;
            std::set<Cell> attempted;
            std::set<Cell> wave;
            for (const Cell& c : all_cells)
                if (!reached.count(c) && !reached_now.count(c)) {
                    bool near = false;
                    for (int da = -1; da <= 1 && !near; ++da)
                        for (int db = -1; db <= 1 && !near; ++db)
                            for (int dc = -1; dc <= 1 && !near; ++dc)
                                near = pool.count(cell_key({c.ia + da, c.ib + db, c.ic + dc})) > 0;
                    if (near) wave.insert(c);
                }

            while (true) {
            while (!wave.empty()) {
                attempted.insert(wave.begin(), wave.end());
                std::vector<Cell> candidates(wave.begin(), wave.end());
                wave.clear();
                std::vector<char> ok(candidates.size(), 0);
                std::vector<std::vector<double>> final_params(candidates.size());
                parallel_for(static_cast<int>(candidates.size()), opts.threads, [&](int idx) {
                    const Cell& c = candidates[idx];
                    CanonicalCoeffs target = cell_center(c, step);
                    std::vector<std::pair<double, const std::vector<double>*>> near;
                    for (int da = -1; da <= 1; ++da)
                        for (int db = -1; db <= 1; ++db)
                            for (int dc = -1; dc <= 1; ++dc) {
                                int64_t key = cell_key({c.ia + da, c.ib + db, c.ic + dc});
                                int hop = std::abs(da) + std::abs(db) + std::abs(dc);
                                auto cit = confirmed.find(key);
                                if (cit != confirmed.end())
                                    near.emplace_back(step * hop, &cit->second);
                                auto it = pool.find(key);
                                if (it != pool.end())
                                    for (const auto& s : it->second)
                                        near.emplace_back(s.dist + step * hop, &s.params);
                            }
                    if (near.empty()) {
                        // no local seed: fall back to the globally nearest
                        // confirmed parameters and pool samples
                        auto chdist = [&](const Cell& o) {
                            return static_cast<double>(std::max(
                                {std::abs(o.ia - c.ia), std::abs(o.ib - c.ib),
                                 std::abs(o.ic - c.ic)}));
                        };
                        for (const Cell& cc : confirmed_cells)
                            near.emplace_back(chdist(cc), &confirmed.at(cell_key(cc)));
                        for (const auto& [pc, sp] : pool_reps)
                            near.emplace_back(chdist(pc) + 0.5, sp);
                    }
                    std::sort(near.begin(), near.end(),
                              [](const auto& x, const auto& y) { return x.first < y.first; });
                    std::vector<std::vector<double>> seeds;
                    for (size_t i = 0;
                         i < near.size() && i < static_cast<size_t>(opts.restarts - 4); ++i)
                        seeds.push_back(*near[i].second);
                    final_params[idx].resize(d);
                    ok[idx] = confirm_reachable(gates, target, seeds, opts, cell_key(c),
                                                &final_params[idx]);
                });
                for (size_t i = 0; i < candidates.size(); ++i) {
                    if (!ok[i]) continue;
                    const Cell& c = candidates[i];
                    reached_now.insert(c);
                    confirmed_cells.insert(c);
                    confirmed[cell_key(c)] = std::move(final_params[i]);
                    for (int da = -1; da <= 1; ++da)
                        for (int db = -1; db <= 1; ++db)
                            for (int dc = -1; dc <= 1; ++dc) {
                                Cell nb{c.ia + da, c.ib + db, c.ic + dc};
                                if (in_chamber(nb) && !reached.count(nb) &&
                                    !reached_now.count(nb) && !confirmed_cells.count(nb))
                                    wave.insert(nb);
                            }
                }
            }

            // Rescue pass: prior cost levels can cover a moat around a
            // pocket of unreached cells, leaving the wavefront no path to
            // them. Attempt small connected pockets that were never tried,
            // using the global-nearest seeds above, then resume the wave.
            std::set<Cell> unreached_set;
            for (const Cell& c : all_cells)
                if (!reached.count(c) && !reached_now.count(c) &&
                    !(c.ia == 0 && c.ib == 0 && c.ic == 0))
                    unreached_set.insert(c);
            std::set<Cell> visited;
            for (const Cell& start : unreached_set) {
                if (visited.count(start)) continue;
                std::vector<Cell> comp{start};
                visited.insert(start);
                bool touched = false;
                for (size_t i = 0; i < comp.size(); ++i) {
                    const Cell c = comp[i];
                    if (attempted.count(c)) touched = true;
                    for (int da = -1; da <= 1; ++da)
                        for (int db = -1; db <= 1; ++db)
                            for (int dc = -1; dc <= 1; ++dc) {
                                Cell nb{c.ia + da, c.ib + db, c.ic + dc};
                                if (unreached_set.count(nb) && !visited.count(nb)) {
                                    visited.insert(nb);
                                    comp.push_back(nb);
                                }
                            }
                }
                if (!touched && comp.size() <= 200)
                    wave.insert(comp.begin(), comp.end());
            }
            if (wave.empty()) break;
            }  // outer wave/rescue loop
        }

        if (reached_now.empty() && !new_points) continue;
        reached.insert(reached_now.begin(), reached_now.end());

        size_t covered = reached.size() - (reached.count({0, 0, 0}) ? 1 : 0);
        full = covered >= full_count;

        CoverageEntry entry;
        entry.cost = level_cost;
        if (full) {
            entry.region = {weyl_region()};
        } else {
            for (const Box& b : merge_cells(reached))
                entry.region.push_back(box_polytope(
                    Eigen::Vector3d(b.lo.ia * step, b.lo.ib * step, b.lo.ic * step),
                    Eigen::Vector3d(b.hi.ia * step, b.hi.ib * step, b.hi.ic * step)));
            for (const auto& [pc, pt] : exact_points)
                if (pc <= level_cost + 1e-9) entry.region.push_back(point_polytope(pt));
        }
        coverage.push_back(std::move(entry));
    }

    if (!full) {
        std::string msg = "coverage incomplete at budget " + std::to_string(budget) +
                          "; uncovered cells:";
        int listed = 0;
        for (const Cell& c : all_cells) {
            if (c.ia == 0 && c.ib == 0 && c.ic == 0) continue;
            if (reached.count(c)) continue;
            if (listed++ >= 12) {
                msg += " ...";
                break;
            }
            CanonicalCoeffs k = cell_center(c, step);
            msg += " (" + std::to_string(k.a) + "," + std::to_string(k.b) + "," +
                   std::to_string(k.c) + ")";
        }
        throw BudgetTooSmall(msg);
    }
    return coverage;
}

/// Full ISA derivation: coverage plus the cached SWAP cost.
inline IsaSpec derive_isa(const std::string& name, const std::vector<BasisGate>& basis,
                          double budget, double grid_step, const DeriveOptions& opts = {}) {
    IsaSpec isa;
    isa.name = name;
    isa.basis = basis;
    isa.coverage = derive_coverage(basis, budget, grid_step, opts);
    isa.swap_cost = synth_cost(isa, {0.5, 0.5, 0.5});
    return isa;
}

} // namespace qroute
