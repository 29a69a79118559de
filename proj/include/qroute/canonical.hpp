#pragma once

// Two-qubit canonical forms: Weyl-chamber coefficients, KAK decomposition,
// mirroring and commutation predicates. All coefficient triples (a, b, c)
// are in units of pi/2 rotations, i.e. Can(a,b,c) = exp(-i*pi/2*(a XX + b YY + c ZZ)),
// and normalized triples satisfy 1/2 >= a >= b >= |c| (c >= 0 when a = 1/2).

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <array>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <string>

namespace qroute {

using Complex = std::complex<double>;
using Matrix2 = Eigen::Matrix2cd;
using Matrix4 = Eigen::Matrix4cd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kUnitaryTol = 1e-10;
inline constexpr double kReconstructTol = 1e-9;
inline constexpr double kCoeffTol = 1e-9;

class NonUnitaryError : public std::runtime_error {
public:
    explicit NonUnitaryError(double err)
        : std::runtime_error("matrix is not unitary (deviation " + std::to_string(err) + ")") {}
};

class DecompositionFailure : public std::runtime_error {
public:
    explicit DecompositionFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Canonical coefficient triple (a, b, c).
struct CanonicalCoeffs {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;

    bool approx_equal(const CanonicalCoeffs& o, double tol = kCoeffTol) const {
        return std::abs(a - o.a) <= tol && std::abs(b - o.b) <= tol && std::abs(c - o.c) <= tol;
    }
    bool is_identity(double tol = 1e-8) const {
        return std::abs(a) <= tol && std::abs(b) <= tol && std::abs(c) <= tol;
    }
    bool is_normalized(double tol = kCoeffTol) const {
        if (!(0.5 + tol >= a && a + tol >= b && b + tol >= std::abs(c))) return false;
        if (std::abs(a - 0.5) <= tol && c < -tol) return false;
        return true;
    }
};

namespace detail {

inline const Matrix4& magic_basis() {
    static const Matrix4 b = [] {
        const Complex i(0, 1);
        Matrix4 m;
        m << 1, 0, 0, i,
             0, i, 1, 0,
             0, i, -1, 0,
             1, 0, 0, -i;
        return Matrix4(m / std::sqrt(2.0));
    }();
    return b;
}

// Diagonal of B^dag (P ⊗ P) B for P in {X, Y, Z}; these are real sign vectors.
inline const std::array<Eigen::Vector4d, 3>& pauli_pair_diagonals() {
    static const std::array<Eigen::Vector4d, 3> diags = [] {
        Matrix2 x, y, z;
        x << 0, 1, 1, 0;
        y << 0, Complex(0, -1), Complex(0, 1), 0;
        z << 1, 0, 0, -1;
        const Matrix4& b = magic_basis();
        std::array<Eigen::Vector4d, 3> out;
        const std::array<Matrix2, 3> paulis{x, y, z};
        for (int k = 0; k < 3; ++k) {
            Matrix4 pp = Eigen::kroneckerProduct(paulis[k], paulis[k]);
            Matrix4 d = b.adjoint() * pp * b;
            for (int j = 0; j < 4; ++j) out[k](j) = d(j, j).real();
        }
        return out;
    }();
    return diags;
}

inline double frobenius_distance(const Matrix4& u, const Matrix4& v) {
    return (u - v).norm();
}

} // namespace detail

inline bool is_unitary(const Matrix4& u, double tol = kUnitaryTol) {
    return (u.adjoint() * u - Matrix4::Identity()).norm() <= tol;
}

inline void check_unitary(const Matrix4& u, double tol = kUnitaryTol) {
    double err = (u.adjoint() * u - Matrix4::Identity()).norm();
    if (err > tol) throw NonUnitaryError(err);
}

/// Rescale to unit determinant; returns the removed phase factor p with
/// input = p * output.
inline Complex to_special(Matrix4& u) {
    Complex det = u.determinant();
    Complex root = std::pow(det, 0.25);
    u /= root;
    return root;
}

/// The canonical gate matrix Can(a,b,c), basis order |00>, |01>, |10>, |11>.
inline Matrix4 canonical_matrix(const CanonicalCoeffs& k) {
    const Complex i(0, 1);
    const double hp = kPi / 2.0;
    const Complex em = std::exp(-i * (k.c * hp));
    const Complex ep = std::exp(i * (k.c * hp));
    const double cm = std::cos((k.a - k.b) * hp);
    const double sm = std::sin((k.a - k.b) * hp);
    const double cp = std::cos((k.a + k.b) * hp);
    const double sp = std::sin((k.a + k.b) * hp);
    Matrix4 m;
    m << em * cm, 0, 0, -i * em * sm,
         0, ep * cp, -i * ep * sp, 0,
         0, -i * ep * sp, ep * cp, 0,
         -i * em * sm, 0, 0, em * cm;
    return m;
}

/// Unique Weyl-chamber representative reachable via the local-equivalence
/// rules (permutation, pairwise sign flip, integer shift, c-sign flip at
/// a = 1/2). Idempotent.
inline CanonicalCoeffs normalize_coeffs(double ra, double rb, double rc) {
    auto reduce = [](double x) {
        double y = x - std::floor(x + 0.5);   // (-1/2, 1/2] up to fp edge
        if (y <= -0.5) y += 1.0;
        return y + 0.0;                       // flush -0.0
    };
    std::array<double, 3> v{reduce(ra), reduce(rb), reduce(rc)};
    // stable descending sort by |v|
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2 - i; ++j)
            if (std::abs(v[j]) < std::abs(v[j + 1])) std::swap(v[j], v[j + 1]);
    if (v[0] < 0 && v[1] < 0) {
        v[0] = -v[0];
        v[1] = -v[1];
    } else if (v[0] < 0) {
        v[0] = -v[0];
        v[2] = -v[2] + 0.0;
    }
    if (v[1] < 0) {
        v[1] = -v[1];
        v[2] = -v[2] + 0.0;
    }
    if (std::abs(v[0] - 0.5) <= 1e-12 && v[2] < 0) {
        v[0] = 0.5;
        v[2] = -v[2];
    }
    return {v[0], v[1], v[2] + 0.0};
}

inline CanonicalCoeffs normalize_coeffs(const CanonicalCoeffs& k) {
    return normalize_coeffs(k.a, k.b, k.c);
}

/// Normalized coefficients of SWAP * Can(coeffs).
inline CanonicalCoeffs mirror_coeffs(const CanonicalCoeffs& k) {
    if (k.c >= 0) return normalize_coeffs(0.5 - k.c, 0.5 - k.b, k.a - 0.5);
    return normalize_coeffs(0.5 + k.c, 0.5 - k.b, 0.5 - k.a);
}

enum class QubitOverlap { None, One, Both };

/// Commutation of two canonical parts. Gates sharing one qubit commute iff
/// both are pure XX rotations; disjoint gates always commute; gates on the
/// same pair have commuting canonical parts (shared magic eigenbasis).
inline bool commutes(const CanonicalCoeffs& g1, const CanonicalCoeffs& g2, QubitOverlap overlap,
                     double tol = kCoeffTol) {
    switch (overlap) {
    case QubitOverlap::None:
    case QubitOverlap::Both:
        return true;
    case QubitOverlap::One:
        return std::abs(g1.b) <= tol && std::abs(g1.c) <= tol && std::abs(g2.b) <= tol &&
               std::abs(g2.c) <= tol;
    }
    return false;
}

/// KAK factors: u = global_phase * (after_0 ⊗ after_1) * Can(coeffs) * (before_0 ⊗ before_1).
struct KakFactors {
    Complex global_phase{1.0, 0.0};
    Matrix2 before_0 = Matrix2::Identity();
    Matrix2 before_1 = Matrix2::Identity();
    Matrix2 after_0 = Matrix2::Identity();
    Matrix2 after_1 = Matrix2::Identity();
    CanonicalCoeffs coeffs;

    Matrix4 reconstruct() const {
        return global_phase * (Eigen::kroneckerProduct(after_0, after_1) * canonical_matrix(coeffs) *
                               Eigen::kroneckerProduct(before_0, before_1));
    }
};

/// Factors of SWAP * u for u = phase * (A0 ⊗ A1) * Can(k) * (B0 ⊗ B1).
/// SWAP = exp(i pi/4) * Can(1/2,1/2,1/2) commutes past the outgoing locals
/// by exchanging wires and adds 1/2 to each coefficient; the shifted triple
/// is brought back to the Weyl chamber by replaying the normalize_coeffs
/// moves with their local-Clifford factors tracked. No fresh decomposition
/// is needed, and the result lands on the same chamber point bit for bit.
inline KakFactors swap_fold(const KakFactors& f) {
    static const Matrix2 kX = (Matrix2() << 0, 1, 1, 0).finished();
    static const Matrix2 kY =
        (Matrix2() << 0, Complex(0, -1), Complex(0, 1), 0).finished();
    static const Matrix2 kZ = (Matrix2() << 1, 0, 0, -1).finished();
    static const Matrix2 kS = (Matrix2() << 1, 0, 0, Complex(0, 1)).finished();
    // RX(pi/2): two-sided conjugation exchanges the YY and ZZ weights
    static const Matrix2 kV = [] {
        const double s = 1.0 / std::sqrt(2.0);
        return (Matrix2() << Complex(s, 0), Complex(0, -s), Complex(0, -s), Complex(s, 0))
            .finished();
    }();
    static const std::array<Matrix2, 3> kPauli{kX, kY, kZ};
    static const Complex kMinusIPow[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
    const Complex I(0, 1);

    std::array<double, 3> v{f.coeffs.a + 0.5, f.coeffs.b + 0.5, f.coeffs.c + 0.5};
    Complex phase = f.global_phase * std::exp(I * (kPi / 4.0));
    Matrix2 l0 = f.after_1, l1 = f.after_0;  // SWAP (A0 ⊗ A1) = (A1 ⊗ A0) SWAP
    Matrix2 r0 = Matrix2::Identity(), r1 = Matrix2::Identity();

    // integer reduction: Can(.., x - m, ..) = (i P ⊗ P)^m Can(.., x, ..)
    for (int j = 0; j < 3; ++j) {
        double y = v[j] - std::floor(v[j] + 0.5);
        if (y <= -0.5) y += 1.0;
        y += 0.0;
        long m = std::lround(v[j] - y);
        if (m != 0) {
            phase *= kMinusIPow[((m % 4) + 4) % 4];
            if (m & 1) {
                l0 = l0 * kPauli[j];
                l1 = l1 * kPauli[j];
            }
        }
        v[j] = y;
    }
    auto conj_pair = [&](const Matrix2& c) {  // Can(v) = (C⊗C)' Can(v') (C⊗C)
        l0 = l0 * c.adjoint();
        l1 = l1 * c.adjoint();
        r0 = c * r0;
        r1 = c * r1;
    };
    auto conj_one = [&](const Matrix2& c) {  // Can(v) = (C⊗I) Can(v') (C⊗I)
        l0 = l0 * c.adjoint();
        r0 = c * r0;
    };
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2 - i; ++j)
            if (std::abs(v[j]) < std::abs(v[j + 1])) {
                std::swap(v[j], v[j + 1]);
                conj_pair(j == 0 ? kS : kV);
            }
    if (v[0] < 0 && v[1] < 0) {
        v[0] = -v[0];
        v[1] = -v[1];
        conj_one(kZ);
    } else if (v[0] < 0) {
        v[0] = -v[0];
        v[2] = -v[2] + 0.0;
        conj_one(kY);
    }
    if (v[1] < 0) {
        v[1] = -v[1];
        v[2] = -v[2] + 0.0;
        conj_one(kX);
    }
    if (std::abs(v[0] - 0.5) <= 1e-12 && v[2] < 0) {
        v[0] = 0.5;
        v[2] = -v[2];
        // Can(1/2, b, c) = i (YX ⊗ X) Can(1/2, b, -c) (Y ⊗ I)
        phase *= I;
        l0 = l0 * (kY * kX);
        l1 = l1 * kX;
        r0 = kY * r0;
    }
    KakFactors out;
    out.global_phase = phase;
    out.after_0 = l0;
    out.after_1 = l1;
    out.before_0 = r0 * f.before_0;
    out.before_1 = r1 * f.before_1;
    out.coeffs = {v[0], v[1], v[2] + 0.0};
    return out;
}

namespace detail {

// Split a 4x4 tensor product (up to phase) into phase * (a ⊗ b) with
// det(a) = det(b) = 1. Uses the rank-1 structure of the block rearrangement.
inline void kron_split(const Matrix4& m, Complex& phase, Matrix2& a, Matrix2& b) {
    // R[(r0*2+c0), (r1*2+c1)] = m[r0*2+r1, c0*2+c1]; rank 1 when m = a ⊗ b
    Matrix4 r;
    for (int r0 = 0; r0 < 2; ++r0)
        for (int c0 = 0; c0 < 2; ++c0)
            for (int r1 = 0; r1 < 2; ++r1)
                for (int c1 = 0; c1 < 2; ++c1)
                    r(r0 * 2 + c0, r1 * 2 + c1) = m(r0 * 2 + r1, c0 * 2 + c1);
    Eigen::JacobiSVD<Matrix4> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    double s = svd.singularValues()(0);
    Eigen::Vector4cd u = svd.matrixU().col(0);
    Eigen::Vector4cd v = svd.matrixV().col(0).conjugate();
    a << u(0), u(1), u(2), u(3);
    b << v(0), v(1), v(2), v(3);
    a *= std::sqrt(s);
    b *= std::sqrt(s);
    Complex da = std::sqrt(a.determinant());
    Complex db = std::sqrt(b.determinant());
    a /= da;
    b /= db;
    phase = da * db;
}

// Diagonalize a unitary complex symmetric matrix: m = p * diag(d) * p^T with
// p real orthogonal, det(p) = +1.
inline bool diagonalize_complex_symmetric(const Matrix4& m, Eigen::Matrix4d& p,
                                          Eigen::Vector4cd& d, std::mt19937_64& rng) {
    Eigen::Matrix4d x = m.real();
    Eigen::Matrix4d y = m.imag();
    std::uniform_real_distribution<double> dist(0.1, 2.0);
    for (int attempt = 0; attempt < 24; ++attempt) {
        double t = (attempt == 0) ? 0.31854 : dist(rng);
        Eigen::Matrix4d mix = x + t * y;
        mix = 0.5 * (mix + mix.transpose().eval());
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(mix);
        p = es.eigenvectors();
        Matrix4 dd = p.transpose() * m * p;
        double offdiag = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                if (i != j) offdiag = std::max(offdiag, std::abs(dd(i, j)));
        if (offdiag < 1e-11) {
            if (p.determinant() < 0) p.col(0) *= -1.0;
            for (int i = 0; i < 4; ++i) d(i) = dd(i, i);
            return true;
        }
    }
    return false;
}

struct RawKak {
    Complex phase;
    Matrix4 left;   // in SU(2)⊗SU(2)
    Matrix4 right;  // in SU(2)⊗SU(2)
    CanonicalCoeffs coeffs;  // not necessarily normalized
};

// One magic-basis KAK attempt without coefficient normalization.
inline bool raw_kak(const Matrix4& u_in, RawKak& out, std::mt19937_64& rng) {
    Matrix4 u = u_in;
    Complex phase = to_special(u);
    const Matrix4& bm = magic_basis();
    Matrix4 mp = bm.adjoint() * u * bm;
    Matrix4 m2 = mp.transpose() * mp;
    Eigen::Matrix4d p;
    Eigen::Vector4cd d;
    if (!diagonalize_complex_symmetric(m2, p, d, rng)) return false;

    Eigen::Vector4d theta;
    for (int i = 0; i < 4; ++i) theta(i) = std::arg(d(i)) / 2.0;
    double s = theta.sum();
    // branch fix so that sum(theta) == 0 mod 2*pi (keeps left factor in SO(4))
    double k = std::round(s / kPi);
    if (std::abs(s - k * kPi) > 1e-6) return false;
    if (static_cast<long long>(k) % 2 != 0) theta(0) += kPi;

    Eigen::Vector4cd exp_mth, exp_pth;
    for (int i = 0; i < 4; ++i) {
        exp_mth(i) = std::exp(Complex(0, -theta(i)));
        exp_pth(i) = std::exp(Complex(0, theta(i)));
    }
    Matrix4 o1 = mp * p * exp_mth.asDiagonal();
    if (o1.imag().cwiseAbs().maxCoeff() > 1e-8) return false;

    // diag(theta) = a0*1 + a1*sx + a2*sy + a3*sz (orthogonal sign vectors)
    const auto& sgn = pauli_pair_diagonals();
    double a0 = theta.sum() / 4.0;
    double ax = theta.dot(sgn[0]) / 4.0;
    double ay = theta.dot(sgn[1]) / 4.0;
    double az = theta.dot(sgn[2]) / 4.0;

    out.phase = phase * std::exp(Complex(0, a0));
    out.left = bm * o1.real() * bm.adjoint();
    out.right = bm * p.transpose() * bm.adjoint();
    out.coeffs = {-2.0 * ax / kPi, -2.0 * ay / kPi, -2.0 * az / kPi};
    return true;
}

// In-chamber reduction with exact matrix bookkeeping:
// phase * left * Can(coeffs) * right is kept invariant by every move.
inline void canonicalize_with_locals(RawKak& f) {
    const Complex i(0, 1);
    Matrix2 x2, y2, z2, s2, sx2, h2;
    x2 << 0, 1, 1, 0;
    y2 << 0, -i, i, 0;
    z2 << 1, 0, 0, -1;
    s2 << 1, 0, 0, i;                                   // S: swaps XX<->YY under conjugation
    sx2 << Complex(0.5, 0.5), Complex(0.5, -0.5),
           Complex(0.5, -0.5), Complex(0.5, 0.5);       // sqrt(X): swaps YY<->ZZ
    h2 = (Matrix2() << 1, 1, 1, -1).finished() / std::sqrt(2.0);  // H: swaps XX<->ZZ

    std::array<double*, 3> cf{&f.coeffs.a, &f.coeffs.b, &f.coeffs.c};
    std::array<Matrix2, 3> pauli{x2, y2, z2};

    // shift coefficient idx by -1: Can(v-1,...) = i * (P⊗P) * Can(v,...)
    auto shift_down = [&](int idx) {
        Matrix4 pp = Eigen::kroneckerProduct(pauli[idx], pauli[idx]);
        f.left = f.left * pp;
        f.phase *= -i;
        *cf[idx] -= 1.0;
    };
    auto shift_up = [&](int idx) {
        Matrix4 pp = Eigen::kroneckerProduct(pauli[idx], pauli[idx]);
        f.left = f.left * pp;
        f.phase *= i;
        *cf[idx] += 1.0;
    };
    // conjugation that exchanges coefficients idx and jdx
    auto swap_pair = [&](int idx, int jdx) {
        Matrix2 g;
        if ((idx == 0 && jdx == 1) || (idx == 1 && jdx == 0)) g = s2;
        else if ((idx == 1 && jdx == 2) || (idx == 2 && jdx == 1)) g = sx2;
        else g = h2;
        Matrix4 gg = Eigen::kroneckerProduct(g, g);
        f.left = f.left * gg;
        f.right = gg.adjoint() * f.right;
        std::swap(*cf[idx], *cf[jdx]);
    };
    // conjugation by P⊗I flipping the signs of the two coefficients != idx
    auto flip_others = [&](int idx) {
        Matrix4 gg = Eigen::kroneckerProduct(pauli[idx], Matrix2::Identity());
        f.left = f.left * gg;
        f.right = gg.adjoint() * f.right;
        for (int k = 0; k < 3; ++k)
            if (k != idx) *cf[k] = -*cf[k];
    };

    for (int idx = 0; idx < 3; ++idx) {
        while (*cf[idx] > 0.5 + 1e-12) shift_down(idx);
        while (*cf[idx] <= -0.5) shift_up(idx);
    }
    // stable |.|-descending order
    if (std::abs(*cf[0]) < std::abs(*cf[1])) swap_pair(0, 1);
    if (std::abs(*cf[1]) < std::abs(*cf[2])) swap_pair(1, 2);
    if (std::abs(*cf[0]) < std::abs(*cf[1])) swap_pair(0, 1);
    if (*cf[0] < 0 && *cf[1] < 0) flip_others(2);
    else if (*cf[0] < 0) flip_others(1);
    if (*cf[1] < 0) flip_others(0);
    if (std::abs(*cf[0] - 0.5) <= 1e-12 && *cf[2] < 0) {
        flip_others(1);          // (a,b,c) -> (-a, b, -c)
        shift_up(0);             // -> (1/2 - ... ), restores a
    }
}

} // namespace detail

/// Normalized canonical coefficients of an arbitrary 2Q unitary.
inline CanonicalCoeffs weyl_coordinates(const Matrix4& u, uint64_t seed = 0x9e3779b97f4a7c15ull) {
    check_unitary(u);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Matrix4 trial = u;
    for (int attempt = 0; attempt < 9; ++attempt) {
        detail::RawKak raw;
        if (detail::raw_kak(trial, raw, rng)) {
            return normalize_coeffs(raw.coeffs);
        }
        // random local dressing leaves the coefficients unchanged
        auto rand_su2 = [&] {
            Matrix2 g;
            g << Complex(nd(rng), nd(rng)), Complex(nd(rng), nd(rng)),
                 Complex(nd(rng), nd(rng)), Complex(nd(rng), nd(rng));
            Eigen::HouseholderQR<Matrix2> qr(g);
            Matrix2 q = qr.householderQ();
            q /= std::sqrt(q.determinant());
            return q;
        };
        trial = Eigen::kroneckerProduct(rand_su2(), rand_su2()) * u *
                Eigen::kroneckerProduct(rand_su2(), rand_su2());
    }
    throw DecompositionFailure("weyl_coordinates: diagonalization failed after retries");
}

/// Full KAK decomposition with verified reconstruction (<= 1e-9 Frobenius).
/// Degenerate spectra are handled by perturb-and-retry with random local
/// dressings that are folded back into the factors.
inline KakFactors kak_decompose(const Matrix4& u, uint64_t seed = 0xb5297a4d68d1f0abull) {
    check_unitary(u);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    auto rand_su2 = [&] {
        Matrix2 g;
        g << Complex(nd(rng), nd(rng)), Complex(nd(rng), nd(rng)),
             Complex(nd(rng), nd(rng)), Complex(nd(rng), nd(rng));
        Eigen::HouseholderQR<Matrix2> qr(g);
        Matrix2 q = qr.householderQ();
        q /= std::sqrt(q.determinant());
        return q;
    };

    Matrix2 d0 = Matrix2::Identity(), d1 = Matrix2::Identity();
    Matrix2 e0 = Matrix2::Identity(), e1 = Matrix2::Identity();
    for (int attempt = 0; attempt < 9; ++attempt) {
        Matrix4 trial = Eigen::kroneckerProduct(d0, d1) * u * Eigen::kroneckerProduct(e0, e1);
        detail::RawKak raw;
        if (detail::raw_kak(trial, raw, rng)) {
            detail::canonicalize_with_locals(raw);
            KakFactors out;
            out.coeffs = raw.coeffs;
            Complex pl, pr;
            Matrix2 a0, a1, b0, b1;
            detail::kron_split(raw.left, pl, a0, a1);
            detail::kron_split(raw.right, pr, b0, b1);
            // fold the dressing back: u = (d0,d1)^dag * trial * (e0,e1)^dag
            out.after_0 = d0.adjoint() * a0;
            out.after_1 = d1.adjoint() * a1;
            out.before_0 = b0 * e0.adjoint();
            out.before_1 = b1 * e1.adjoint();
            out.global_phase = raw.phase * pl * pr;
            if (detail::frobenius_distance(out.reconstruct(), u) <= kReconstructTol) {
                // keep coefficients bitwise-identical to the pure normal form
                out.coeffs = normalize_coeffs(out.coeffs);
                return out;
            }
        }
        d0 = rand_su2();
        d1 = rand_su2();
        e0 = rand_su2();
        e1 = rand_su2();
    }
    throw DecompositionFailure("kak_decompose: reconstruction failed after 8 retries");
}

} // namespace qroute
