#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "finslerlab/riemann.hpp"

namespace finslerlab {

// y-independent tensors built from b_{i|j} and b_{i|j|k}; all lower unless noted
struct BetaTensors {
    int n = 0;
    Matrix a, ainv;
    Vector b, bup;
    double b2 = 0;
    Matrix bij;
    T3 bijk;
    Matrix r, s;      // r_ij, s_ij
    T3 rd, sd;        // r_{ij|k}, s_{ij|k}
    Matrix p, q, t;   // p_ij, q_ij, t_ij
    Vector ri, si;    // r_i, s_i
    double rb = 0;    // r
    Matrix bup_d;     // b^m_{|k} at (m,k)
    Matrix ri_d, si_d; // r_{i|k}, s_{i|k} at (i,k)
    Vector r_d;       // r_{|k}
    Vector pi, qi, qsi, ti; // p_i, q_i = b^j q_ji, q*_i = b^j q_ij, t_i
    double p_s = 0, q_s = 0, t_s = 0, rii = 0, tii = 0, pii = 0;
};

BetaTensors beta_tensors(const ChartFrame& f, const CovariantB& cb);
inline BetaTensors beta_tensors(const ChartFrame& f) { return beta_tensors(f, covariant_b(f)); }

inline constexpr std::array<std::string_view, 33> scalar_names = {
    "r00",  "r0",   "s0",   "r",     "rii",   "q00",   "t00",   "p00",  "p0",   "q0",   "q*0",
    "t0",   "r00|0", "r00|b", "r0|0", "s0|0", "r0|b", "s0|b", "r|0",  "r|b",  "si0|i", "rii|0",
    "ri0|i", "ri|i", "si|i", "rii|b", "p",    "q",    "t",    "tii",  "pii",  "alpha2", "beta"};
inline constexpr std::array<std::string_view, 12> upper_names = {
    "y", "b", "ri0", "si0", "ti0", "si0|0", "ri|0", "si|0", "qi", "ti", "ri", "si"};
inline constexpr std::array<std::string_view, 22> lower_names = {
    "yk",   "bk",   "rk0",  "sk0", "rk", "sk", "r00|k", "rk0|0", "q0k", "qk0", "rk|0",
    "r0|k", "sk|0", "s0|k", "pk",  "qk", "q*k", "tk",  "r|k",   "pk0", "tk0", "rk0|b"};
inline constexpr std::array<std::string_view, 8> matrix_names = {
    "delta", "rik", "sik", "tik", "sik|0", "si0|k", "ri|k", "si|k"};

template <std::size_t N>
int name_index(const std::array<std::string_view, N>& names, std::string_view s) {
    for (std::size_t i = 0; i < N; ++i)
        if (names[i] == s) return static_cast<int>(i);
    return -1;
}

// every y-contraction used by the closed forms; S is double or Jet2 over y
template <class S>
struct Blocks {
    int n = 0;
    std::vector<S> sc;
    std::vector<std::vector<S>> up, lo, mat; // mat entries at i*n+k

    const S& scalar(std::string_view name) const { return sc.at(name_index(scalar_names, name)); }
    const std::vector<S>& upper(std::string_view name) const { return up.at(name_index(upper_names, name)); }
    const std::vector<S>& lower(std::string_view name) const { return lo.at(name_index(lower_names, name)); }
    const std::vector<S>& matrix(std::string_view name) const { return mat.at(name_index(matrix_names, name)); }
};

namespace detail {

template <class S>
S zero_like(const S& y) {
    S z = y;
    z *= 0.0;
    return z;
}

template <class S>
std::vector<S> mv(const Matrix& M, const std::vector<S>& y) {
    int n = static_cast<int>(y.size());
    std::vector<S> out(n, zero_like(y[0]));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (M(i, j) != 0.0) out[i] += M(i, j) * y[j];
    return out;
}

template <class S>
S dotv(const Vector& v, const std::vector<S>& y) {
    S s = zero_like(y[0]);
    for (std::size_t j = 0; j < y.size(); ++j)
        if (v[j] != 0.0) s += v[j] * y[j];
    return s;
}

template <class S>
S dots(const std::vector<S>& u, const std::vector<S>& w) {
    S s = zero_like(u[0]);
    for (std::size_t j = 0; j < u.size(); ++j) s += u[j] * w[j];
    return s;
}

template <class S>
std::vector<S> konst(const Vector& v, const S& like) {
    std::vector<S> out;
    for (int i = 0; i < v.size(); ++i) {
        S z = zero_like(like);
        z += v[i];
        out.push_back(z);
    }
    return out;
}

}

template <class S>
Blocks<S> make_blocks(const BetaTensors& bt, const std::vector<S>& y) {
    using namespace detail;
    int n = bt.n;
    S zero = zero_like(y[0]);
    Blocks<S> B;
    B.n = n;
    B.sc.assign(scalar_names.size(), zero);
    B.up.assign(upper_names.size(), {});
    B.lo.assign(lower_names.size(), {});
    B.mat.assign(matrix_names.size(), std::vector<S>(n * n, zero));
    auto sc = [&](std::string_view nm) -> S& { return B.sc[name_index(scalar_names, nm)]; };
    auto up = [&](std::string_view nm) -> std::vector<S>& { return B.up[name_index(upper_names, nm)]; };
    auto lo = [&](std::string_view nm) -> std::vector<S>& { return B.lo[name_index(lower_names, nm)]; };
    auto mat = [&](std::string_view nm) -> std::vector<S>& { return B.mat[name_index(matrix_names, nm)]; };

    std::vector<S> yy(n * n, zero);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) yy[j * n + k] = y[j] * y[k];

    // T3 contractions with a fixed tensor slot pattern
    auto t3_yy_free = [&](const T3& T, int free) {
        std::vector<S> out(n, zero);
        for (int f = 0; f < n; ++f)
            for (int u = 0; u < n; ++u)
                for (int v = 0; v < n; ++v) {
                    double c = free == 0 ? T(f, u, v) : free == 1 ? T(u, f, v) : T(u, v, f);
                    if (c != 0.0) out[f] += c * yy[u * n + v];
                }
        return out;
    };
    // sum over u of T with slot (fixed f, y on slot ys, vector w on the other)
    auto t3_y_w = [&](const T3& T, int fs, int ys, const Vector& w) {
        std::vector<S> out(n, zero);
        int ws = 3 - fs - ys;
        for (int f = 0; f < n; ++f)
            for (int u = 0; u < n; ++u)
                for (int v = 0; v < n; ++v) {
                    int idx[3];
                    idx[fs] = f;
                    idx[ys] = u;
                    idx[ws] = v;
                    double c = T(idx[0], idx[1], idx[2]) * w[v];
                    if (c != 0.0) out[f] += c * y[u];
                }
        return out;
    };
    // M(f,g) = sum_u T with f, g and y on the remaining slot
    auto t3_y = [&](const T3& T, int fs, int gs) {
        std::vector<S> out(n * n, zero);
        int ys = 3 - fs - gs;
        for (int f = 0; f < n; ++f)
            for (int g = 0; g < n; ++g)
                for (int u = 0; u < n; ++u) {
                    int idx[3];
                    idx[fs] = f;
                    idx[gs] = g;
                    idx[ys] = u;
                    double c = T(idx[0], idx[1], idx[2]);
                    if (c != 0.0) out[f * n + g] += c * y[u];
                }
        return out;
    };
    auto raise_vec = [&](const std::vector<S>& v) {
        std::vector<S> out(n, zero);
        for (int i = 0; i < n; ++i)
            for (int m = 0; m < n; ++m) out[i] += bt.ainv(i, m) * v[m];
        return out;
    };
    auto raise_mat = [&](const std::vector<S>& M) {
        std::vector<S> out(n * n, zero);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                for (int m = 0; m < n; ++m)
                    if (bt.ainv(i, m) != 0.0) out[i * n + k] += bt.ainv(i, m) * M[m * n + k];
        return out;
    };
    auto trace_raised = [&](const std::vector<S>& M) {
        S s = zero;
        for (int i = 0; i < n; ++i)
            for (int m = 0; m < n; ++m)
                if (bt.ainv(i, m) != 0.0) s += bt.ainv(i, m) * M[m * n + i];
        return s;
    };

    std::vector<S> yl = mv(bt.a, y);
    std::vector<S> rk0 = mv(bt.r, y), sk0 = mv(bt.s, y);
    sc("alpha2") = dots(y, yl);
    sc("beta") = dotv(bt.b, y);
    sc("r00") = dots(y, rk0);
    sc("r0") = dotv(bt.ri, y);
    sc("s0") = dotv(bt.si, y);
    sc("r") = zero + bt.rb;
    sc("rii") = zero + bt.rii;
    sc("q00") = dots(y, mv(bt.q, y));
    sc("t00") = dots(y, mv(bt.t, y));
    sc("p00") = dots(y, mv(bt.p, y));
    sc("p0") = dotv(bt.pi, y);
    sc("q0") = dotv(bt.qi, y);
    sc("q*0") = dotv(bt.qsi, y);
    sc("t0") = dotv(bt.ti, y);
    sc("p") = zero + bt.p_s;
    sc("q") = zero + bt.q_s;
    sc("t") = zero + bt.t_s;
    sc("tii") = zero + bt.tii;
    sc("pii") = zero + bt.pii;
    sc("r|b") = zero + bt.r_d.dot(bt.bup);
    sc("ri|i") = zero + (bt.ainv * bt.ri_d).trace();
    sc("si|i") = zero + (bt.ainv * bt.si_d).trace();

    std::vector<S> r00_k = t3_yy_free(bt.rd, 2); // r_{ij|k} y^i y^j
    std::vector<S> rk0_0 = t3_yy_free(bt.rd, 0); // r_{kj|m} y^j y^m
    sc("r00|0") = dots(r00_k, y);
    sc("r00|b") = dotv(bt.bup, r00_k);
    std::vector<S> rk_0 = mv(bt.ri_d, y), sk_0 = mv(bt.si_d, y);
    std::vector<S> r0_k = mv(Matrix(bt.ri_d.transpose()), y), s0_k = mv(Matrix(bt.si_d.transpose()), y);
    sc("r0|0") = dots(rk_0, y);
    sc("s0|0") = dots(sk_0, y);
    sc("r0|b") = dotv(bt.bup, r0_k);
    sc("s0|b") = dotv(bt.bup, s0_k);
    sc("r|0") = dotv(bt.r_d, y);

    // s^i_{k|0}, s^i_{0|k}, r^i_{k|0}, r^i_{0|k} as n x n
    std::vector<S> s_k0low = t3_y(bt.sd, 0, 1); // s_{mk|j} y^j at (m,k)
    std::vector<S> s_0klow = t3_y(bt.sd, 0, 2); // s_{mj|k} y^j at (m,k)
    std::vector<S> r_0klow = t3_y(bt.rd, 0, 2);
    std::vector<S> sik_0 = raise_mat(s_k0low), si0_k = raise_mat(s_0klow);
    sc("si0|i") = trace_raised(s_0klow);
    sc("ri0|i") = trace_raised(r_0klow);
    {
        S s = zero;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (bt.ainv(i, j) != 0.0) {
                    double cb = 0;
                    for (int k = 0; k < n; ++k) {
                        s += bt.ainv(i, j) * bt.rd(i, j, k) * y[k];
                        cb += bt.rd(i, j, k) * bt.bup[k];
                    }
                    sc("rii|b") += bt.ainv(i, j) * cb;
                }
        sc("rii|0") = s;
    }

    up("y") = y;
    up("b") = konst(bt.bup, zero);
    up("ri0") = raise_vec(rk0);
    up("si0") = raise_vec(sk0);
    up("ti0") = raise_vec(mv(bt.t, y));
    {
        std::vector<S> s00(n, zero); // s_{mj|k} y^j y^k
        for (int m = 0; m < n; ++m)
            for (int k = 0; k < n; ++k) s00[m] += s_0klow[m * n + k] * y[k];
        up("si0|0") = raise_vec(s00);
    }
    up("ri|0") = raise_vec(rk_0);
    up("si|0") = raise_vec(sk_0);
    up("qi") = konst(Vector(bt.ainv * bt.qi), zero);
    up("ti") = konst(Vector(bt.ainv * bt.ti), zero);
    up("ri") = konst(Vector(bt.ainv * bt.ri), zero);
    up("si") = konst(Vector(bt.ainv * bt.si), zero);

    lo("yk") = yl;
    lo("bk") = konst(bt.b, zero);
    lo("rk0") = rk0;
    lo("sk0") = sk0;
    lo("rk") = konst(bt.ri, zero);
    lo("sk") = konst(bt.si, zero);
    lo("r00|k") = r00_k;
    lo("rk0|0") = rk0_0;
    lo("q0k") = mv(Matrix(bt.q.transpose()), y);
    lo("qk0") = mv(bt.q, y);
    lo("rk|0") = rk_0;
    lo("r0|k") = r0_k;
    lo("sk|0") = sk_0;
    lo("s0|k") = s0_k;
    lo("pk") = konst(bt.pi, zero);
    lo("qk") = konst(bt.qi, zero);
    lo("q*k") = konst(bt.qsi, zero);
    lo("tk") = konst(bt.ti, zero);
    lo("r|k") = konst(bt.r_d, zero);
    lo("pk0") = mv(bt.p, y);
    lo("tk0") = mv(bt.t, y);
    lo("rk0|b") = t3_y_w(bt.rd, 0, 1, bt.bup);

    auto konst_mat = [&](const Matrix& M) {
        std::vector<S> out(n * n, zero);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) out[i * n + k] += M(i, k);
        return out;
    };
    mat("delta") = konst_mat(Matrix::Identity(n, n));
    mat("rik") = konst_mat(bt.ainv * bt.r);
    mat("sik") = konst_mat(bt.ainv * bt.s);
    mat("tik") = konst_mat(bt.ainv * bt.t);
    mat("sik|0") = sik_0;
    mat("si0|k") = si0_k;
    mat("ri|k") = konst_mat(bt.ainv * bt.ri_d);
    mat("si|k") = konst_mat(bt.ainv * bt.si_d);
    return B;
}

inline Blocks<double> make_blocks(const BetaTensors& bt, const Vector& y) {
    return make_blocks(bt, std::vector<double>(y.data(), y.data() + y.size()));
}

// y as a jet variable: derivatives of every block with respect to y
inline std::vector<Jet2> y_jets(const Vector& y) {
    std::vector<Jet2> out;
    for (int k = 0; k < y.size(); ++k) out.push_back(Jet2::variable(static_cast<int>(y.size()), k, y[k]));
    return out;
}

// relative residual of a sum of terms: |sum| / max(1, max |term|)
class Residual {
public:
    Residual& add(double term) {
        sum_ += term;
        scale_ = std::max(scale_, std::abs(term));
        return *this;
    }
    double value() const { return std::abs(sum_) / std::max(1.0, scale_); }
    double sum() const { return sum_; }

private:
    double sum_ = 0, scale_ = 0;
};

// relative residuals of the thirteen identities that hold for every alpha and beta, keyed by the
// tensor each one expresses; "sym|k" is the symmetry of r_{i|k} + s_{i|k}
std::map<std::string, double> priori_residuals(const BetaTensors& bt, const AlphaCurvature& ac, const Vector& y);

}
