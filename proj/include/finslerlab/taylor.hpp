#pragma once

#include <cstdint>
#include <vector>

#include "finslerlab/ddouble.hpp"
#include "finslerlab/jet2.hpp"

namespace finslerlab {

// Truncated Taylor polynomials in 2n offsets (dx_1..dx_n, dy_1..dy_n) holding
// monomials with x-degree <= 2 and total degree <= order.
class Layout {
public:
    Layout(int n, int order);

    int n() const { return n_; }
    int order() const { return order_; }
    int size() const { return static_cast<int>(xdeg_.size()); }
    int xdeg(int m) const { return xdeg_[m]; }
    int tdeg(int m) const { return tdeg_[m]; }
    int exponent(int m, int var) const { return exps_[m * 2 * n_ + var]; }
    // index of m times variable var, or -1
    int up(int var, int m) const { return up_[var * size() + m]; }
    int find(const std::vector<int>& e) const;
    // monomials of total degree <= t occupy [0, end_of_degree(t))
    int end_of_degree(int t) const { return degree_end_[t]; }

    // product pairs grouped by result monomial
    int pair_begin(int r) const { return pair_start_[r]; }
    int pair_end(int r) const { return pair_start_[r + 1]; }
    int pair_lhs(int p) const { return pair_i_[p]; }
    int pair_rhs(int p) const { return pair_j_[p]; }

private:
    int n_, order_;
    std::vector<std::uint8_t> exps_;
    std::vector<int> xdeg_, tdeg_, up_, degree_end_;
    std::vector<int> pair_start_, pair_i_, pair_j_;
    std::vector<std::pair<std::uint64_t, int>> keys_;
    std::uint64_t key(const std::vector<int>& e) const;
};

const Layout& layout(int n, int order);

inline constexpr int unbounded = 1000;

// K is double or DDouble
template <class K>
class BasicTaylorJet {
public:
    BasicTaylorJet(const Layout& L, K c = K(0.0));

    static BasicTaylorJet from_x_jet(const Layout& L, const Jet2& j);
    static BasicTaylorJet y_variable(const Layout& L, int k, double y0);
    static BasicTaylorJet x_variable(const Layout& L, int k, double x0);
    // the coefficients of j re-indexed into the larger layout L
    static BasicTaylorJet lift(const Layout& L, const BasicTaylorJet& j);

    const Layout& layout() const { return *L_; }
    // exact for monomials with x-degree <= xvalid and total degree <= tvalid
    int xvalid() const { return xvalid_; }
    int tvalid() const { return tvalid_; }
    const K& coef(int m) const { return c_[m]; }
    const K& value() const { return c_[0]; }

    BasicTaylorJet& operator+=(const BasicTaylorJet& o);
    BasicTaylorJet& operator-=(const BasicTaylorJet& o);
    BasicTaylorJet& operator*=(const K& s);
    BasicTaylorJet& operator+=(const K& s) {
        c_[0] += s;
        return *this;
    }

    // d/dx_k for var < n, d/dy_k for var = n + k
    BasicTaylorJet derivative(int var) const;
    // value, gradient and Hessian in the y offsets
    Jet2 y_jet() const;

    template <class T>
    friend BasicTaylorJet<T> multiply(const BasicTaylorJet<T>& a, const BasicTaylorJet<T>& b, int xcap, int tcap);
    template <class T>
    friend BasicTaylorJet<T> compose(const BasicTaylorJet<T>& u, const std::vector<T>& series);

private:
    const Layout* L_;
    std::vector<K> c_;
    int xvalid_, tvalid_;
    void clip();
};

using TaylorJet = BasicTaylorJet<double>;
using TaylorJetDD = BasicTaylorJet<DDouble>;

template <class K>
BasicTaylorJet<K> multiply(const BasicTaylorJet<K>& a, const BasicTaylorJet<K>& b, int xcap = unbounded,
                           int tcap = unbounded);
// sum_k series[k] * (u - u0)^k
template <class K>
BasicTaylorJet<K> compose(const BasicTaylorJet<K>& u, const std::vector<K>& series);
template <class K>
BasicTaylorJet<K> sqrt(const BasicTaylorJet<K>& u);
template <class K>
BasicTaylorJet<K> reciprocal(const BasicTaylorJet<K>& u);

template <class K>
BasicTaylorJet<K> operator*(const BasicTaylorJet<K>& a, const BasicTaylorJet<K>& b) {
    return multiply(a, b);
}
template <class K>
BasicTaylorJet<K> operator+(BasicTaylorJet<K> a, const BasicTaylorJet<K>& b) {
    return a += b;
}
template <class K>
BasicTaylorJet<K> operator-(BasicTaylorJet<K> a, const BasicTaylorJet<K>& b) {
    return a -= b;
}
template <class K>
BasicTaylorJet<K> operator*(BasicTaylorJet<K> a, double s) {
    return a *= K(s);
}
template <class K>
BasicTaylorJet<K> operator*(double s, BasicTaylorJet<K> a) {
    return a *= K(s);
}
template <class K>
BasicTaylorJet<K> operator+(BasicTaylorJet<K> a, double s) {
    return a += K(s);
}
template <class K>
BasicTaylorJet<K> operator/(const BasicTaylorJet<K>& a, const BasicTaylorJet<K>& b) {
    return multiply(a, reciprocal(b));
}

}
