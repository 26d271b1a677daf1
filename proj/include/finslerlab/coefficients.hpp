#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "finslerlab/jet2.hpp"

namespace finslerlab {

// c * n^pn * b^pb * alpha^pal * beta^pbe
struct Monomial {
    double c = 0;
    int pn = 0, pb = 0, pal = 0, pbe = 0;
};

// c * b^b * alpha^al * (b alpha + beta)^P * (b alpha - beta)^M
struct Denominator {
    double c = 1;
    int b = 0, al = 0, P = 0, M = 0;
};

struct Coefficient {
    std::string name, block, source;
    Denominator den;
    std::vector<Monomial> terms;
};

struct Exponents {
    int b = 0, al = 0, be = 0, P = 0, M = 0;
};

class CoefficientSet {
public:
    static const CoefficientSet& builtin();
    static CoefficientSet from_file(const std::filesystem::path& path);
    static CoefficientSet from_json(std::string_view text, std::string origin);

    const std::vector<Coefficient>& table(std::string_view name) const;
    const Coefficient& entry(std::string_view table, std::string_view name) const;

    const std::string& origin() const { return origin_; }
    const std::string& declared_checksum() const { return declared_; }
    const std::string& computed_checksum() const { return computed_; }
    bool checksum_ok() const { return declared_ == computed_; }
    const Exponents& max_exponents() const { return max_; }

private:
    std::map<std::string, std::vector<Coefficient>, std::less<>> tables_;
    std::string origin_, declared_, computed_;
    Exponents max_;
};

std::string fnv1a64(std::string_view data);

// powers of b, alpha, beta, b alpha + beta, b alpha - beta shared by every coefficient
template <class S>
class Powers {
public:
    Powers(int n, double b, const S& alpha, const S& beta, const Exponents& e) : n_(n) {
        fill(bp_, b, e.b);
        fill(ap_, alpha, e.al);
        fill(ep_, beta, e.be);
        fill(pp_, b * alpha + beta, e.P);
        fill(mp_, b * alpha - beta, e.M);
    }
    int n() const { return n_; }
    double b(int k) const { return bp_.at(k); }
    const S& alpha(int k) const { return ap_.at(k); }
    const S& beta(int k) const { return ep_.at(k); }
    const S& P(int k) const { return pp_.at(k); }
    const S& M(int k) const { return mp_.at(k); }

private:
    int n_;
    std::vector<double> bp_;
    std::vector<S> ap_, ep_, pp_, mp_;

    template <class T>
    static void fill(std::vector<T>& v, const T& x, int k) {
        T one = x;
        one *= 0.0;
        one += 1.0;
        v.push_back(one);
        for (int i = 1; i <= k; ++i) v.push_back(v.back() * x);
    }
};

// numerator collected into alpha^i beta^j coefficients, evaluated Horner-wise in beta then alpha
template <class S>
S evaluate(const Coefficient& c, const Powers<S>& pw) {
    std::map<int, std::map<int, double>> grid;
    double nn = pw.n();
    for (const Monomial& m : c.terms) grid[m.pal][m.pbe] += m.c * std::pow(nn, m.pn) * pw.b(m.pb);
    S zero = pw.alpha(0);
    zero *= 0.0;
    S num = zero;
    int prev_al = -1;
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
        int al = it->first;
        S inner = zero;
        int prev_be = -1;
        for (auto jt = it->second.rbegin(); jt != it->second.rend(); ++jt) {
            if (prev_be >= 0) inner = inner * pw.beta(prev_be - jt->first);
            inner += jt->second;
            prev_be = jt->first;
        }
        inner = inner * pw.beta(prev_be);
        if (prev_al >= 0) num = num * pw.alpha(prev_al - al);
        num += inner;
        prev_al = al;
    }
    if (prev_al > 0) num = num * pw.alpha(prev_al);
    S den = pw.P(c.den.P) * pw.M(c.den.M) * pw.alpha(c.den.al);
    den *= c.den.c * pw.b(c.den.b);
    return num / den;
}

}
