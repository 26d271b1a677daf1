#pragma once

#include <cmath>

namespace finslerlab {

// unevaluated sum hi + lo of two doubles, about 106 significant bits
struct DDouble {
    double hi = 0.0, lo = 0.0;

    constexpr DDouble() = default;
    constexpr DDouble(double x) : hi(x) {}
    constexpr DDouble(double h, double l) : hi(h), lo(l) {}

    explicit operator double() const { return hi + lo; }

    DDouble& operator+=(const DDouble& o);
    DDouble& operator-=(const DDouble& o) { return *this += DDouble(-o.hi, -o.lo); }
    DDouble& operator*=(const DDouble& o);
    DDouble& operator/=(const DDouble& o);
};

namespace dd_detail {

inline DDouble quick_two_sum(double a, double b) {
    double s = a + b;
    return {s, b - (s - a)};
}

inline DDouble two_sum(double a, double b) {
    double s = a + b;
    double v = s - a;
    return {s, (a - (s - v)) + (b - v)};
}

inline DDouble two_prod(double a, double b) {
    double p = a * b;
    return {p, std::fma(a, b, -p)};
}

}

inline DDouble operator+(const DDouble& a, const DDouble& b) {
    DDouble s = dd_detail::two_sum(a.hi, b.hi);
    DDouble t = dd_detail::two_sum(a.lo, b.lo);
    s.lo += t.hi;
    s = dd_detail::quick_two_sum(s.hi, s.lo);
    s.lo += t.lo;
    return dd_detail::quick_two_sum(s.hi, s.lo);
}

inline DDouble operator-(const DDouble& a) { return {-a.hi, -a.lo}; }
inline DDouble operator-(const DDouble& a, const DDouble& b) { return a + (-b); }

inline DDouble operator*(const DDouble& a, const DDouble& b) {
    DDouble p = dd_detail::two_prod(a.hi, b.hi);
    p.lo += a.hi * b.lo + a.lo * b.hi;
    return dd_detail::quick_two_sum(p.hi, p.lo);
}

inline DDouble operator/(const DDouble& a, const DDouble& b) {
    double q1 = a.hi / b.hi;
    DDouble r = a - q1 * b;
    double q2 = r.hi / b.hi;
    r -= q2 * b;
    double q3 = r.hi / b.hi;
    DDouble q = dd_detail::quick_two_sum(q1, q2);
    return q + DDouble(q3);
}

inline DDouble& DDouble::operator+=(const DDouble& o) { return *this = *this + o; }
inline DDouble& DDouble::operator*=(const DDouble& o) { return *this = *this * o; }
inline DDouble& DDouble::operator/=(const DDouble& o) { return *this = *this / o; }

inline DDouble sqrt(const DDouble& a) {
    if (a.hi <= 0.0) return DDouble(std::sqrt(a.hi));
    double x = std::sqrt(a.hi);
    DDouble r = a - dd_detail::two_prod(x, x);
    return dd_detail::quick_two_sum(x, r.hi / (2.0 * x));
}

inline double to_double(double x) { return x; }
inline double to_double(const DDouble& x) { return x.hi + x.lo; }

}
