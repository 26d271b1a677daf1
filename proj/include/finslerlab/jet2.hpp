#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "finslerlab/error.hpp"

namespace finslerlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// value, gradient and Hessian of a scalar function of n variables at a point
struct Jet2 {
    double value = 0.0;
    Vector grad;
    Matrix hess;

    Jet2() = default;
    Jet2(int n, double v) : value(v), grad(Vector::Zero(n)), hess(Matrix::Zero(n, n)) {}

    static Jet2 variable(int n, int k, double v) {
        Jet2 j(n, v);
        j.grad[k] = 1.0;
        return j;
    }

    int dim() const { return static_cast<int>(grad.size()); }

    Jet2& operator+=(const Jet2& o) {
        value += o.value;
        grad += o.grad;
        hess += o.hess;
        return *this;
    }
    Jet2& operator-=(const Jet2& o) {
        value -= o.value;
        grad -= o.grad;
        hess -= o.hess;
        return *this;
    }
    Jet2& operator+=(double c) {
        value += c;
        return *this;
    }
    Jet2& operator-=(double c) {
        value -= c;
        return *this;
    }
    Jet2& operator*=(double c) {
        value *= c;
        grad *= c;
        hess *= c;
        return *this;
    }
    Jet2& operator*=(const Jet2& o);
    Jet2& operator/=(const Jet2& o);
    Jet2& operator/=(double c) { return *this *= 1.0 / c; }
};

// f(u) given f(u0), f'(u0), f''(u0)
inline Jet2 chain(const Jet2& u, double f0, double f1, double f2) {
    Jet2 r;
    r.value = f0;
    r.grad = f1 * u.grad;
    r.hess = f1 * u.hess + f2 * (u.grad * u.grad.transpose());
    return r;
}

inline Jet2 operator-(Jet2 a) {
    a *= -1.0;
    return a;
}
inline Jet2 operator+(Jet2 a, const Jet2& b) { return a += b; }
inline Jet2 operator-(Jet2 a, const Jet2& b) { return a -= b; }
inline Jet2 operator+(Jet2 a, double c) { return a += c; }
inline Jet2 operator+(double c, Jet2 a) { return a += c; }
inline Jet2 operator-(Jet2 a, double c) { return a -= c; }
inline Jet2 operator-(double c, Jet2 a) {
    a *= -1.0;
    return a += c;
}
inline Jet2 operator*(Jet2 a, double c) { return a *= c; }
inline Jet2 operator*(double c, Jet2 a) { return a *= c; }

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
    Jet2 r;
    r.value = a.value * b.value;
    r.grad = b.value * a.grad + a.value * b.grad;
    Matrix cross = a.grad * b.grad.transpose();
    r.hess = b.value * a.hess + a.value * b.hess + (cross + cross.transpose());
    return r;
}

inline Jet2 reciprocal(const Jet2& u) {
    if (u.value == 0.0) throw DomainError("division by zero");
    double iv = 1.0 / u.value;
    return chain(u, iv, -iv * iv, 2.0 * iv * iv * iv);
}

inline Jet2 operator/(const Jet2& a, const Jet2& b) { return a * reciprocal(b); }
inline Jet2 operator/(Jet2 a, double c) {
    if (c == 0.0) throw DomainError("division by zero");
    return a *= 1.0 / c;
}
inline Jet2 operator/(double c, const Jet2& b) { return c * reciprocal(b); }

inline Jet2& Jet2::operator*=(const Jet2& o) { return *this = *this * o; }
inline Jet2& Jet2::operator/=(const Jet2& o) { return *this = *this / o; }

inline Jet2 sqrt(const Jet2& u) {
    if (u.value <= 0.0) {
        if (u.value < 0.0) throw DomainError("square root of a negative value");
        throw DomainError("square root at zero has no derivative");
    }
    double s = std::sqrt(u.value);
    return chain(u, s, 0.5 / s, -0.25 / (s * u.value));
}

inline Jet2 pow(const Jet2& u, int k) {
    if (k == 0) return Jet2(u.dim(), 1.0);
    if (u.value == 0.0 && k < 0) throw DomainError("division by zero");
    double v = u.value;
    double f0 = std::pow(v, k);
    double f1 = k * std::pow(v, k - 1);
    double f2 = k * (k - 1) * std::pow(v, k - 2);
    return chain(u, f0, f1, f2);
}

// u^(3/2)
inline Jet2 pow32(const Jet2& u) {
    if (u.value < 0.0) throw DomainError("fractional power of a negative value");
    double s = std::sqrt(u.value);
    if (s == 0.0) return chain(u, 0.0, 0.0, 0.0);
    return chain(u, u.value * s, 1.5 * s, 0.75 / s);
}

inline double value_of(double x) { return x; }
inline double value_of(const Jet2& x) { return x.value; }

}
