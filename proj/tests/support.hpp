#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "finslerlab/finsler.hpp"
#include "finslerlab/metrics.hpp"
#include "finslerlab/riemann.hpp"

namespace fltest {

using finslerlab::Matrix;
using finslerlab::Vector;

using Function = std::function<double(const Vector&)>;

// repeated first-order central differences along vars[depth..], step h
inline double nested_difference(const Function& f, Vector p, const std::vector<int>& vars, std::size_t depth,
                                double h) {
    if (depth == vars.size()) return f(p);
    int v = vars[depth];
    Vector plus = p, minus = p;
    plus[v] += h;
    minus[v] -= h;
    return (nested_difference(f, plus, vars, depth + 1, h) - nested_difference(f, minus, vars, depth + 1, h)) /
           (2 * h);
}

// mixed partial derivative along vars, Richardson extrapolation over steps h, h/2, ..., h/2^levels
inline double partial(const Function& f, const Vector& p, const std::vector<int>& vars, double h, int levels = 1) {
    if (vars.empty()) return f(p);
    std::vector<double> t;
    for (int k = 0; k <= levels; ++k) t.push_back(nested_difference(f, p, vars, 0, h / (1 << k)));
    for (int j = 1; j <= levels; ++j) {
        double w = std::pow(4.0, j);
        for (int k = levels; k >= j; --k) t[k] = (w * t[k] - t[k - 1]) / (w - 1);
    }
    return t[levels];
}

inline double rel_err(double exact, double fd, double scale) {
    return std::abs(exact - fd) / std::max({std::abs(fd), std::abs(exact), scale});
}

inline finslerlab::MetricSpec sample_spec(std::uint64_t seed, int n = 3) {
    finslerlab::FuzzConfig cfg;
    cfg.seed = seed;
    cfg.n = n;
    return finslerlab::random_spec(cfg);
}

inline Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    int k = 0;
    for (double d : v) out[k++] = d;
    return out;
}

inline finslerlab::MetricSpec mu_spec(double perturb = 0) {
    return finslerlab::mu_example(3, -1.0, 1.0, vec({1, 0, 0}), perturb);
}

// F^2 at the 2n-vector (x, y)
inline Function f2_function(const finslerlab::MetricSpec& spec) {
    return [&spec](const Vector& p) {
        int n = spec.n;
        finslerlab::ChartFrame f = finslerlab::assemble_chart(spec, p.head(n));
        double F = finslerlab::finsler_norm(spec.family, f, p.tail(n));
        return F * F;
    };
}

}
