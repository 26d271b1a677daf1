#include "finslerlab/riemann.hpp"

#include <algorithm>
#include <cmath>

#include "finslerlab/linsolve.hpp"

namespace finslerlab {

std::string_view family_name(Family f) {
    switch (f) {
    case Family::singular_square: return "singular-square";
    case Family::square: return "square";
    case Family::riemannian_only: return "riemannian-only";
    }
    return "?";
}

Family family_from_name(std::string_view s) {
    if (s == "singular-square") return Family::singular_square;
    if (s == "square") return Family::square;
    if (s == "riemannian-only") return Family::riemannian_only;
    throw InputError("unknown family '" + std::string(s) + "'");
}

namespace {

// the lower triangle may be written differently; compare at a few probe points
bool same_values(const Expression& u, const Expression& v, int n, const Params& params) {
    for (int probe = 0; probe < 3; ++probe) {
        std::vector<double> x(n);
        for (int k = 0; k < n; ++k) x[k] = probe == 0 ? 0.0 : 0.1 * ((k * 7 + probe * 3) % 5 - 2);
        try {
            double a = eval(u, x, params), b = eval(v, x, params);
            if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a))) return false;
        } catch (const DomainError&) {
        }
    }
    return true;
}

Expression parse_field(const std::string& text, const std::string& where, int n, const Params& params) {
    try {
        Expression e = parse(text);
        check_identifiers(e, n, params);
        return e;
    } catch (const InputError& err) {
        throw InputError(where + ": " + err.what());
    }
}

std::string cell(int i, int j) { return "a[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) + "]"; }

}

MetricSpec make_spec(int n, Family family, const std::vector<std::vector<std::string>>& a,
                     const std::vector<std::string>& b, Params params, std::optional<std::string> c_expr,
                     std::optional<std::string> d_expr) {
    if (n < 2) throw InputError("dimension must be at least 2");
    if (static_cast<int>(b.size()) != n) throw InputError("b must have n entries");
    if (static_cast<int>(a.size()) != n) throw InputError("a must have n rows");
    MetricSpec s;
    s.n = n;
    s.family = family;
    s.params = std::move(params);
    s.a.resize(n * n);
    for (int i = 0; i < n; ++i) {
        int len = static_cast<int>(a[i].size());
        // full rows, or upper-triangle rows of length n - i
        bool full = len == n;
        if (!full && len != n - i) throw InputError("row " + std::to_string(i + 1) + " of a has wrong length");
        for (int j = i; j < n; ++j) {
            const std::string& text = full ? a[i][j] : a[i][j - i];
            Expression e = parse_field(text, cell(i, j), n, s.params);
            if (full && i != j && a[j].size() == static_cast<std::size_t>(n)) {
                Expression t = parse_field(a[j][i], cell(j, i), n, s.params);
                if (!(t == e) && !same_values(e, t, n, s.params))
                    throw InputError("a is not symmetric at (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
            }
            s.a[i * n + j] = e;
            s.a[j * n + i] = e;
        }
    }
    bool all_zero = true;
    for (int i = 0; i < n; ++i) {
        Expression e = parse_field(b[i], "b[" + std::to_string(i + 1) + "]", n, s.params);
        if (!e.is_constant() || eval(e, std::vector<double>(n, 0.0), s.params) != 0.0) all_zero = false;
        s.b.push_back(e);
    }
    if (family == Family::singular_square && all_zero) throw InputError("singular square metric needs a nonzero b");
    if (c_expr) {
        s.c_expr = parse_field(*c_expr, "c", n, s.params);
    }
    if (d_expr) {
        s.d_expr = parse_field(*d_expr, "d", n, s.params);
    }
    return s;
}

namespace {

void check_positive(const Matrix& a) {
    int n = static_cast<int>(a.rows());
    double lo = INFINITY, hi = -INFINITY;
    for (int i = 0; i < n; ++i) {
        double r = 0;
        for (int j = 0; j < n; ++j)
            if (j != i) r += std::abs(a(i, j));
        lo = std::min(lo, a(i, i) - r);
        hi = std::max(hi, a(i, i) + r);
    }
    // Gershgorin settles the common case
    if (lo > 1e-10 * hi) return;
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    double emin = es.eigenvalues().minCoeff(), emax = es.eigenvalues().maxCoeff();
    if (!(emin > 1e-10 * emax)) throw NotPositiveDefinite(emin, emax);
}

}

ChartFrame frame_from_jets(const Vector& x, std::vector<Jet2> a_jets, std::vector<Jet2> b_jets) {
    int n = static_cast<int>(b_jets.size());
    ChartFrame f;
    f.n = n;
    f.x = x;
    f.a.resize(n, n);
    f.da = T3(n);
    f.dda = T4(n);
    f.b.resize(n);
    f.db.resize(n, n);
    f.ddb = T3(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Jet2& e = a_jets[i * n + j];
            f.a(i, j) = e.value;
            for (int k = 0; k < n; ++k) {
                f.da(i, j, k) = e.grad[k];
                for (int l = 0; l < n; ++l) f.dda(i, j, k, l) = e.hess(k, l);
            }
        }
        const Jet2& e = b_jets[i];
        f.b[i] = e.value;
        for (int j = 0; j < n; ++j) {
            f.db(i, j) = e.grad[j];
            for (int k = 0; k < n; ++k) f.ddb(i, j, k) = e.hess(j, k);
        }
    }
    for (double v : f.a.reshaped())
        if (!std::isfinite(v)) throw DomainError("metric is not finite");
    check_positive(f.a);
    f.ainv = f.a.ldlt().solve(Matrix::Identity(n, n));
    f.ainv = 0.5 * (f.ainv + f.ainv.transpose()).eval();
    if ((f.a * f.ainv - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() >= 1e-12)
        f.ainv = f.a.fullPivLu().inverse();
    f.bup = f.ainv * f.b;
    f.b2 = f.b.dot(f.bup);

    // lower symbols G(l,j,k) = 1/2 (d_j a_lk + d_k a_jl - d_l a_jk) and their derivatives
    T3 low(n);
    T4 dlow(n);
    for (int l = 0; l < n; ++l)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                low(l, j, k) = 0.5 * (f.da(l, k, j) + f.da(j, l, k) - f.da(j, k, l));
                for (int m = 0; m < n; ++m)
                    dlow(l, j, k, m) = 0.5 * (f.dda(l, k, j, m) + f.dda(j, l, k, m) - f.dda(j, k, l, m));
            }
    f.gamma = T3(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double s = 0;
                for (int l = 0; l < n; ++l) s += f.ainv(i, l) * low(l, j, k);
                f.gamma(i, j, k) = s;
            }
    // d_m Gamma^i_jk = a^il (d_m G_ljk - d_m a_lq Gamma^q_jk)
    f.dgamma = T4(n);
    for (int l = 0; l < n; ++l)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int m = 0; m < n; ++m) {
                    double s = dlow(l, j, k, m);
                    for (int q = 0; q < n; ++q) s -= f.da(l, q, m) * f.gamma(q, j, k);
                    dlow(l, j, k, m) = s;
                }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int m = 0; m < n; ++m) {
                    double s = 0;
                    for (int l = 0; l < n; ++l) s += f.ainv(i, l) * dlow(l, j, k, m);
                    f.dgamma(i, j, k, m) = s;
                }
    f.a_jets = std::move(a_jets);
    f.b_jets = std::move(b_jets);
    return f;
}

ChartFrame assemble_chart(const MetricSpec& spec, const Vector& x) {
    int n = spec.n;
    if (x.size() != n) throw InputError("point has wrong dimension");
    std::span<const double> xs(x.data(), n);
    std::vector<Jet2> aj(n * n), bj(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            aj[i * n + j] = eval_jet2(spec.a_at(i, j), xs, spec.params);
            aj[j * n + i] = aj[i * n + j];
        }
        bj[i] = eval_jet2(spec.b[i], xs, spec.params);
    }
    ChartFrame f = frame_from_jets(x, std::move(aj), std::move(bj));
    f.spec = std::make_shared<const MetricSpec>(spec);
    return f;
}

Jet2 b2_jet(const ChartFrame& f) {
    int n = f.n;
    std::vector<Jet2> A(f.a_jets.begin(), f.a_jets.end());
    std::vector<Jet2> z = solve(A, f.b_jets);
    Jet2 s(n, 0.0);
    for (int i = 0; i < n; ++i) s += f.b_jets[i] * z[i];
    return s;
}

double AlphaCurvature::R(const Vector& X, const Vector& Y, const Vector& Z, const Vector& W) const {
    double s = 0;
    for (int k = 0; k < n; ++k) {
        if (X[k] == 0.0) continue;
        for (int m = 0; m < n; ++m)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) s += Rlow(k, m, i, j) * X[k] * Y[m] * Z[i] * W[j];
    }
    return s;
}

Matrix AlphaCurvature::raised(const Vector& u, const Vector& w) const {
    Matrix low = Matrix::Zero(n, n); // low(m,k) = R_{u m k w}
    for (int p = 0; p < n; ++p)
        for (int m = 0; m < n; ++m)
            for (int k = 0; k < n; ++k)
                for (int q = 0; q < n; ++q) low(m, k) += Rlow(p, m, k, q) * u[p] * w[q];
    return ainv * low;
}

AlphaCurvature alpha_curvature(const ChartFrame& f, const Vector& y, Convention conv) {
    int n = f.n;
    if (y.size() != n) throw InputError("direction has wrong dimension");
    if (y.cwiseAbs().maxCoeff() == 0.0) throw ZeroDirection();
    AlphaCurvature c;
    c.n = n;
    c.ainv = f.ainv;
    c.R4 = T4(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    double s = f.dgamma(i, j, l, k) - f.dgamma(i, j, k, l);
                    for (int m = 0; m < n; ++m) s += f.gamma(i, k, m) * f.gamma(m, j, l) - f.gamma(i, l, m) * f.gamma(m, j, k);
                    c.R4(i, j, k, l) = s;
                }
    if (conv == Convention::flipped) c.R4 *= -1.0;
    c.Rlow = T4(n);
    for (int k = 0; k < n; ++k)
        for (int m = 0; m < n; ++m)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double s = 0;
                    for (int p = 0; p < n; ++p) s += f.a(m, p) * c.R4(p, k, i, j);
                    c.Rlow(k, m, i, j) = s;
                }
    c.Rik = Matrix::Zero(n, n);
    c.ric = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l) c.Rik(i, k) += c.R4(i, j, k, l) * y[j] * y[l];
    for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l)
            for (int m = 0; m < n; ++m) c.ric(j, l) += c.R4(m, j, m, l);
    c.ric00 = c.Rik.trace();
    return c;
}

CovariantB covariant_b(const ChartFrame& f) {
    int n = f.n;
    CovariantB cb;
    cb.bij.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = f.db(i, j);
            for (int l = 0; l < n; ++l) s -= f.gamma(l, i, j) * f.b[l];
            cb.bij(i, j) = s;
        }
    // d_k b_{i|j} = d_j d_k b_i - d_k Gamma^l_ij b_l - Gamma^l_ij d_k b_l
    cb.bijk = T3(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double s = f.ddb(i, j, k);
                for (int l = 0; l < n; ++l) s -= f.dgamma(l, i, j, k) * f.b[l] + f.gamma(l, i, j) * f.db(l, k);
                for (int l = 0; l < n; ++l) s -= f.gamma(l, i, k) * cb.bij(l, j) + f.gamma(l, j, k) * cb.bij(i, l);
                cb.bijk(i, j, k) = s;
            }
    return cb;
}

double alpha_norm(const ChartFrame& f, const Vector& y) {
    double a2 = y.dot(f.a * y);
    if (!(a2 > 0.0)) throw ZeroDirection();
    return std::sqrt(a2);
}

}
