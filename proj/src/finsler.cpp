#include "finslerlab/finsler.hpp"

#include <cmath>
#include <optional>
#include <type_traits>

#include "finslerlab/error.hpp"

namespace finslerlab {

GuardReport check_guards(Family family, const ChartFrame& f, const Vector& y) {
    GuardReport g;
    double a2 = y.dot(f.a * y);
    g.alpha = a2 > 0 ? std::sqrt(a2) : 0.0;
    g.b2 = f.b2;
    double beta = f.b.dot(y);
    if (!(g.alpha > guard_alpha)) {
        g.reason = "alpha below guard";
        return g;
    }
    switch (family) {
    case Family::singular_square: {
        if (!(g.b2 > guard_b2)) {
            g.reason = "b^2 below guard";
            return g;
        }
        double ba = std::sqrt(g.b2) * g.alpha;
        g.margin = (ba - beta) / ba;
        if (!(ba + beta > 0)) {
            g.reason = "F vanishes in this direction";
            return g;
        }
        break;
    }
    case Family::square:
        g.margin = std::min((g.alpha - beta) / g.alpha, (g.alpha + beta) / g.alpha);
        break;
    case Family::riemannian_only:
        g.margin = 1.0;
        break;
    }
    if (!(g.margin > guard_margin)) {
        g.reason = "too close to the singular cone";
        return g;
    }
    g.ok = true;
    return g;
}

void require_guards(Family family, const ChartFrame& f, const Vector& y) {
    if (y.cwiseAbs().maxCoeff() == 0.0) throw ZeroDirection();
    GuardReport g = check_guards(family, f, y);
    if (!g.ok) {
        if (family == Family::singular_square && !(g.b2 > guard_b2)) throw DegenerateBeta();
        throw GuardViolation(g.reason);
    }
}

double finsler_norm(Family family, const ChartFrame& f, const Vector& y) {
    double alpha = alpha_norm(f, y);
    double beta = f.b.dot(y);
    switch (family) {
    case Family::singular_square: {
        if (!(f.b2 > 0.0)) throw DegenerateBeta();
        double p = std::sqrt(f.b2) * alpha + beta;
        return p * p / alpha;
    }
    case Family::square: {
        double p = alpha + beta;
        return p * p / alpha;
    }
    case Family::riemannian_only: return alpha;
    }
    return alpha;
}

namespace {

TaylorJetDD power(const TaylorJetDD& u, int k) {
    if (k < 0) return reciprocal(power(u, -k));
    TaylorJetDD r(u.layout(), DDouble(1.0)), base = u;
    for (; k > 0; k >>= 1) {
        if (k & 1) r = r * base;
        if (k > 1) base = base * base;
    }
    return r;
}

// second-order x-jet of an expression in double-double arithmetic
TaylorJetDD expr_jet(const Node& nd, const Layout& S, const Vector& x, const Params& p) {
    switch (nd.op) {
    case Op::number: return TaylorJetDD(S, DDouble(nd.number));
    case Op::coord: return TaylorJetDD::x_variable(S, nd.coord, x[nd.coord]);
    case Op::param: return TaylorJetDD(S, DDouble(p.at(nd.name)));
    case Op::add: return expr_jet(*nd.lhs, S, x, p) + expr_jet(*nd.rhs, S, x, p);
    case Op::sub: return expr_jet(*nd.lhs, S, x, p) - expr_jet(*nd.rhs, S, x, p);
    case Op::mul: return expr_jet(*nd.lhs, S, x, p) * expr_jet(*nd.rhs, S, x, p);
    case Op::div: return expr_jet(*nd.lhs, S, x, p) / expr_jet(*nd.rhs, S, x, p);
    case Op::neg: return expr_jet(*nd.lhs, S, x, p) * -1.0;
    case Op::sqrt: return sqrt(expr_jet(*nd.lhs, S, x, p));
    case Op::pow: {
        TaylorJetDD u = expr_jet(*nd.lhs, S, x, p);
        return nd.half ? u * sqrt(u) : power(u, nd.exponent);
    }
    }
    return TaylorJetDD(S);
}

struct SourceJets {
    std::vector<TaylorJetDD> a, b;
    TaylorJetDD b_norm; // sqrt(a^ij b_i b_j)
};

// a_ij, b_i and b from the source expressions, lifted into L
SourceJets source_jets(const MetricSpec& spec, const Vector& x, const Layout& L) {
    int n = spec.n;
    const Layout& S = layout(n, 2);
    std::vector<TaylorJetDD> a(n * n, TaylorJetDD(S)), b;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) a[i * n + j] = a[j * n + i] = expr_jet(spec.a_at(i, j).root(), S, x, spec.params);
        b.push_back(expr_jet(spec.b[i].root(), S, x, spec.params));
    }
    // b2 = b_i z^i with a z = b, by elimination without pivoting on the positive definite a
    std::vector<TaylorJetDD> m = a, z = b;
    for (int k = 0; k < n; ++k) {
        TaylorJetDD inv = reciprocal(m[k * n + k]);
        for (int i = k + 1; i < n; ++i) {
            TaylorJetDD r = m[i * n + k] * inv;
            for (int j = k; j < n; ++j) m[i * n + j] -= r * m[k * n + j];
            z[i] -= r * z[k];
        }
    }
    for (int k = n - 1; k >= 0; --k) {
        for (int j = k + 1; j < n; ++j) z[k] -= m[k * n + j] * z[j];
        z[k] = z[k] / m[k * n + k];
    }
    TaylorJetDD b2(S);
    for (int i = 0; i < n; ++i) b2 += b[i] * z[i];
    if (!(to_double(b2.value()) > 0.0)) throw DegenerateBeta();
    SourceJets out{{}, {}, TaylorJetDD::lift(L, sqrt(b2))};
    for (const auto& e : a) out.a.push_back(TaylorJetDD::lift(L, e));
    for (const auto& e : b) out.b.push_back(TaylorJetDD::lift(L, e));
    return out;
}

template <class K>
BasicTaylorJet<K> f2_jet_impl(Family family, const ChartFrame& f, const Vector& y, int order) {
    using Jet = BasicTaylorJet<K>;
    int n = f.n;
    const Layout& L = layout(n, order);
    std::vector<Jet> Y, A, B;
    std::optional<Jet> bnorm;
    for (int k = 0; k < n; ++k) Y.push_back(Jet::y_variable(L, k, y[k]));
    if constexpr (std::is_same_v<K, DDouble>) {
        if (f.spec) {
            SourceJets s = source_jets(*f.spec, f.x, L);
            A = std::move(s.a);
            B = std::move(s.b);
            bnorm = std::move(s.b_norm);
        }
    }
    if (A.empty()) {
        for (const Jet2& j : f.a_jets) A.push_back(Jet::from_x_jet(L, j));
        for (const Jet2& j : f.b_jets) B.push_back(Jet::from_x_jet(L, j));
    }
    Jet a2(L), beta(L);
    for (int i = 0; i < n; ++i) {
        Jet ay(L);
        for (int j = 0; j < n; ++j) ay += A[i * n + j] * Y[j];
        a2 += ay * Y[i];
        beta += B[i] * Y[i];
    }
    if (family == Family::riemannian_only) return a2;
    Jet alpha = sqrt(a2);
    Jet p = beta;
    if (family == Family::singular_square) {
        if (!bnorm) {
            Jet2 b2 = b2_jet(f);
            if (!(b2.value > 0.0)) throw DegenerateBeta();
            bnorm = Jet::from_x_jet(L, sqrt(b2));
        }
        p += *bnorm * alpha;
    } else {
        p += alpha;
    }
    Jet p2 = p * p;
    return p2 * p2 * reciprocal(a2);
}

}

TaylorJet f2_jet(Family family, const ChartFrame& f, const Vector& y, int order) {
    return f2_jet_impl<double>(family, f, y, order);
}

namespace {

// solve g x = w for Taylor jets, then keep validity (xcap, tcap)
template <class K>
std::vector<BasicTaylorJet<K>> solve_jets(std::vector<BasicTaylorJet<K>> g, std::vector<BasicTaylorJet<K>> w,
                                          int xcap, int tcap) {
    using Jet = BasicTaylorJet<K>;
    int n = static_cast<int>(w.size());
    auto mag = [&](int r, int c) { return std::abs(to_double(g[r * n + c].value())); };
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (mag(r, c) > mag(piv, c)) piv = r;
        if (mag(piv, c) == 0.0) throw SingularFundamentalTensor(INFINITY);
        if (piv != c) {
            for (int k = 0; k < n; ++k) std::swap(g[c * n + k], g[piv * n + k]);
            std::swap(w[c], w[piv]);
        }
        Jet inv = reciprocal(g[c * n + c]);
        for (int r = c + 1; r < n; ++r) {
            Jet fct = multiply(g[r * n + c], inv, xcap, tcap);
            for (int k = c + 1; k < n; ++k) g[r * n + k] -= multiply(fct, g[c * n + k], xcap, tcap);
            w[r] -= multiply(fct, w[c], xcap, tcap);
        }
    }
    std::vector<Jet> x(w);
    for (int r = n - 1; r >= 0; --r) {
        Jet s = w[r];
        for (int k = r + 1; k < n; ++k) s -= multiply(g[r * n + k], x[k], xcap, tcap);
        x[r] = multiply(s, reciprocal(g[r * n + r]), xcap, tcap);
    }
    return x;
}

template <class K>
Matrix values(const std::vector<BasicTaylorJet<K>>& m, int n) {
    Matrix out(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(i, j) = to_double(m[i * n + j].value());
    return out;
}

void check_condition(const Matrix& g) {
    Eigen::JacobiSVD<Matrix> svd(g);
    const auto& sv = svd.singularValues();
    double cond = sv[sv.size() - 1] > 0 ? sv[0] / sv[sv.size() - 1] : INFINITY;
    if (!(cond <= 1e12)) throw SingularFundamentalTensor(cond);
}

}

std::pair<Matrix, Matrix> fundamental_tensor(Family family, const ChartFrame& f, const Vector& y) {
    int n = f.n;
    TaylorJet F2 = f2_jet(family, f, y, 2);
    Jet2 yj = F2.y_jet();
    Matrix g = 0.5 * yj.hess;
    (void)n;
    check_condition(g);
    return {g, g.inverse()};
}

CurvatureBundle berwald(Family family, const ChartFrame& f, const Vector& y, bool ricci) {
    int n = f.n;
    if (y.cwiseAbs().maxCoeff() == 0.0) throw ZeroDirection();
    // double-double coefficients: the y-Hessian of the trace cancels heavily near F = 0
    using Jet = TaylorJetDD;
    int T = ricci ? 6 : 4;
    const Layout& L = layout(n, T);
    Jet F2 = f2_jet_impl<DDouble>(family, f, y, T);

    std::vector<Jet> Y;
    for (int k = 0; k < n; ++k) Y.push_back(Jet::y_variable(L, k, y[k]));
    std::vector<Jet> F2y, F2x;
    for (int k = 0; k < n; ++k) {
        F2y.push_back(F2.derivative(n + k));
        F2x.push_back(F2.derivative(k));
    }
    std::vector<Jet> g;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g.push_back(0.5 * F2y[i].derivative(n + j));
    std::vector<Jet> w;
    for (int l = 0; l < n; ++l) {
        Jet s(L);
        for (int k = 0; k < n; ++k) s += multiply(F2y[l].derivative(k), Y[k], 1, unbounded);
        s -= F2x[l];
        w.push_back(s);
    }

    CurvatureBundle c;
    double F2v = to_double(F2.value());
    c.F = std::sqrt(F2v);
    c.g = values(g, n);
    check_condition(c.g);
    c.ginv = c.g.inverse();
    c.Fy.resize(n);
    for (int k = 0; k < n; ++k) c.Fy[k] = to_double(F2y[k].value()) / (2.0 * c.F);
    c.domain_margin = check_guards(family, f, y).margin;

    std::vector<Jet> G = solve_jets(g, w, 1, unbounded);
    for (auto& Gi : G) Gi *= DDouble(0.25);
    c.G.resize(n);
    for (int i = 0; i < n; ++i) c.G[i] = to_double(G[i].value());

    int tc = T - 4;
    std::vector<Jet> Gy;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) Gy.push_back(G[i].derivative(n + k));
    std::vector<Jet> FR;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            Jet s = 2.0 * G[i].derivative(k);
            const Jet& Giyk = Gy[i * n + k];
            for (int l = 0; l < n; ++l) {
                s -= multiply(Giyk.derivative(l), Y[l], 0, tc);
                s += 2.0 * multiply(G[l], Giyk.derivative(n + l), 0, tc);
                s -= multiply(Gy[i * n + l], Gy[l * n + k], 0, tc);
            }
            FR.push_back(s);
        }
    c.FR = values(FR, n);
    if (ricci) {
        Jet tr = FR[0];
        for (int m = 1; m < n; ++m) tr += FR[m * n + m];
        Jet2 tj = tr.y_jet();
        c.FRic = 0.5 * tj.hess;
        c.FRic00 = y.dot(c.FRic * y);
        c.has_ricci = true;
    }
    return c;
}

FlagResidual flag_constancy_residual(const CurvatureBundle& c, const Vector& y, double K) {
    int n = static_cast<int>(y.size());
    double F2 = c.F * c.F;
    FlagResidual r;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            double target = K * (F2 * (i == k ? 1.0 : 0.0) - c.F * y[i] * c.Fy[k]);
            r.tensor = std::max(r.tensor, std::abs(c.FR(i, k) - target) / F2);
        }
    double ric = c.has_ricci ? c.FRic00 : c.FR.trace();
    r.ricci = std::abs(ric - (n - 1) * K * F2) / F2;
    return r;
}

}
