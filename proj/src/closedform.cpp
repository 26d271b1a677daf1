#include "finslerlab/closedform.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "finslerlab/error.hpp"
#include "finslerlab/finsler.hpp"
#include "finslerlab/taylor.hpp"

namespace finslerlab {

double neumaier_sum(std::vector<double> terms) {
    std::sort(terms.begin(), terms.end(), [](double u, double v) { return std::abs(u) > std::abs(v); });
    double s = 0, comp = 0;
    for (double t : terms) {
        double u = s + t;
        if (std::abs(s) >= std::abs(t))
            comp += (s - u) + t;
        else
            comp += (t - u) + s;
        s = u;
    }
    return s + comp;
}

CoefficientContext make_context(const BetaTensors& bt, const Vector& y) {
    if (y.cwiseAbs().maxCoeff() == 0.0) throw ZeroDirection();
    CoefficientContext ctx;
    ctx.n = bt.n;
    double a2 = y.dot(bt.a * y);
    ctx.alpha = a2 > 0 ? std::sqrt(a2) : 0.0;
    ctx.beta = bt.b.dot(y);
    if (!(ctx.alpha > guard_alpha)) throw GuardViolation("alpha below guard");
    if (!(bt.b2 > guard_b2)) throw DegenerateBeta();
    ctx.b = std::sqrt(bt.b2);
    double ba = ctx.b * ctx.alpha;
    if (!((ba - ctx.beta) / ba > guard_margin)) throw GuardViolation("too close to the singular cone");
    if (!(ba + ctx.beta > 0)) throw GuardViolation("F vanishes in this direction");
    return ctx;
}

namespace {

enum class Kind { scalar, upper, lower, matrix };

std::vector<std::string> split(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

// block vocabulary; in the Riemann table some tokens stand for fixed combinations
template <class S>
class Resolver {
public:
    Resolver(const Blocks<S>& B, bool riemann) : B_(B), riemann_(riemann) {}

    Kind kind(const std::string& t) const {
        if (name_index(scalar_names, t) >= 0) return Kind::scalar;
        if (name_index(upper_names, t) >= 0) return Kind::upper;
        if (name_index(lower_names, t) >= 0) return Kind::lower;
        if (name_index(matrix_names, t) >= 0) return Kind::matrix;
        throw InputError("unknown block token '" + t + "'");
    }

    S scalar(const std::string& t) const {
        if (riemann_ && t == "p0") return B_.scalar("p0") - B_.scalar("q*0");
        return B_.scalar(t);
    }

    std::vector<S> upper(const std::string& t) const {
        if (riemann_ && t == "ri|0") return combine(B_.upper("ri|0"), B_.upper("si|0"), 1.0);
        if (riemann_ && t == "qi") return combine(B_.upper("qi"), B_.upper("ti"), 1.0);
        return B_.upper(t);
    }

    std::vector<S> lower(const std::string& t) const {
        if (riemann_) {
            if (t == "r00|k") return combine(B_.lower("r00|k"), B_.lower("rk0|0"), -1.0);
            if (t == "q0k") return combine(B_.lower("q0k"), B_.lower("qk0"), -2.0);
            if (t == "rk|0") return combine(B_.lower("rk|0"), B_.lower("r0|k"), -2.0);
            if (t == "sk|0") return combine(B_.lower("sk|0"), B_.lower("s0|k"), -2.0);
            if (t == "pk") return combine(B_.lower("pk"), B_.lower("q*k"), -1.0);
        }
        return B_.lower(t);
    }

    std::vector<S> matrix(const std::string& t) const {
        if (riemann_ && t == "sik|0") return combine(B_.matrix("sik|0"), B_.matrix("si0|k"), -2.0);
        if (riemann_ && t == "ri|k") return combine(B_.matrix("ri|k"), B_.matrix("si|k"), 1.0);
        return B_.matrix(t);
    }

private:
    const Blocks<S>& B_;
    bool riemann_;

    static std::vector<S> combine(std::vector<S> u, const std::vector<S>& v, double w) {
        for (std::size_t i = 0; i < u.size(); ++i) u[i] += w * v[i];
        return u;
    }
};

template <class S>
S product_of_scalars(const Resolver<S>& R, const std::vector<std::string>& tokens, const S& one,
                     const std::string& block) {
    S s = one;
    for (const auto& t : tokens) {
        if (R.kind(t) != Kind::scalar) throw InputError("block '" + block + "' must be scalar");
        s = s * R.scalar(t);
    }
    return s;
}

// the (i,k) tensor of a Riemann block
template <class S>
std::vector<S> riemann_block(const Resolver<S>& R, const std::string& block, int n, const S& one) {
    std::vector<std::string> scal;
    std::vector<S> up, lo, mat;
    int tensors = 0;
    for (const auto& t : split(block)) {
        switch (R.kind(t)) {
        case Kind::scalar: scal.push_back(t); break;
        case Kind::upper:
            if (!up.empty()) throw InputError("block '" + block + "' has two upper factors");
            up = R.upper(t);
            ++tensors;
            break;
        case Kind::lower:
            if (!lo.empty()) throw InputError("block '" + block + "' has two lower factors");
            lo = R.lower(t);
            ++tensors;
            break;
        case Kind::matrix:
            mat = R.matrix(t);
            tensors += 2;
            break;
        }
    }
    if (tensors != 2 || (mat.empty() && (up.empty() || lo.empty())))
        throw InputError("block '" + block + "' does not have one upper and one lower index");
    S s = product_of_scalars(R, scal, one, block);
    std::vector<S> out(n * n, one);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) out[i * n + k] = mat.empty() ? s * up[i] * lo[k] : s * mat[i * n + k];
    return out;
}

template <class S>
struct RiemannParts {
    std::vector<S> alpha;
    std::vector<std::vector<S>> terms;
};

template <class S>
RiemannParts<S> riemann_parts(const CoefficientSet& set, const BetaTensors& bt, const AlphaCurvature& ac,
                              const std::vector<S>& y, double b) {
    int n = bt.n;
    Blocks<S> B = make_blocks(bt, y);
    Resolver<S> R(B, true);
    S zero = detail::zero_like(y[0]);
    S one = zero + 1.0;
    using std::sqrt;
    S alpha = sqrt(B.scalar("alpha2"));
    Powers<S> pw(n, b, alpha, B.scalar("beta"), set.max_exponents());
    RiemannParts<S> out;
    out.alpha.assign(n * n, zero);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l) {
                    double c = ac.R4(i, j, k, l);
                    if (c != 0.0) out.alpha[i * n + k] += c * (y[j] * y[l]);
                }
    for (const Coefficient& c : set.table("riemann")) {
        S w = evaluate(c, pw);
        std::vector<S> blk = riemann_block(R, c.block, n, one);
        for (auto& v : blk) v = w * v;
        out.terms.push_back(std::move(blk));
    }
    return out;
}

template <class S>
std::vector<std::pair<const Coefficient*, S>> scalar_terms(const std::vector<Coefficient>& table,
                                                          const Resolver<S>& R, const Powers<S>& pw,
                                                          const S& ric00, double K) {
    S one = pw.alpha(0);
    std::vector<std::pair<const Coefficient*, S>> out;
    for (const Coefficient& c : table) {
        S blk = one;
        if (c.block == "Ric00")
            blk = ric00;
        else if (c.block == "K")
            blk = one * K;
        else
            blk = product_of_scalars(R, split(c.block), one, c.block);
        out.emplace_back(&c, evaluate(c, pw) * blk);
    }
    return out;
}

}

ClosedRiemann closed_riemann(const CoefficientSet& set, const BetaTensors& bt, const AlphaCurvature& ac,
                             const Vector& y) {
    CoefficientContext ctx = make_context(bt, y);
    int n = bt.n;
    std::vector<double> yv(y.data(), y.data() + n);
    RiemannParts<double> parts = riemann_parts(set, bt, ac, yv, ctx.b);
    ClosedRiemann out;
    out.alpha.resize(n, n);
    out.FR.resize(n, n);
    const auto& table = set.table("riemann");
    for (std::size_t t = 0; t < table.size(); ++t) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) m(i, k) = parts.terms[t][i * n + k];
        out.terms.push_back({table[t].name, table[t].block, std::move(m)});
    }
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            out.alpha(i, k) = parts.alpha[i * n + k];
            std::vector<double> v{out.alpha(i, k)};
            for (const auto& tm : out.terms) v.push_back(tm.value(i, k));
            out.FR(i, k) = neumaier_sum(std::move(v));
        }
    return out;
}

ClosedRicci closed_ricci(const CoefficientSet& set, const BetaTensors& bt, const AlphaCurvature& ac,
                         const Vector& y) {
    CoefficientContext ctx = make_context(bt, y);
    Blocks<double> B = make_blocks(bt, y);
    Resolver<double> R(B, false);
    Powers<double> pw(bt.n, ctx.b, ctx.alpha, ctx.beta, set.max_exponents());
    ClosedRicci out;
    out.alpha = ac.ric00;
    std::vector<double> v{ac.ric00};
    for (const auto& [c, val] : scalar_terms(set.table("ricci"), R, pw, ac.ric00, 0.0)) {
        out.terms.push_back({c->name, c->block, val});
        v.push_back(val);
    }
    out.FRic00 = neumaier_sum(std::move(v));
    return out;
}

double closed_ricci_from_trace(const CoefficientSet& set, const BetaTensors& bt, const AlphaCurvature& ac,
                               const Vector& y) {
    CoefficientContext ctx = make_context(bt, y);
    int n = bt.n;
    const Layout& L = layout(n, 2);
    std::vector<TaylorJetDD> yj;
    for (int k = 0; k < n; ++k) yj.push_back(TaylorJetDD::y_variable(L, k, y[k]));
    RiemannParts<TaylorJetDD> parts = riemann_parts(set, bt, ac, yj, ctx.b);
    TaylorJetDD tr(L);
    for (int m = 0; m < n; ++m) {
        tr += parts.alpha[m * n + m];
        for (const auto& t : parts.terms) tr += t[m * n + m];
    }
    Matrix ric = 0.5 * tr.y_jet().hess;
    return y.dot(ric * y);
}

RatIrrat rat_irrat(const CoefficientSet& set, const BetaTensors& bt, const AlphaCurvature& ac, const Vector& y,
                   double K) {
    CoefficientContext ctx = make_context(bt, y);
    Blocks<double> B = make_blocks(bt, y);
    Resolver<double> R(B, false);
    Powers<double> pw(bt.n, ctx.b, ctx.alpha, ctx.beta, set.max_exponents());
    RatIrrat out;
    std::vector<double> v;
    for (const auto& [c, val] : scalar_terms(set.table("rat"), R, pw, ac.ric00, K)) {
        out.rat_terms.push_back({c->name, c->block, val});
        v.push_back(val);
    }
    out.rat = neumaier_sum(v);
    v.clear();
    for (const auto& [c, val] : scalar_terms(set.table("irrat"), R, pw, ac.ric00, K)) {
        out.irrat_terms.push_back({c->name, c->block, val});
        v.push_back(val);
    }
    out.irrat = neumaier_sum(v);
    return out;
}

double poly12_residual(const CoefficientSet& set, const BetaTensors& bt, const AlphaCurvature& ac, const Vector& y,
                       double K, Poly12Form form) {
    CoefficientContext ctx = make_context(bt, y);
    RatIrrat ri = rat_irrat(set, bt, ac, y, K);
    Blocks<double> B = make_blocks(bt, y);
    Resolver<double> R(B, false);
    Powers<double> pw(bt.n, ctx.b, ctx.alpha, ctx.beta, set.max_exponents());
    double b2 = bt.b2, b4 = b2 * b2, be = ctx.beta;
    double Q = b2 * ctx.alpha * ctx.alpha - be * be;
    Residual res;
    for (const auto& t : ri.rat_terms) res.add(b4 * b2 * t.value);
    for (const auto& t : ri.irrat_terms) res.add(-b4 * be * t.value);
    auto term = [&](const char* name) { return evaluate(set.entry("poly", name), pw); };
    double h = b4 * B.scalar("r00") - 2 * b2 * be * B.scalar("r0") + be * be * B.scalar("r");
    res.add(-h * h * term("P2"));
    if (form == Poly12Form::literal) {
        res.add(-Q * term("P1ric") * ac.ric00);
        res.add(-Q * term("P1r0l0") * B.scalar("r0|0"));
        res.add(-Q * term("P1s0l0") * B.scalar("s0|0"));
        res.add(-Q * term("P1si0li") * B.scalar("si0|i"));
    } else {
        for (const auto& [c, val] : scalar_terms(set.table("quotient"), R, pw, ac.ric00, K)) res.add(-Q * val);
    }
    return res.value();
}

}
