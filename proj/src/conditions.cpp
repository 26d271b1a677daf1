#include "finslerlab/conditions.hpp"

#include <algorithm>
#include <cmath>

#include "finslerlab/error.hpp"
#include "finslerlab/finsler.hpp"

namespace finslerlab {

namespace {

double rel(std::initializer_list<double> terms) {
    Residual r;
    for (double t : terms) r.add(t);
    return r.value();
}

// worst component of a tensor-valued residual given as a list of weighted tensors
double worst(int rows, int cols, const std::vector<std::pair<double, Matrix>>& parts) {
    double w = 0;
    for (int i = 0; i < rows; ++i)
        for (int k = 0; k < cols; ++k) {
            Residual r;
            for (const auto& [c, M] : parts) r.add(c * M(i, k));
            w = std::max(w, r.value());
        }
    return w;
}

Matrix col(const Vector& v) { return Matrix(v); }

Matrix as_matrix(const std::vector<double>& v, int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) m(i, k) = v[i * n + k];
    return m;
}

Vector as_vector(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), v.size()); }

Matrix orthogonal_complement(const Vector& v) {
    int n = static_cast<int>(v.size());
    Eigen::HouseholderQR<Matrix> qr(col(v));
    Matrix Q = qr.householderQ() * Matrix::Identity(n, n);
    return Q.rightCols(n - 1);
}

// terms whose sum is -9 b^4 times the Ricci-flat form of Ric_00
template <class S>
std::vector<S> ric00_terms(const Blocks<S>& B, int n, double b2, const ScalarField& sf, const Vector& bup,
                           const std::vector<S>& y) {
    double b4 = b2 * b2, b6 = b4 * b2, c = sf.c, d = sf.d;
    double db = sf.dd.dot(bup);
    S d0 = detail::dotv(sf.dd, y);
    const S& al2 = B.scalar("alpha2");
    const S& be = B.scalar("beta");
    const S& s0 = B.scalar("s0");
    double t = value_of(B.scalar("t")), sii = value_of(B.scalar("si|i"));
    double m = n - 2;
    return {(9 * (n - 1) * b2 * c * c) * al2,
            (-2 * b6 * d * d) * al2,
            (-6 * b4 * db) * al2,
            (144.0 * (n - 3) * t) * al2,
            (36 * b2 * sii) * al2,
            (-2 * m * b4 * d * d) * (be * be),
            (-6 * m * b4) * (be * d0),
            (-72 * m * c) * (be * s0),
            (-84 * m * b2 * d) * (be * s0),
            (288 * m) * (s0 * s0),
            (36 * m * b2) * B.scalar("s0|0")};
}

struct Common {
    int n;
    double b2, b4, b6, c, d, c0, cb, d0, db, al2, be, s0, t, t0, sii, s0b, si0i;
    Blocks<double> B;

    explicit Common(const PointData& p) : B(make_blocks(p.bt, p.y)) {
        n = p.bt.n;
        b2 = p.bt.b2;
        b4 = b2 * b2;
        b6 = b4 * b2;
        c = p.sf.c;
        d = p.sf.d;
        c0 = p.sf.dc.dot(p.y);
        cb = p.sf.dc.dot(p.bt.bup);
        d0 = p.sf.dd.dot(p.y);
        db = p.sf.dd.dot(p.bt.bup);
        al2 = B.scalar("alpha2");
        be = B.scalar("beta");
        s0 = B.scalar("s0");
        t = B.scalar("t");
        t0 = B.scalar("t0");
        sii = B.scalar("si|i");
        s0b = B.scalar("s0|b");
        si0i = B.scalar("si0|i");
    }
    double X() const {
        return -2 * b2 * s0b - b4 * (c0 + b2 * d0) + b2 * be * (cb + b2 * db) - 2 * b2 * (2 * c - b2 * d) * s0 -
               2 * b2 * t0 - 6 * be * t;
    }
    double Y() const { return 9 * cb + 6 * b2 * db - (9 * c * c + 9 * b2 * c * d - 2 * b4 * d * d); }
    double Z() const {
        return 9 * b2 * c0 + 6 * b4 * d0 - (9 * c * c + 9 * b2 * c * d - 2 * b4 * d * d) * be +
               6 * (9 * c + 2 * b2 * d) * s0;
    }
    // the closed forms of Ric_{0b} and Ric_{bb} implied by the ricci-flat form of Ric_00
    double ric0_display() const {
        double m = n - 2;
        double lead = 9 * (n - 1) * b2 * c * c - 2 * (n - 1) * b6 * d * d - 3 * n * b4 * db +
                      18.0 * (5 * n - 18) * t + 36 * b2 * sii;
        double tail = 2 * b6 * d0 - b4 * be * db + 4 * b2 * (3 * c + b2 * d) * s0 + 30 * be * t;
        return -(lead * be - 3 * m * tail) / (9 * b4) + m / (9 * b4) * (9 * X() - b2 * be * Y() + b2 * Z());
    }
    double ric_display() const {
        return -(9 * (n - 1) * b2 * c * c - 2 * (n - 1) * b6 * d * d - 6 * (n - 1) * b4 * db - 144 * t +
                 36 * b2 * sii) /
               (9 * b2);
    }
};

}

Decomposition extract_decomposition(const ChartFrame& f, const BetaTensors& bt) {
    int n = bt.n;
    if (n < 2) throw InputError("decomposition needs n >= 2");
    int rows = n * (n + 1) / 2;
    Vector rhs(rows);
    Matrix A(rows, 2 + std::max(0, n - 1));
    bool degenerate = !(bt.b2 > guard_b2);
    Matrix N = degenerate ? Matrix::Zero(n, n - 1) : orthogonal_complement(bt.bup);
    int row = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j, ++row) {
            rhs[row] = bt.r(i, j);
            A(row, 0) = f.a(i, j);
            A(row, 1) = bt.b[i] * bt.b[j];
            for (int e = 0; e < n - 1; ++e) A(row, 2 + e) = bt.b[i] * N(j, e) + N(i, e) * bt.b[j];
        }
    if (degenerate) {
        Vector c = A.leftCols(1).colPivHouseholderQr().solve(rhs);
        throw RankDeficient("b vanishes: d and theta are not identifiable", c[0]);
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(A);
    qr.setThreshold(1e-12);
    Vector u = qr.solve(rhs);
    if (qr.rank() < A.cols()) throw RankDeficient("decomposition system is rank deficient", u[0]);
    Decomposition out;
    out.c = u[0];
    out.d = u[1];
    out.theta = N * u.tail(n - 1);
    Matrix rec = out.c * f.a + out.d * bt.b * bt.b.transpose() + bt.b * out.theta.transpose() +
                 out.theta * bt.b.transpose();
    out.residual = (bt.r - rec).cwiseAbs().maxCoeff();
    return out;
}

ScalarField scalar_field(const MetricSpec& spec, const Vector& x, double scale) {
    int n = spec.n;
    ScalarField out;
    std::span<const double> xs(x.data(), n);
    if (spec.c_expr && spec.d_expr) {
        Jet2 c = eval_jet2(*spec.c_expr, xs, spec.params), d = eval_jet2(*spec.d_expr, xs, spec.params);
        out.c = c.value;
        out.d = d.value;
        out.dc = c.grad;
        out.dd = d.grad;
        out.exact = true;
        return out;
    }
    if (spec.c_expr || spec.d_expr) throw MissingScalars("c_expr and d_expr must be given together");
    auto at = [&](const Vector& p) {
        ChartFrame f = assemble_chart(spec, p);
        try {
            return extract_decomposition(f, beta_tensors(f));
        } catch (const RankDeficient& e) {
            throw MissingScalars(std::string("cannot extract c and d: ") + e.what());
        }
    };
    Decomposition here = at(x);
    out.c = here.c;
    out.d = here.d;
    out.dc = Vector::Zero(n);
    out.dd = Vector::Zero(n);
    double h = stencil_step * scale;
    for (int k = 0; k < n; ++k) {
        Vector xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        Decomposition p = at(xp), m = at(xm);
        out.dc[k] = (p.c - m.c) / (2 * h);
        out.dd[k] = (p.d - m.d) / (2 * h);
    }
    return out;
}

ResidualMap check_einstein(const PointData& p) {
    Common q(p);
    const BetaTensors& bt = p.bt;
    int n = q.n;
    double b2 = q.b2, b4 = q.b4, c = q.c, d = q.d, be = q.be, s0 = q.s0, t = q.t;
    const Blocks<double>& B = q.B;
    std::vector<double> yv(p.y.data(), p.y.data() + n);
    ResidualMap out;

    {
        Residual r;
        r.add(9 * b4 * p.ac.ric00);
        for (double v : ric00_terms(B, n, b2, p.sf, bt.bup, yv)) r.add(v);
        out["ric00"] = r.value();
    }
    out["r00"] = rel({b2 * B.scalar("r00"), -b2 * c * q.al2, -b2 * d * be * be, 6 * be * s0});
    {
        Vector si0 = as_vector(B.upper("si0")), si = as_vector(B.upper("si"));
        out["si0"] = worst(n, 1, {{b2, col(si0)}, {-s0, col(bt.bup)}, {be, col(si)}});
    }
    Vector sk = bt.si;

    out["c0"] = rel({9 * b2 * q.c0, 6 * b4 * q.d0, -9 * c * c * be, -9 * b2 * c * d * be, 2 * b4 * d * d * be,
                     54 * c * s0, 12 * b2 * d * s0});
    out["s0|b"] = rel({b4 * q.c0, b4 * b2 * q.d0, -b2 * be * q.cb, -b4 * be * q.db, 4 * b2 * c * s0,
                       -2 * b4 * d * s0, 2 * b2 * q.t0, 6 * be * t, 2 * b2 * q.s0b});
    out["si0|i"] = rel({b4 * b2 * q.d0, -b4 * be * q.db, -6.0 * (n - 2) * b2 * c * s0, -4 * b4 * d * s0,
                        12 * be * t, 6 * b2 * be * q.sii, 6 * b4 * q.si0i});
    out["X"] = std::abs(q.X()) / std::max({1.0, b4 * std::abs(q.c0), b2 * std::abs(q.s0b), std::abs(be * t)});
    out["Y"] = std::abs(q.Y()) / std::max({1.0, 9 * std::abs(q.cb), 9 * c * c, 2 * b4 * d * d});
    out["Z"] = std::abs(q.Z()) / std::max({1.0, 9 * b2 * std::abs(q.c0), 9 * c * c * std::abs(be)});

    out["theta"] = rel({b2 * p.dec.theta.dot(p.y), 3 * s0});
    {
        Vector sk0 = as_vector(B.lower("sk0"));
        out["bi*si0"] = worst(n, 1, {{b2, col(sk0)}, {be, col(sk)}, {-s0, col(bt.b)}});
    }
    out["t00"] = rel({b4 * B.scalar("t00"), -be * be * t, b2 * s0 * s0});
    out["t0"] = rel({b2 * q.t0, -be * t});
    out["tii"] = rel({b2 * B.scalar("tii"), -2 * t});

    double ric0 = p.y.dot(p.ac.ric * bt.bup), ric = bt.bup.dot(p.ac.ric * bt.bup);
    out["ric0"] = rel({ric0, -q.ric0_display()});
    out["ric"] = rel({ric, -q.ric_display()});

    std::vector<Jet2> yj = y_jets(p.y);
    Blocks<Jet2> BJ = make_blocks(bt, yj);
    Jet2 sum = detail::zero_like(yj[0]);
    for (const Jet2& v : ric00_terms(BJ, n, b2, p.sf, bt.bup, yj)) sum += v;
    Jet2 rhs = sum * (-1.0 / (9 * b4));
    out["ric0_jet"] = rel({0.5 * rhs.grad.dot(bt.bup), -q.ric0_display()});
    out["ric_jet"] = rel({0.5 * bt.bup.dot(rhs.hess * bt.bup), -q.ric_display()});
    return out;
}

ResidualMap check_flag(const PointData& p) {
    Common q(p);
    const BetaTensors& bt = p.bt;
    int n = q.n;
    double b2 = q.b2, b4 = q.b4, c = q.c, d = q.d, be = q.be, s0 = q.s0, t = q.t, al2 = q.al2;
    const Blocks<double>& B = q.B;
    ResidualMap out;

    Matrix I = Matrix::Identity(n, n);
    Vector y = p.y, yl = bt.a * y, bu = bt.bup, bl = bt.b;
    Vector su = bt.ainv * bt.si, sl = bt.si;
    Vector du = bt.ainv * p.sf.dd, dl = p.sf.dd;
    Vector sk_0 = as_vector(B.lower("sk|0")), si_0 = as_vector(B.upper("si|0"));
    Matrix si_k = bt.ainv * bt.si_d, sk_i = bt.ainv * bt.si_d.transpose();
    auto sym = [](const Vector& u, const Vector& v) { return Matrix(u * v.transpose()); };

    double lead = (9 * b2 * c * c + 144 * t) * al2 - 2 * b4 * d * d * be * be -
                  6 * (b4 * q.d0 + 12 * c * s0 + 14 * b2 * d * s0) * be + 288 * s0 * s0 +
                  36 * b2 * B.scalar("s0|0");
    out["rik"] = worst(n, n,
                       {{9 * b4, p.ac.Rik},
                        {lead, I},
                        {-(9 * b2 * c * c + 144 * t), sym(y, yl)},
                        {2 * b2 * (b2 * d * d * be + 3 * b2 * q.d0 + 6 * d * s0), sym(y, bl) + sym(bu, yl)},
                        {-2 * b4 * d * d * al2, sym(bu, bl)},
                        {-3 * b4 * al2, sym(bu, dl) + sym(du, bl)},
                        {-6 * al2 * (6 * c + 7 * b2 * d), sym(bu, sl) + sym(su, bl)},
                        {72 * ((c + b2 * d) * be - 4 * s0), sym(y, sl) + sym(su, yl)},
                        {288 * al2, sym(su, sl)},
                        {-36 * b2, sym(y, sk_0) + sym(si_0, yl)},
                        {18 * b2 * al2, si_k + sk_i}});

    Matrix bb = bl * bl.transpose();
    Matrix bs = bl * sl.transpose();
    out["rij"] = worst(n, n, {{b2, bt.r}, {-b2 * c, bt.a}, {-b2 * d, bb}, {3, bs + bs.transpose()}});
    out["sij"] = worst(n, n, {{b2, bt.s}, {-1, bs}, {1, Matrix(bs.transpose())}});
    out["r00"] = rel({b2 * B.scalar("r00"), -b2 * c * al2, -b2 * d * be * be, 6 * be * s0});
    out["r00_from_rij"] = rel({b2 * y.dot(bt.r * y), -b2 * c * y.dot(bt.a * y), -b2 * d * be * be,
                               3 * 2 * be * sl.dot(y)});

    if (std::max(out["rij"], out["sij"]) > 1e-6) return out;

    Matrix sik_0 = as_matrix(B.matrix("sik|0"), n), si0_k = as_matrix(B.matrix("si0|k"), n);
    Vector s0_k = as_vector(B.lower("s0|k"));
    double k2 = (2 * c + b2 * d) * be - 2 * s0;
    out["sik|0"] = worst(n, n,
                         {{b4, sik_0},
                          {-b2 * c, sym(y, sl) - sym(su, yl)},
                          {k2, sym(bu, sl) - sym(su, bl)},
                          {-b2, sym(bu, sk_0) - sym(si_0, bl)}});
    {
        Matrix lhs = b4 * si0_k;
        Matrix t1 = b2 * c * (s0 * I - su * yl.transpose());
        Matrix t2 = -((2 * c + b2 * d) * bl - 2 * sl) * (bu * s0 - be * su).transpose();
        Matrix t3 = b2 * (bu * s0_k.transpose() - be * si_k);
        // t2 is built as (k, i); transpose to (i, k)
        out["si0|k"] = worst(n, n, {{1, lhs}, {-1, t1}, {-1, Matrix(t2.transpose())}, {-1, t3}});
    }
    {
        Vector si0_0 = as_vector(B.upper("si0|0"));
        Vector t1 = b2 * c * (y * s0 - al2 * su);
        Vector t2 = -k2 * (bu * s0 - be * su);
        Vector t3 = b2 * (bu * B.scalar("s0|0") - be * si_0);
        out["si0|0"] = worst(n, 1, {{b4, col(si0_0)}, {-1, col(t1)}, {-1, col(t2)}, {-1, col(t3)}});
    }
    double w = 6 * c + 5 * b2 * d;
    out["dk_skew"] =
        worst(n, n, {{b4, sym(bu, dl) - sym(du, bl)}, {-2 * w, sym(bu, sl) - sym(su, bl)}, {-6 * b2, si_k - sk_i}});
    {
        Vector t1 = (b4 * q.d0 - 2 * w * s0) * bl;
        out["s0|k"] = worst(n, 1,
                            {{6 * b2, col(s0_k)},
                             {1, col(t1)},
                             {-b4 * be, col(dl)},
                             {2 * w * be, col(sl)},
                             {-6 * b2, col(sk_0)}});
    }
    return out;
}

ResidualMap check_conformal(const PointData& p, double mu) {
    if (mu > 0) throw InputError("conformal classification needs mu <= 0");
    const BetaTensors& bt = p.bt;
    int n = bt.n;
    ResidualMap out;
    double c = p.sf.c, d = p.sf.d;
    out["d"] = std::abs(d) / std::max(1.0, std::abs(c));
    out["sij"] = bt.s.cwiseAbs().maxCoeff() / std::max(1.0, bt.bij.cwiseAbs().maxCoeff());
    out["c2_mu_b2"] = rel({c * c, mu * bt.b2});
    double al2 = p.y.dot(bt.a * p.y);
    Vector yl = bt.a * p.y;
    out["sectional"] = worst(n, n,
                             {{1, p.ac.Rik},
                              {-mu * al2, Matrix::Identity(n, n)},
                              {mu, Matrix(p.y * yl.transpose())}});
    out["ricci"] = rel({p.ac.ric00, -(n - 1) * mu * al2});
    return out;
}

ResidualMap check_deformation_remark(const PointData& p, double hypothesis_tol) {
    ResidualMap e = check_einstein(p);
    for (const char* k : {"ric00", "r00", "si0"})
        if (!(e[k] <= hypothesis_tol))
            throw HypothesisNotMet(std::string("ricci-flat condition '") + k + "' fails: residual " +
                                   std::to_string(e[k]));
    const ChartFrame& f = p.frame;
    int n = f.n;
    Jet2 b2 = b2_jet(f);
    Jet2 b4 = b2 * b2, bn = sqrt(b2);
    std::vector<Jet2> aj, bj;
    for (const Jet2& a : f.a_jets) aj.push_back(a * b4);
    for (const Jet2& b : f.b_jets) bj.push_back(b * bn);
    ChartFrame g = frame_from_jets(f.x, std::move(aj), std::move(bj));
    CovariantB cb = covariant_b(g);

    Jet2 c(n, p.sf.c), d(n, p.sf.d);
    c.grad = p.sf.dc;
    d.grad = p.sf.dd;
    Jet2 tau = (3.0 * c + 2.0 * (b2 * d)) / (b2 * bn);
    double tv = tau.value;

    ResidualMap out;
    Matrix bb = g.b * g.b.transpose();
    out["bij"] = worst(n, n, {{1, cb.bij}, {-tv, g.a}, {tv, bb}});
    out["tau_i"] = worst(n, 1, {{1, col(tau.grad)}, {2.0 / 3.0 * tv * tv, col(g.b)}});
    AlphaCurvature ac = alpha_curvature(g, p.y);
    double al2 = p.y.dot(g.a * p.y), be = g.b.dot(p.y);
    out["ric00"] = rel({ac.ric00, tv * tv / 3 * (3 * n - 5) * al2, -tv * tv / 3 * 2 * (n - 2) * be * be});
    return out;
}

double fit_einstein_constant(int n, std::span<const double> fric00, std::span<const double> f2) {
    if (fric00.size() != f2.size() || fric00.empty()) throw InputError("K fit needs matching, non-empty samples");
    double num = 0, den = 0;
    for (std::size_t i = 0; i < f2.size(); ++i) {
        double u = (n - 1) * f2[i];
        num += u * fric00[i];
        den += u * u;
    }
    if (den == 0) throw InputError("K fit is undetermined");
    return num / den;
}

}
