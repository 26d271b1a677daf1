#include "finslerlab/beta.hpp"

#include <algorithm>
#include <cmath>

namespace finslerlab {

BetaTensors beta_tensors(const ChartFrame& f, const CovariantB& cb) {
    int n = f.n;
    BetaTensors bt;
    bt.n = n;
    bt.a = f.a;
    bt.ainv = f.ainv;
    bt.b = f.b;
    bt.bup = f.bup;
    bt.b2 = f.b2;
    bt.bij = cb.bij;
    bt.bijk = cb.bijk;
    bt.r = 0.5 * (cb.bij + cb.bij.transpose());
    bt.s = 0.5 * (cb.bij - cb.bij.transpose());
    bt.rd = T3(n);
    bt.sd = T3(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                bt.rd(i, j, k) = 0.5 * (cb.bijk(i, j, k) + cb.bijk(j, i, k));
                bt.sd(i, j, k) = 0.5 * (cb.bijk(i, j, k) - cb.bijk(j, i, k));
            }
    bt.p = bt.r * f.ainv * bt.r;
    bt.q = bt.r * f.ainv * bt.s;
    bt.t = bt.s * f.ainv * bt.s;
    bt.ri = bt.r.transpose() * f.bup;
    bt.si = bt.s.transpose() * f.bup;
    bt.rb = bt.ri.dot(f.bup);

    // b^m_{|k} = a^mn b_{n|k}
    bt.bup_d = f.ainv * cb.bij;
    bt.ri_d = Matrix::Zero(n, n);
    bt.si_d = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            double r = 0, s = 0;
            for (int m = 0; m < n; ++m) {
                r += bt.bup_d(m, k) * bt.r(m, i) + f.bup[m] * bt.rd(m, i, k);
                s += bt.bup_d(m, k) * bt.s(m, i) + f.bup[m] * bt.sd(m, i, k);
            }
            bt.ri_d(i, k) = r;
            bt.si_d(i, k) = s;
        }
    bt.r_d = bt.ri_d.transpose() * f.bup + bt.bup_d.transpose() * bt.ri;

    bt.pi = bt.p.transpose() * f.bup;
    bt.qi = bt.q.transpose() * f.bup;
    bt.qsi = bt.q * f.bup;
    bt.ti = bt.t.transpose() * f.bup;
    bt.p_s = bt.pi.dot(f.bup);
    bt.q_s = bt.qi.dot(f.bup);
    bt.t_s = bt.ti.dot(f.bup);
    bt.rii = (f.ainv * bt.r).trace();
    bt.tii = (f.ainv * bt.t).trace();
    bt.pii = (f.ainv * bt.p).trace();
    return bt;
}

namespace {

// max over components of |sum_t sign_t * v_t| / max(1, max |v_t|)
double vec_residual(std::initializer_list<std::pair<double, Vector>> terms) {
    int n = static_cast<int>(terms.begin()->second.size());
    double worst = 0;
    for (int i = 0; i < n; ++i) {
        Residual r;
        for (const auto& [sign, v] : terms) r.add(sign * v[i]);
        worst = std::max(worst, r.value());
    }
    return worst;
}

Vector flat(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

}

std::map<std::string, double> priori_residuals(const BetaTensors& bt, const AlphaCurvature& ac, const Vector& y) {
    int n = bt.n;
    const Matrix& ai = bt.ainv;
    const Vector& bu = bt.bup;
    std::map<std::string, double> out;
    Blocks<double> B = make_blocks(bt, y);
    auto S = [&](std::string_view nm) { return B.scalar(nm); };
    auto L = [&](std::string_view nm) {
        const auto& v = B.lower(nm);
        return Vector(Eigen::Map<const Vector>(v.data(), n));
    };
    auto U = [&](std::string_view nm) {
        const auto& v = B.upper(nm);
        return Vector(Eigen::Map<const Vector>(v.data(), n));
    };
    auto M = [&](std::string_view nm) {
        const auto& v = B.matrix(nm);
        Matrix m(n, n);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) m(i, k) = v[i * n + k];
        return m;
    };
    auto sc = [](std::initializer_list<double> terms) {
        Residual r;
        for (double t : terms) r.add(t);
        return r.value();
    };

    out["sym|k"] = vec_residual({{1, flat(bt.ri_d)}, {1, flat(bt.si_d)}, {-1, flat(bt.ri_d.transpose())},
                               {-1, flat(bt.si_d.transpose())}});
    out["s0|b"] = sc({S("s0|b"), S("p0"), S("q0"), -S("q*0"), S("t0"), S("r0|b"), -S("r|0")});

    {
        double worst = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    double bR = 0;
                    for (int m = 0; m < n; ++m) bR += bu[m] * ac.Rlow(k, m, i, j);
                    worst = std::max(worst, sc({bt.sd(i, j, k), bR, -bt.rd(i, k, j), bt.rd(j, k, i)}));
                }
        out["sij|k"] = worst;
    }

    Matrix R0kb = ac.raised(y, bu), Rbk0 = ac.raised(bu, y), Rbkb = ac.raised(bu, bu);
    // r_{kj|m} y^j a^mi at (i,k)
    Matrix rk0_up(n, n), rik_0(n, n), rik_b(n, n), r0_k_up(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
            for (int m = 0; m < n; ++m)
                for (int j = 0; j < n; ++j) {
                    s1 += bt.rd(k, j, m) * y[j] * ai(m, i);
                    s2 += ai(i, m) * bt.rd(m, k, j) * y[j];
                    s3 += ai(i, m) * bt.rd(m, k, j) * bu[j];
                    s4 += ai(i, m) * bt.rd(m, j, k) * y[j];
                }
            rk0_up(i, k) = s1;
            rik_0(i, k) = s2;
            rik_b(i, k) = s3;
            r0_k_up(i, k) = s4;
        }
    out["sik|0"] = vec_residual({{1, flat(M("sik|0"))}, {-1, flat(R0kb)}, {1, flat(Rbk0)}, {1, flat(rk0_up)},
                               {-1, flat(r0_k_up)}});
    out["si0|k"] = vec_residual({{1, flat(M("si0|k"))}, {-1, flat(R0kb)}, {-1, flat(rik_0)}, {1, flat(rk0_up)}});

    Vector r00_up = ai * L("r00|k");
    Vector ri0_0 = ai * L("rk0|0");
    out["si0|0"] = vec_residual({{1, U("si0|0")}, {1, ac.R_b(bu)}, {-1, ri0_0}, {1, r00_up}});

    {
        Vector s0b(n), qi0 = ai * bt.q * y, q0i = ai * (bt.q.transpose() * y);
        Vector ri_0 = U("ri|0"), r0_up = ai * L("r0|k");
        for (int i = 0; i < n; ++i) {
            double s = 0;
            for (int m = 0; m < n; ++m)
                for (int j = 0; j < n; ++j)
                    for (int k = 0; k < n; ++k) s += ai(i, m) * bt.sd(m, j, k) * y[j] * bu[k];
            s0b[i] = s;
        }
        out["si0|b"] = vec_residual({{1, s0b}, {1, qi0}, {-1, q0i}, {-1, ri_0}, {1, r0_up}});
    }

    {
        Matrix si_k = ai * bt.si_d, pik = ai * bt.p, tik = ai * bt.t;
        Matrix rk_up = (bt.ri_d * ai).transpose(); // r_{k|m} a^mi at (i,k)
        out["si|k"] = vec_residual({{1, flat(si_k)}, {1, flat(Rbkb)}, {1, flat(pik)}, {1, flat(tik)},
                                   {1, flat(rik_b)}, {-1, flat(rk_up)}});
    }

    Vector Rb0kb(n);
    for (int k = 0; k < n; ++k) {
        double s = 0;
        for (int p = 0; p < n; ++p)
            for (int m = 0; m < n; ++m)
                for (int q = 0; q < n; ++q) s += ac.Rlow(p, m, k, q) * bu[p] * y[m] * bu[q];
        Rb0kb[k] = s;
    }
    out["sk|0"] = vec_residual({{1, L("sk|0")}, {1, Rb0kb}, {1, L("pk0")}, {1, L("tk0")}, {1, L("rk0|b")},
                               {-1, L("r0|k")}});
    out["s0|k"] = vec_residual({{1, L("s0|k")}, {1, Rb0kb}, {1, L("pk0")}, {1, L("tk0")}, {1, L("rk0|b")},
                                {-1, L("rk|0")}});
    double Rbb = ac.R(y, bu, bu, y);
    out["s0|0"] = sc({S("s0|0"), Rbb, S("p00"), S("t00"), S("r00|b"), -S("r0|0")});
    double ric0 = y.dot(ac.ric * bu), ric = bu.dot(ac.ric * bu);
    out["si0|i"] = sc({S("si0|i"), -ric0, -S("rii|0"), S("ri0|i")});
    out["si|i"] = sc({S("si|i"), ric, S("pii"), S("tii"), S("rii|b"), -S("ri|i")});
    return out;
}

}
