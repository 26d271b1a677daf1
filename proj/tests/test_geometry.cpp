#include <gtest/gtest.h>

#include "finslerlab/beta.hpp"
#include "finslerlab/error.hpp"
#include "finslerlab/finsler.hpp"
#include "finslerlab/taylor.hpp"

#include "support.hpp"

using namespace finslerlab;

namespace {

constexpr double h = 1e-3;

// d_k a_ij by differences of the expressions
double da_fd(const MetricSpec& s, const Vector& x, int i, int j, int k) {
    fltest::Function f = [&](const Vector& p) {
        return eval(s.a_at(i, j), std::span<const double>(p.data(), s.n), s.params);
    };
    return fltest::partial(f, x, {k}, h);
}

T3 gamma_fd(const MetricSpec& s, const Vector& x, const Matrix& ainv) {
    int n = s.n;
    T3 d(n), g(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) d(i, j, k) = da_fd(s, x, i, j, k);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double acc = 0;
                for (int l = 0; l < n; ++l) acc += 0.5 * ainv(i, l) * (d(l, k, j) + d(l, j, k) - d(j, k, l));
                g(i, j, k) = acc;
            }
    return g;
}

// curvilinear coordinates on Euclidean space: a = J^T J for the map (x1 + 0.3 x2^2, x2, x3 + 0.2 x1 x2)
MetricSpec curvilinear_flat() {
    std::vector<std::vector<std::string>> J = {
        {"1", "0.6*x2", "0"}, {"0", "1", "0"}, {"0.2*x2", "0.2*x1", "1"}};
    std::vector<std::vector<std::string>> a(3, std::vector<std::string>(3));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            std::string s;
            for (int m = 0; m < 3; ++m) s += (m ? " + " : "") + std::string("(") + J[m][i] + ")*(" + J[m][j] + ")";
            a[i][j] = s;
        }
    return make_spec(3, Family::riemannian_only, a, {"1", "0", "0"});
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}

TEST(Riemann, ChartMatchesFiniteDifferences) {
    MetricSpec s = fltest::sample_spec(3);
    Vector x = fltest::vec({0.2, -0.1, 0.3});
    ChartFrame f = assemble_chart(s, x);
    T3 g = gamma_fd(s, x, f.ainv);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            EXPECT_NEAR(f.a(i, j), eval(s.a_at(i, j), std::span<const double>(x.data(), 3), {}), 1e-15);
            for (int k = 0; k < 3; ++k) {
                EXPECT_NEAR(f.da(i, j, k), da_fd(s, x, i, j, k), 1e-9);
                EXPECT_NEAR(f.gamma(i, j, k), g(i, j, k), 1e-9);
            }
        }
    Matrix I = f.a * f.ainv;
    EXPECT_LT(max_abs(I - Matrix::Identity(3, 3)), 1e-14);
    EXPECT_NEAR(f.b2, f.b.dot(f.ainv * f.b), 1e-14);
}

TEST(Riemann, CurvatureFromDifferencedChristoffels) {
    MetricSpec s = fltest::sample_spec(8);
    Vector x = fltest::vec({-0.2, 0.1, 0.25}), y = fltest::vec({0.3, -0.5, 0.8});
    ChartFrame f = assemble_chart(s, x);
    AlphaCurvature ac = alpha_curvature(f, y);
    int n = 3;
    // d_l Gamma^i_jk by differencing the exact Christoffels of nearby charts
    T4 dg(n);
    for (int l = 0; l < n; ++l) {
        Vector xp = x, xm = x;
        xp[l] += h;
        xm[l] -= h;
        ChartFrame fp = assemble_chart(s, xp), fm = assemble_chart(s, xm);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) dg(i, j, k, l) = (fp.gamma(i, j, k) - fm.gamma(i, j, k)) / (2 * h);
    }
    double worst = 0, scale = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    double r = dg(i, j, l, k) - dg(i, j, k, l);
                    for (int m = 0; m < n; ++m)
                        r += f.gamma(i, k, m) * f.gamma(m, j, l) - f.gamma(i, l, m) * f.gamma(m, j, k);
                    worst = std::max(worst, std::abs(r - ac.R4(i, j, k, l)));
                    scale = std::max(scale, std::abs(r));
                }
    EXPECT_LT(worst, 1e-6 * std::max(scale, 1.0));
    // R^i_k = R^i_jkl y^j y^l, Ric_00 its trace
    Matrix Rik = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l) Rik(i, k) += ac.R4(i, j, k, l) * y[j] * y[l];
    EXPECT_LT(max_abs(Rik - ac.Rik), 1e-12);
    EXPECT_NEAR(ac.ric00, ac.Rik.trace(), 1e-12);
}

TEST(Riemann, FlatInCurvilinearCoordinates) {
    MetricSpec s = curvilinear_flat();
    ChartFrame f = assemble_chart(s, fltest::vec({0.3, -0.4, 0.2}));
    AlphaCurvature ac = alpha_curvature(f, fltest::vec({0.2, 0.9, -0.3}));
    double gmax = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) gmax = std::max(gmax, std::abs(f.gamma(i, j, k)));
    EXPECT_GT(gmax, 0.1);
    EXPECT_LT(max_abs(ac.Rik), 1e-13);
    EXPECT_LT(std::abs(ac.ric00), 1e-13);
}

TEST(Riemann, ConstantCurvatureOfTheMuMetric) {
    for (double mu : {-1.0, -0.4}) {
        MetricSpec s = mu_example(3, mu, std::sqrt(-mu), fltest::vec({1, 0, 0}));
        Vector x = fltest::vec({0.1, -0.2, 0.15}), y = fltest::vec({0.3, 0.7, -0.4});
        ChartFrame f = assemble_chart(s, x);
        AlphaCurvature ac = alpha_curvature(f, y);
        double al2 = y.dot(f.a * y);
        Matrix expect = mu * (al2 * Matrix::Identity(3, 3) - y * (f.a * y).transpose());
        EXPECT_LT(max_abs(ac.Rik - expect), 1e-13);
        AlphaCurvature flipped = alpha_curvature(f, y, Convention::flipped);
        EXPECT_LT(max_abs(flipped.Rik + expect), 1e-13);
    }
}

TEST(Riemann, SpecValidation) {
    EXPECT_THROW(make_spec(2, Family::singular_square, {{"1", "0"}, {"1"}}, {"1", "x3"}), InputError);
    EXPECT_THROW(make_spec(2, Family::singular_square, {{"1", "0"}, {"1"}}, {"1"}), InputError);
    EXPECT_THROW(make_spec(2, Family::singular_square, {{"1", "0"}, {"1"}}, {"k", "0"}), InputError);
    try {
        make_spec(2, Family::singular_square, {{"1", "0"}, {"1 +"}}, {"1", "0"});
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("a[2][2]"), std::string::npos) << e.what();
    }
    MetricSpec bad = make_spec(2, Family::singular_square, {{"1", "2"}, {"1"}}, {"1", "0"});
    EXPECT_THROW(assemble_chart(bad, fltest::vec({0, 0})), NotPositiveDefinite);
}

TEST(Beta, CovariantDerivativeMatchesFiniteDifferences) {
    MetricSpec s = fltest::sample_spec(4);
    Vector x = fltest::vec({0.1, 0.2, -0.3});
    ChartFrame f = assemble_chart(s, x);
    T3 g = gamma_fd(s, x, f.ainv);
    BetaTensors bt = beta_tensors(f);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            fltest::Function bi = [&](const Vector& p) {
                return eval(s.b[i], std::span<const double>(p.data(), 3), {});
            };
            double v = fltest::partial(bi, x, {j}, h);
            for (int k = 0; k < 3; ++k) v -= g(k, i, j) * f.b[k];
            EXPECT_NEAR(bt.bij(i, j), v, 1e-9);
            EXPECT_NEAR(bt.r(i, j), 0.5 * (bt.bij(i, j) + bt.bij(j, i)), 1e-15);
            EXPECT_NEAR(bt.s(i, j), 0.5 * (bt.bij(i, j) - bt.bij(j, i)), 1e-15);
        }
    EXPECT_LT(max_abs(bt.ri - bt.r * bt.bup), 1e-14);
    EXPECT_LT(max_abs(bt.si - bt.s.transpose() * bt.bup), 1e-14);
}

TEST(Beta, ClosedFormHasNoSkewPart) {
    // b = d(x1 + x1 x2 + 0.2 x3^2) on a curved metric
    MetricSpec base = fltest::sample_spec(6);
    std::vector<std::vector<std::string>> a(3);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) a[i].push_back(base.a_at(i, j).unparse());
    MetricSpec s = make_spec(3, Family::singular_square, a, {"1 + x2", "x1", "0.4*x3"});
    ChartFrame f = assemble_chart(s, fltest::vec({0.2, -0.3, 0.1}));
    BetaTensors bt = beta_tensors(f);
    EXPECT_LT(max_abs(bt.s), 1e-14);
    EXPECT_GT(max_abs(bt.r), 0.1);
}

TEST(Beta, GeneralIdentitiesHold) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        MetricSpec s = fltest::sample_spec(seed, seed == 3 ? 4 : 3);
        Rng rng(seed);
        SampleSet ss = draw_samples(s, 4, rng);
        for (const auto& smp : ss.samples) {
            ChartFrame f = assemble_chart(s, smp.x);
            auto res = priori_residuals(beta_tensors(f), alpha_curvature(f, smp.y), smp.y);
            EXPECT_EQ(res.size(), 13u);
            for (const auto& [k, v] : res) EXPECT_LT(v, 1e-9) << k;
        }
    }
}

TEST(Beta, FlippedConventionBreaksTheRicciIdentities) {
    MetricSpec s = fltest::sample_spec(2);
    Rng rng(5);
    SampleSet ss = draw_samples(s, 3, rng);
    double worst = 0;
    for (const auto& smp : ss.samples) {
        ChartFrame f = assemble_chart(s, smp.x);
        auto res = priori_residuals(beta_tensors(f), alpha_curvature(f, smp.y, Convention::flipped), smp.y);
        worst = std::max(worst, res.at("sij|k"));
    }
    EXPECT_GT(worst, 1e-3);
}

TEST(Finsler, NormAndFundamentalTensor) {
    MetricSpec s = fltest::sample_spec(9);
    Vector x = fltest::vec({0.1, 0.05, -0.2}), y = fltest::vec({0.6, 0.3, 0.5});
    ChartFrame f = assemble_chart(s, x);
    double al = std::sqrt(y.dot(f.a * y)), be = f.b.dot(y), b = std::sqrt(f.b2);
    EXPECT_NEAR(finsler_norm(Family::singular_square, f, y), std::pow(b * al + be, 2) / al, 1e-14);
    EXPECT_NEAR(finsler_norm(Family::square, f, y), std::pow(al + be, 2) / al, 1e-14);
    EXPECT_NEAR(finsler_norm(Family::riemannian_only, f, y), al, 1e-15);

    auto F2 = fltest::f2_function(s);
    Vector p(6);
    p << x, y;
    auto [g, ginv] = fundamental_tensor(Family::singular_square, f, y);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_LT(fltest::rel_err(g(i, j), 0.5 * fltest::partial(F2, p, {3 + i, 3 + j}, 1e-3), 1.0), 1e-8);
    EXPECT_LT(max_abs(g * ginv - Matrix::Identity(3, 3)), 1e-12);
}

TEST(Finsler, SprayMatchesFiniteDifferences) {
    MetricSpec s = fltest::sample_spec(12);
    Vector x = fltest::vec({-0.15, 0.2, 0.1}), y = fltest::vec({0.5, -0.2, 0.7});
    ChartFrame f = assemble_chart(s, x);
    CurvatureBundle cb = berwald(Family::singular_square, f, y, false);
    auto F2 = fltest::f2_function(s);
    Vector p(6);
    p << x, y;
    Vector rhs(3);
    for (int l = 0; l < 3; ++l) {
        double v = -fltest::partial(F2, p, {l}, 1e-3);
        for (int k = 0; k < 3; ++k) v += fltest::partial(F2, p, {k, 3 + l}, 1e-3) * y[k];
        rhs[l] = v;
    }
    Vector G = 0.25 * cb.ginv * rhs;
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(cb.G[i], G[i], 1e-8 * std::max(1.0, G.cwiseAbs().maxCoeff()));
}

TEST(Finsler, RiemannFromDifferencedSpray) {
    MetricSpec s = fltest::sample_spec(14);
    Vector x = fltest::vec({0.1, -0.1, 0.2}), y = fltest::vec({-0.4, 0.6, 0.5});
    ChartFrame f = assemble_chart(s, x);
    CurvatureBundle cb = berwald(Family::singular_square, f, y, true);
    auto spray = [&](const Vector& p, int i) {
        ChartFrame fp = assemble_chart(s, p.head(3));
        return berwald(Family::singular_square, fp, p.tail(3), false).G[i];
    };
    Vector p(6);
    p << x, y;
    Matrix R(3, 3);
    for (int i = 0; i < 3; ++i) {
        fltest::Function Gi = [&](const Vector& q) { return spray(q, i); };
        for (int k = 0; k < 3; ++k) {
            double v = 2 * fltest::partial(Gi, p, {k}, 1e-3);
            for (int j = 0; j < 3; ++j) {
                fltest::Function Gj = [&](const Vector& q) { return spray(q, j); };
                v -= y[j] * fltest::partial(Gi, p, {j, 3 + k}, 1e-3);
                v += 2 * cb.G[j] * fltest::partial(Gi, p, {3 + j, 3 + k}, 1e-3);
                v -= fltest::partial(Gi, p, {3 + j}, 1e-3) * fltest::partial(Gj, p, {3 + k}, 1e-3);
            }
            R(i, k) = v;
        }
    }
    EXPECT_LT(max_abs(cb.FR - R), 1e-6 * std::max(1.0, max_abs(R)));
    EXPECT_NEAR(cb.FRic00, cb.FR.trace(), 1e-10 * std::max(1.0, std::abs(cb.FRic00)));
    // FR^i_k y^k = 0
    EXPECT_LT((cb.FR * y).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, max_abs(cb.FR)));
}

TEST(Finsler, RiemannianFamilyReducesToAlpha) {
    MetricSpec s = fltest::sample_spec(15);
    Vector x = fltest::vec({0.2, 0.1, -0.1}), y = fltest::vec({0.1, 0.8, -0.3});
    ChartFrame f = assemble_chart(s, x);
    CurvatureBundle cb = berwald(Family::riemannian_only, f, y, true);
    AlphaCurvature ac = alpha_curvature(f, y);
    EXPECT_LT(max_abs(cb.FR - ac.Rik), 1e-9 * std::max(1.0, max_abs(ac.Rik)));
    EXPECT_NEAR(cb.FRic00, ac.ric00, 1e-9 * std::max(1.0, std::abs(ac.ric00)));
}

TEST(Finsler, GuardsRejectTheSingularCone) {
    MetricSpec s = fltest::mu_spec();
    ChartFrame f = assemble_chart(s, fltest::vec({0, 0, 0}));
    // b = (1, 0, 0) at the origin, so b alpha + beta vanishes along -e1
    GuardReport bad = check_guards(Family::singular_square, f, fltest::vec({-1, 0, 0}));
    EXPECT_FALSE(bad.ok);
    EXPECT_FALSE(bad.reason.empty());
    EXPECT_THROW(require_guards(Family::singular_square, f, fltest::vec({-1, 0, 0})), DomainError);
    EXPECT_THROW(require_guards(Family::singular_square, f, fltest::vec({0, 0, 0})), DomainError);
    GuardReport good = check_guards(Family::singular_square, f, fltest::vec({0, 1, 0}));
    EXPECT_TRUE(good.ok);
    EXPECT_NEAR(finsler_norm(Family::singular_square, f, fltest::vec({0, 1, 0})), 1.0, 1e-15);
    EXPECT_THROW(flat_metric(3, fltest::vec({0, 0, 0})), InputError);
    MetricSpec zero = flat_metric(3, fltest::vec({0, 0, 0}), Family::riemannian_only);
    ChartFrame fz = assemble_chart(zero, fltest::vec({0, 0, 0}));
    EXPECT_FALSE(check_guards(Family::singular_square, fz, fltest::vec({1, 0, 0})).ok);
    EXPECT_TRUE(check_guards(Family::riemannian_only, fz, fltest::vec({1, 0, 0})).ok);
}

TEST(Taylor, F2JetMatchesFiniteDifferences) {
    MetricSpec s = fltest::sample_spec(21);
    Vector x = fltest::vec({0.05, -0.1, 0.2}), y = fltest::vec({0.4, 0.5, -0.6});
    ChartFrame f = assemble_chart(s, x);
    TaylorJet jet = f2_jet(Family::singular_square, f, y, 4);
    const Layout& L = jet.layout();
    auto F2 = fltest::f2_function(s);
    Vector p(6);
    p << x, y;
    std::vector<double> scale(5, 1e-12), exact(L.size()), fd(L.size());
    for (int m = 0; m < L.size(); ++m) {
        std::vector<int> vars;
        double fact = 1;
        for (int v = 0; v < 6; ++v)
            for (int e = 1; e <= L.exponent(m, v); ++e) {
                vars.push_back(v);
                fact *= e;
            }
        exact[m] = jet.coef(m) * fact;
        fd[m] = fltest::partial(F2, p, vars, 1e-2);
        scale[L.tdeg(m)] = std::max(scale[L.tdeg(m)], std::abs(exact[m]));
    }
    for (int m = 0; m < L.size(); ++m)
        EXPECT_LT(fltest::rel_err(exact[m], fd[m], scale[L.tdeg(m)]), 1e-5) << "monomial " << m;
}

TEST(Taylor, DerivativeAndYJetAgree) {
    MetricSpec s = fltest::sample_spec(22);
    Vector x = fltest::vec({0.1, 0.1, 0.1}), y = fltest::vec({0.3, -0.2, 0.9});
    ChartFrame f = assemble_chart(s, x);
    TaylorJet jet = f2_jet(Family::singular_square, f, y, 3);
    Jet2 yj = jet.y_jet();
    auto [g, ginv] = fundamental_tensor(Family::singular_square, f, y);
    EXPECT_LT(max_abs(0.5 * yj.hess - g), 1e-12);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(jet.derivative(3 + k).value(), yj.grad[k], 1e-12);
    // Euler: y^k d_k F^2 = 2 F^2
    EXPECT_NEAR(yj.grad.dot(y), 2 * yj.value, 1e-12);
}
