#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "finslerlab/closedform.hpp"
#include "finslerlab/error.hpp"
#include "finslerlab/finsler.hpp"

#include "support.hpp"

using namespace finslerlab;

namespace {

struct Point {
    ChartFrame f;
    BetaTensors bt;
    AlphaCurvature ac;
    Vector y;
};

std::vector<Point> points(std::uint64_t seed, int n, int count, Convention conv = Convention::standard) {
    MetricSpec s = fltest::sample_spec(seed, n);
    Rng rng(seed);
    std::vector<Point> out;
    for (const auto& smp : draw_samples(s, count, rng).samples) {
        ChartFrame f = assemble_chart(s, smp.x);
        BetaTensors bt = beta_tensors(f);
        AlphaCurvature ac = alpha_curvature(f, smp.y, conv);
        out.push_back({f, bt, ac, smp.y});
    }
    return out;
}

std::string table_text() {
    std::ifstream in(FINSLERLAB_TABLES, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

}

TEST(Coefficients, BuiltinTablesAreIntact) {
    const CoefficientSet& set = CoefficientSet::builtin();
    EXPECT_TRUE(set.checksum_ok()) << set.declared_checksum() << " vs " << set.computed_checksum();
    EXPECT_EQ(set.table("riemann").size(), 214u);
    EXPECT_EQ(set.table("ricci").size(), 35u);
    EXPECT_EQ(set.table("rat").size(), 37u);
    EXPECT_EQ(set.table("irrat").size(), 37u);
    EXPECT_THROW(set.table("nope"), InputError);
    EXPECT_THROW(set.entry("riemann", "nope"), InputError);
    CoefficientSet file = CoefficientSet::from_file(FINSLERLAB_TABLES);
    EXPECT_EQ(file.computed_checksum(), set.computed_checksum());
}

TEST(Coefficients, MalformedFilesAreInputErrors) {
    EXPECT_THROW(CoefficientSet::from_json("{", "t"), InputError);
    EXPECT_THROW(CoefficientSet::from_json(R"({"format": "other", "version": 1})", "t"), InputError);
    EXPECT_THROW(CoefficientSet::from_file("/nonexistent/table.json"), InputError);
    std::string text = table_text();
    auto pos = text.find("\"c\": 9");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 6, "\"c\": 8");
    CoefficientSet edited = CoefficientSet::from_json(text, "edited");
    EXPECT_FALSE(edited.checksum_ok());
}

TEST(ClosedForm, ContextGuards) {
    MetricSpec s = fltest::mu_spec();
    ChartFrame f = assemble_chart(s, fltest::vec({0, 0, 0}));
    BetaTensors bt = beta_tensors(f);
    EXPECT_THROW(make_context(bt, fltest::vec({1, 0, 0})), GuardViolation);
    EXPECT_THROW(make_context(bt, fltest::vec({-1, 0, 0})), GuardViolation);
    EXPECT_THROW(make_context(bt, fltest::vec({0, 0, 0})), ZeroDirection);
    CoefficientContext c = make_context(bt, fltest::vec({0.6, 0.8, 0}));
    EXPECT_NEAR(c.alpha, 1.0, 1e-15);
    EXPECT_NEAR(c.beta, 0.6, 1e-15);
    EXPECT_NEAR(c.b, 1.0, 1e-15);
}

TEST(ClosedForm, NeumaierSum) {
    EXPECT_EQ(neumaier_sum({1e16, 1.0, -1e16}), 1.0);
    EXPECT_EQ(neumaier_sum({}), 0.0);
    EXPECT_DOUBLE_EQ(neumaier_sum({0.1, 0.2, 0.3}), 0.6);
}

TEST(ClosedForm, RiemannAndRicciMatchTheDirectPipeline) {
    for (int n : {3, 4}) {
        for (const Point& p : points(30 + n, n, 5)) {
            CurvatureBundle cb = berwald(Family::singular_square, p.f, p.y, true);
            ClosedRiemann cr = closed_riemann(CoefficientSet::builtin(), p.bt, p.ac, p.y);
            ClosedRicci cc = closed_ricci(CoefficientSet::builtin(), p.bt, p.ac, p.y);
            double F2 = cb.F * cb.F;
            double scale = std::max(cb.FR.cwiseAbs().maxCoeff(), F2);
            EXPECT_LT((cr.FR - cb.FR).cwiseAbs().maxCoeff() / scale, 1e-8);
            EXPECT_LT(std::abs(cc.FRic00 - cb.FRic00) / std::max(std::abs(cb.FRic00), F2), 1e-8);
            double tr = closed_ricci_from_trace(CoefficientSet::builtin(), p.bt, p.ac, p.y);
            EXPECT_LT(std::abs(tr - cc.FRic00) / std::max(std::abs(cc.FRic00), F2), 1e-8);
            EXPECT_EQ(cr.terms.size(), 214u);
            EXPECT_EQ(cc.terms.size(), 35u);
            EXPECT_LT((cr.alpha - p.ac.Rik).cwiseAbs().maxCoeff(), 1e-15 * std::max(1.0, p.ac.Rik.norm()));
        }
    }
}

TEST(ClosedForm, FlippedConventionIsDetected) {
    double worst = 0;
    for (const Point& p : points(41, 3, 4, Convention::flipped)) {
        CurvatureBundle cb = berwald(Family::singular_square, p.f, p.y, false);
        ClosedRiemann cr = closed_riemann(CoefficientSet::builtin(), p.bt, p.ac, p.y);
        double scale = std::max(cb.FR.cwiseAbs().maxCoeff(), cb.F * cb.F);
        worst = std::max(worst, (cr.FR - cb.FR).cwiseAbs().maxCoeff() / scale);
    }
    EXPECT_GT(worst, 1e-3);
}

TEST(ClosedForm, RicciFromRatAndIrrat) {
    for (const Point& p : points(43, 3, 4)) {
        CoefficientContext c = make_context(p.bt, p.y);
        ClosedRicci cc = closed_ricci(CoefficientSet::builtin(), p.bt, p.ac, p.y);
        RatIrrat ri = rat_irrat(CoefficientSet::builtin(), p.bt, p.ac, p.y, 0.0);
        double P = c.b * c.alpha + c.beta, M = c.b * c.alpha - c.beta;
        double D = 9 * std::pow(c.b, 3) * c.alpha * c.alpha * P * P * std::pow(M, 4);
        // Ric_00 = (b Rat + alpha Irrat) / D when K = 0
        double F2 = std::pow(P, 4) / (c.alpha * c.alpha);
        EXPECT_LT(std::abs((c.b * ri.rat + c.alpha * ri.irrat) / D - cc.FRic00) / std::max(std::abs(cc.FRic00), F2),
                  1e-8);
    }
}

TEST(ClosedForm, DivisibilityIdentity) {
    const CoefficientSet& set = CoefficientSet::builtin();
    double quotient = 0, tabulated = 0;
    for (int n : {3, 4})
        for (const Point& p : points(50 + n, n, 5)) {
            quotient = std::max(quotient, poly12_residual(set, p.bt, p.ac, p.y, 0.0, Poly12Form::divisibility));
            tabulated = std::max(tabulated, poly12_residual(set, p.bt, p.ac, p.y, 0.0, Poly12Form::literal));
        }
    EXPECT_LT(quotient, 1e-7);
    // the tabulated Poly1 omits blocks, so the literal identity does not close
    EXPECT_GT(tabulated, 1e-7);
}
