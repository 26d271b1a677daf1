#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "finslerlab/campaign.hpp"
#include "finslerlab/error.hpp"
#include "finslerlab/metric_file.hpp"
#include "finslerlab/metrics.hpp"

#include "support.hpp"

using namespace finslerlab;

namespace {

std::string metric_path(const std::string& name) { return std::string(FINSLERLAB_METRICS) + "/" + name; }

int run_cli(const std::string& args) {
    std::string cmd = std::string(FINSLERLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

CampaignOptions options(int samples, std::uint64_t seed, int threads = 1) {
    CampaignOptions o;
    o.samples = samples;
    o.seed = seed;
    o.threads = threads;
    return o;
}

std::string without_clock(Report r) {
    r.wall_clock = 0;
    return render(r);
}

}

TEST(Rng, IsDeterministicPerStream) {
    Rng a(5), b(5), c = Rng::stream(5, 1), d = Rng::stream(5, 1);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        std::uint64_t va = a.next();
        EXPECT_EQ(va, b.next());
        std::uint64_t vc = c.next();
        EXPECT_EQ(vc, d.next());
        differs = differs || va != vc;
    }
    EXPECT_TRUE(differs);
    Rng u(9);
    for (int i = 0; i < 1000; ++i) {
        double v = u.uniform();
        EXPECT_GE(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
    EXPECT_NEAR(u.unit_vector(4).norm(), 1.0, 1e-15);
}

TEST(Fuzz, ConfigIsValidated) {
    FuzzConfig c;
    EXPECT_NO_THROW(c.validate());
    c.eps = 0.31;
    EXPECT_THROW(c.validate(), InputError);
    c = {};
    c.degree = 4;
    EXPECT_THROW(c.validate(), InputError);
    c = {};
    c.box = 0.6;
    EXPECT_THROW(c.validate(), InputError);
    c = {};
    c.n = 1;
    EXPECT_THROW(c.validate(), InputError);
}

TEST(Fuzz, ZeroPerturbationGivesTheEuclideanMetric) {
    FuzzConfig c;
    c.eps = 0;
    MetricSpec s = random_spec(c);
    ChartFrame f = assemble_chart(s, fltest::vec({0.2, -0.1, 0.3}));
    EXPECT_LT((f.a - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Fuzz, SpecsAreReproducible) {
    FuzzConfig c;
    c.seed = 77;
    EXPECT_EQ(metric_json(random_spec(c)).dump(), metric_json(random_spec(c)).dump());
    MetricSource a = fuzz_source(c, 25), b = fuzz_source(c, 25);
    EXPECT_EQ(a.specs.size(), 3u);
    EXPECT_EQ(a.digest, b.digest);
    c.seed = 78;
    EXPECT_NE(fuzz_source(c, 25).digest, a.digest);
}

TEST(Metrics, MuExampleConstraint) {
    EXPECT_THROW(mu_example(3, -1, 1.1, fltest::vec({1, 0, 0})), ConstraintViolation);
    EXPECT_THROW(mu_example(3, 1, 1, fltest::vec({1, 0, 0})), InputError);
    EXPECT_NO_THROW(mu_example(4, -4, 1, fltest::vec({0, 0.5, 0, 0})));
}

TEST(Metrics, BerwaldNormMatchesItsClosedExpression) {
    MetricSpec s = berwald_metric(3);
    Rng rng(3);
    for (const auto& smp : draw_samples(s, 10, rng).samples) {
        const Vector &x = smp.x, &y = smp.y;
        double q = 1 - x.squaredNorm(), xy = x.dot(y);
        double Q = q * y.squaredNorm() + xy * xy;
        double lit = std::pow(std::sqrt(Q) + xy, 2) / (q * q * std::sqrt(Q));
        EXPECT_NEAR(finsler_norm(s.family, assemble_chart(s, x), y), lit, 1e-13 * lit);
        EXPECT_LE(x.norm(), 0.9);
    }
}

TEST(Metrics, SamplingIsExhaustedOnEmptyCones) {
    // F vanishes wherever b alpha + beta <= 0, most directions are rejected when b is tiny
    MetricSpec s = flat_metric(3, fltest::vec({1e-7, 0, 0}));
    Rng rng(1);
    EXPECT_THROW(draw_samples(s, 10, rng), SamplingExhausted);
}

TEST(MetricFile, RoundTripsAndReportsErrors) {
    MetricSpec s = fltest::mu_spec();
    MetricSpec back = parse_metric(metric_json(s).dump());
    EXPECT_EQ(metric_json(back).dump(), metric_json(s).dump());
    EXPECT_THROW(parse_metric("{"), InputError);
    EXPECT_THROW(parse_metric(R"({"dimension": 2, "a": [["1", "0"], ["0", "1"]], "b": ["1"]})"), InputError);
    EXPECT_THROW(parse_metric(R"({"dimension": 2, "a": [["1", "0"], ["0", "1 +"]], "b": ["1", "0"]})"),
                 InputError);
    try {
        load_metric(metric_path("malformed.json"));
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("offset 7"), std::string::npos) << e.what();
    }
    EXPECT_THROW(load_metric(metric_path("absent.json")), InputError);
    MetricSpec mu = load_metric(metric_path("mu-example.json"));
    EXPECT_EQ(metric_json(mu).dump(), metric_json(s).dump());
    EXPECT_THROW(builtin_metric("nope", nlohmann::json::object()), InputError);
}

TEST(Campaign, TheoremNames) {
    EXPECT_EQ(theorem_from_name("einstein"), Theorem::einstein);
    EXPECT_EQ(theorem_from_name("flag"), Theorem::flag);
    EXPECT_EQ(theorem_from_name("conformal"), Theorem::conformal);
    EXPECT_THROW(theorem_from_name("other"), InputError);
    EXPECT_EQ(thread_count(3), 3);
    EXPECT_GE(thread_count(0), 1);
}

TEST(Campaign, VerifyAppendixPassesOnFuzzedMetrics) {
    FuzzConfig c;
    Report r = run_verify_appendix(fuzz_source(c, 20), options(20, 42));
    EXPECT_EQ(r.exit_code, 0) << render(r);
    EXPECT_EQ(r.body["status"], "pass");
    EXPECT_EQ(r.body["samples"]["count"], 20);
}

TEST(Campaign, FlippedConventionFailsTheIdentities) {
    CampaignOptions o = options(10, 42);
    EXPECT_EQ(run_fuzz_identities(3, o).exit_code, 0);
    o.convention = Convention::flipped;
    EXPECT_EQ(run_fuzz_identities(3, o).exit_code, 1);
}

TEST(Campaign, ReportsDoNotDependOnThreads) {
    FuzzConfig c;
    MetricSource src = fuzz_source(c, 12);
    EXPECT_EQ(without_clock(run_verify_appendix(src, options(12, 42, 1))),
              without_clock(run_verify_appendix(src, options(12, 42, 3))));
    MetricSource mu = file_source(metric_path("mu-example.json"));
    EXPECT_EQ(without_clock(run_check(mu, Theorem::conformal, -1.0, options(8, 3, 1))),
              without_clock(run_check(mu, Theorem::conformal, -1.0, options(8, 3, 2))));
}

TEST(Campaign, CorruptedTermIsAttributed) {
    nlohmann::json j = nlohmann::json::parse(std::ifstream(FINSLERLAB_TABLES));
    auto& term = j["tables"]["riemann"][40];
    std::string block = term["block"];
    term["den"]["c"] = term["den"]["c"].get<double>() * 1.01;
    CoefficientSet bad = CoefficientSet::from_json(j.dump(), "corrupted");
    CampaignOptions o = options(30, 42);
    o.tables = &bad;
    FuzzConfig c;
    Report r = run_verify_appendix(fuzz_source(c, 30), o);
    EXPECT_EQ(r.exit_code, 1);
    const auto& top = r.body["attribution"]["riemann"][0];
    EXPECT_EQ(top["block"], block);
}

TEST(Campaign, ConditionsWithoutHypotheses) {
    MetricSource mu = file_source(metric_path("mu-example.json"));
    EXPECT_THROW(run_check(mu, Theorem::conformal, std::nullopt, options(4, 1)), InputError);
    MetricSource riem = file_source(metric_path("riemannian.json"));
    EXPECT_THROW(run_verify_appendix(riem, options(4, 1)), InputError);
    Report p = run_check(file_source(metric_path("perturbed.json")), Theorem::einstein, std::nullopt, options(10, 1));
    EXPECT_EQ(p.exit_code, 1);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run_cli("--help"), 0);
    EXPECT_EQ(run_cli("eval " + metric_path("mu-example.json") + " --x 0,0,0 --y 0,1,0"), 0);
    EXPECT_EQ(run_cli("check " + metric_path("perturbed.json") + " --theorem einstein --samples 10"), 1);
    EXPECT_EQ(run_cli("eval " + metric_path("malformed.json") + " --x 0,0,0 --y 0,1,0"), 2);
    EXPECT_EQ(run_cli("verify-appendix " + metric_path("riemannian.json")), 2);
    EXPECT_EQ(run_cli("bogus"), 2);
    EXPECT_EQ(run_cli("eval " + metric_path("mu-example.json") + " --x 0,0,0 --y -1,0,0"), 3);
    EXPECT_EQ(run_cli("eval " + metric_path("mu-example.json") + " --x 0,0 --y 0,1,0"), 2);
}

TEST(Cli, WritesReportsToFiles) {
    std::string out = testing::TempDir() + "finslerlab_report.json";
    ASSERT_EQ(run_cli("verify-appendix --fuzz n=3 --samples 10 --seed 5 -o " + out), 0);
    nlohmann::json j = nlohmann::json::parse(std::ifstream(out));
    EXPECT_EQ(j["schema_version"], report_schema_version);
    EXPECT_EQ(j["command"], "verify-appendix");
    EXPECT_TRUE(j.contains("wall_clock_seconds"));
    std::remove(out.c_str());
}
