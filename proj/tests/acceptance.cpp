#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "finslerlab/campaign.hpp"
#include "finslerlab/conditions.hpp"
#include "finslerlab/error.hpp"
#include "finslerlab/metric_file.hpp"
#include "finslerlab/taylor.hpp"

#include "support.hpp"

using namespace finslerlab;
using nlohmann::ordered_json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

const ordered_json* find_check(const Report& r, const std::string& name) {
    for (const auto& c : r.body["checks"])
        if (c["name"] == name) return &c;
    return nullptr;
}

double check_max(const Report& r, const std::string& name) {
    const ordered_json* c = find_check(r, name);
    if (!c || (*c)["max"].is_null()) return std::numeric_limits<double>::infinity();
    return (*c)["max"].get<double>();
}

double max_over_prefix(const Report& r, const std::string& prefix) {
    double m = 0;
    for (const auto& c : r.body["checks"])
        if (c["name"].get<std::string>().rfind(prefix, 0) == 0)
            m = std::max(m, c["max"].is_null() ? std::numeric_limits<double>::infinity() : c["max"].get<double>());
    return m;
}

std::string failing(const Report& r) {
    std::string s;
    for (const auto& c : r.body["checks"])
        if (!c["pass"].get<bool>()) s += " " + c["name"].get<std::string>();
    return s.empty() ? "" : " failing:" + s;
}

CampaignOptions options(int samples, std::uint64_t seed) {
    CampaignOptions o;
    o.samples = samples;
    o.seed = seed;
    return o;
}

MetricSource fuzz(int n, int samples, std::uint64_t seed) {
    FuzzConfig cfg;
    cfg.n = n;
    cfg.seed = seed;
    return fuzz_source(cfg, samples);
}

MetricSource single(const MetricSpec& s) { return {"builtin", "", {s}}; }

Outcome appendix_equivalence() {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o{true, ""};
    for (int n : {3, 4}) {
        Report r = run_verify_appendix(fuzz(n, 100, 42), options(100, 42));
        double R = check_max(r, "appendix.riemann"), Ric = check_max(r, "appendix.ricci");
        int count = r.body["samples"]["count"].get<int>();
        o.pass = o.pass && r.exit_code == 0 && R < 1e-8 && Ric < 1e-8 && count >= 100;
        o.detail += "n=" + std::to_string(n) + " samples " + std::to_string(count) + " riemann " + fmt(R) +
                    " ricci " + fmt(Ric) + "; ";
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.pass = o.pass && secs < 60;
    o.detail += "runtime " + fmt(secs) + " s";
    return o;
}

Outcome priori_identities() {
    Outcome o{true, ""};
    for (int n : {3, 4}) {
        Report r = run_fuzz_identities(n, options(100, 42));
        int names = 0;
        for (const auto& c : r.body["checks"])
            if (c["name"].get<std::string>().rfind("identity.", 0) == 0) ++names;
        double m = max_over_prefix(r, "identity.");
        o.pass = o.pass && names == 13 && m < 1e-9;
        o.detail += "n=" + std::to_string(n) + " identities " + std::to_string(names) + " max " + fmt(m) + "; ";
    }
    return o;
}

Outcome divisibility_identity() {
    Outcome o{true, ""};
    for (int n : {3, 4}) {
        CampaignOptions lit = options(100, 42);
        lit.poly12 = Poly12Form::literal;
        CampaignOptions div = options(100, 42);
        double mlit = check_max(run_fuzz_identities(n, lit), "poly12");
        double mdiv = check_max(run_fuzz_identities(n, div), "poly12");
        o.pass = o.pass && mlit < 1e-7;
        o.detail += "n=" + std::to_string(n) + " tabulated Poly1/Poly2 " + fmt(mlit) + ", quotient form " +
                    fmt(mdiv) + "; ";
    }
    return o;
}

Outcome mu_example_reproduction() {
    MetricSource src = single(fltest::mu_spec());
    CampaignOptions opt = options(60, 7);
    Report flag = run_check(src, Theorem::flag, std::nullopt, opt);
    Report ein = run_check(src, Theorem::einstein, std::nullopt, opt);
    double fc = check_max(flag, "flag.constancy");
    double th11 = std::max({check_max(ein, "einstein.ric00"), check_max(ein, "einstein.r00"),
                            check_max(ein, "einstein.si0")});
    double th12 = std::max({check_max(flag, "flag.rik"), check_max(flag, "flag.rij"), check_max(flag, "flag.sij")});
    int count = flag.body["samples"]["count"].get<int>();

    Rng rng = Rng::stream(7, 1000);
    SampleSet ss = draw_samples(src.specs[0], 60, rng);
    double dmax = 0, thmax = 0, cmax = 0;
    for (const auto& s : ss.samples) {
        ChartFrame f = assemble_chart(src.specs[0], s.x);
        BetaTensors bt = beta_tensors(f);
        Decomposition dec = extract_decomposition(f, bt);
        dmax = std::max(dmax, std::abs(dec.d));
        thmax = std::max(thmax, dec.theta.cwiseAbs().maxCoeff());
        cmax = std::max(cmax, std::abs(dec.c * dec.c - bt.b2));
    }
    Outcome o;
    o.pass = count >= 50 && fc < 1e-7 && th11 < 1e-7 && th12 < 1e-7 && dmax < 1e-8 && thmax < 1e-8 && cmax < 1e-8;
    o.detail = "samples " + std::to_string(count) + " flag constancy " + fmt(fc) + " ricci-flat conditions " +
               fmt(th11) + " flag conditions " + fmt(th12) + " |d| " + fmt(dmax) + " |theta| " + fmt(thmax) +
               " |c^2+mu b^2| " + fmt(cmax) + failing(flag) + failing(ein);
    return o;
}

Outcome berwald_flat() {
    MetricSpec spec = berwald_metric(3);
    Rng rng = Rng::stream(11, 1000);
    SampleSet ss = draw_samples(spec, 100, rng);
    double m = 0, rmax = 0;
    for (const auto& s : ss.samples) {
        ChartFrame f = assemble_chart(spec, s.x);
        CurvatureBundle cb = berwald(spec.family, f, s.y, false);
        m = std::max(m, flag_constancy_residual(cb, s.y, 0.0).tensor);
        rmax = std::max(rmax, s.x.norm());
    }
    return {m < 1e-7 && rmax <= 0.9,
            "samples " + std::to_string(ss.samples.size()) + " max |x| " + fmt(rmax) + " flag constancy " + fmt(m)};
}

Outcome einstein_constant() {
    Report r = run_check(single(fltest::mu_spec()), Theorem::einstein, std::nullopt, options(60, 7));
    double K = r.body["K"].get<double>();
    double c = check_max(r, "einstein.ricci_constancy");
    return {std::abs(K) < 1e-7, "fitted K " + fmt(K) + " ricci constancy " + fmt(c)};
}

Outcome deformation_remark() {
    Report r = run_check(single(fltest::mu_spec()), Theorem::einstein, std::nullopt, options(60, 7));
    double m = max_over_prefix(r, "remark.");
    int names = 0;
    for (const auto& c : r.body["checks"])
        if (c["name"].get<std::string>().rfind("remark.", 0) == 0) ++names;
    return {names == 3 && m < 1e-6, std::to_string(names) + " residuals, max " + fmt(m)};
}

std::string corrupted_table(std::string& block) {
    std::ifstream in(FINSLERLAB_TABLES, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    ordered_json j = ordered_json::parse(s.str());
    auto& entry = j["tables"]["riemann"][40];
    entry["den"]["c"] = entry["den"]["c"].get<double>() * 1.01;
    block = entry["block"].get<std::string>() + " (" + entry["name"].get<std::string>() + ")";
    return j.dump();
}

Outcome negative_controls() {
    CampaignOptions opt = options(60, 7);
    Report clean = run_check(single(fltest::mu_spec()), Theorem::einstein, std::nullopt, opt);
    Report pert = run_check(single(fltest::mu_spec(0.05)), Theorem::einstein, std::nullopt, opt);
    double base = 0, perturbed = std::numeric_limits<double>::infinity();
    for (const char* k : {"einstein.ric00", "einstein.r00", "einstein.si0"}) {
        base = std::max(base, check_max(clean, k));
        perturbed = std::min(perturbed, check_max(pert, k));
    }
    double factor = perturbed / std::max(base, 2.220446049250313e-16);

    std::string block;
    CoefficientSet bad = CoefficientSet::from_json(corrupted_table(block), "corrupted");
    CampaignOptions vopt = options(100, 42);
    vopt.tables = &bad;
    Report v = run_verify_appendix(fuzz(3, 100, 42), vopt);
    std::string top;
    if (v.body.contains("attribution") && v.body["attribution"].contains("riemann")) {
        const auto& a = v.body["attribution"]["riemann"][0];
        top = a["block"].get<std::string>() + " (" + a["name"].get<std::string>() + ")";
    }
    Outcome o;
    o.pass = pert.exit_code == 1 && factor >= 1e3 && v.exit_code == 1 && top == block;
    o.detail = "perturbation beta += 0.05 x2 dx3 raises the smallest ricci-flat condition by " + fmt(factor) +
               " (clean max " + fmt(base) + ", perturbed min " + fmt(perturbed) + "); corrupted " + block +
               " attributed to " + (top.empty() ? "nothing" : top);
    return o;
}

void worse(double& acc, double v) { acc = std::max(acc, std::isnan(v) ? 1.0 : v); }

// jets of every chart expression and of F^2 against finite differences
Outcome derivative_soundness() {
    std::vector<MetricSpec> specs = {fltest::sample_spec(3), fltest::sample_spec(5, 4), fltest::mu_spec(),
                                     berwald_metric(3)};
    double ex = 0, fx = 0;
    int checked = 0;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        const MetricSpec& spec = specs[k];
        int n = spec.n;
        Rng rng = Rng::stream(99, k);
        SampleSet ss = draw_samples(spec, 3, rng);
        for (const auto& s : ss.samples) {
            std::vector<const Expression*> exprs;
            for (const auto& e : spec.a) exprs.push_back(&e);
            for (const auto& e : spec.b) exprs.push_back(&e);
            for (const Expression* e : exprs) {
                fltest::Function fun = [&](const Vector& p) {
                    return eval(*e, std::span<const double>(p.data(), n), spec.params);
                };
                Jet2 j = eval_jet2(*e, std::span<const double>(s.x.data(), n), spec.params);
                double gs = std::max(j.grad.cwiseAbs().maxCoeff(), 1e-12);
                double hs = std::max(j.hess.cwiseAbs().maxCoeff(), 1e-12);
                for (int a = 0; a < n; ++a) {
                    worse(ex, fltest::rel_err(j.grad[a], fltest::partial(fun, s.x, {a}, 1e-3), gs));
                    for (int b = 0; b < n; ++b)
                        worse(ex, fltest::rel_err(j.hess(a, b), fltest::partial(fun, s.x, {a, b}, 1e-3), hs));
                    checked += 1 + n;
                }
            }

            ChartFrame f = assemble_chart(spec, s.x);
            TaylorJet jet = f2_jet(spec.family, f, s.y, 4);
            const Layout& L = jet.layout();
            Vector p(2 * n);
            p << s.x, s.y;
            fltest::Function fun = fltest::f2_function(spec);
            std::vector<double> exact(L.size()), fd(L.size()), scale(5, 1e-12);
            for (int m = 0; m < L.size(); ++m) {
                std::vector<int> vars;
                double fact = 1;
                for (int v = 0; v < 2 * n; ++v)
                    for (int e = 1; e <= L.exponent(m, v); ++e) {
                        vars.push_back(v);
                        fact *= e;
                    }
                exact[m] = jet.coef(m) * fact;
                fd[m] = fltest::partial(fun, p, vars, 2e-2, 2);
                scale[L.tdeg(m)] = std::max(scale[L.tdeg(m)], std::abs(exact[m]));
            }
            for (int m = 0; m < L.size(); ++m) worse(fx, fltest::rel_err(exact[m], fd[m], scale[L.tdeg(m)]));
            checked += L.size();
        }
    }
    return {ex < 1e-5 && fx < 1e-5, std::to_string(checked) + " derivatives; chart expressions " + fmt(ex) +
                                        ", F^2 jets to order 4 " + fmt(fx)};
}

std::string strip_clock(std::string text) {
    auto pos = text.find("\"wall_clock_seconds\"");
    if (pos == std::string::npos) return text;
    auto start = text.rfind('\n', pos);
    auto end = text.find('\n', pos);
    return text.substr(0, start) + text.substr(end);
}

std::string run_cli(const std::string& args, const std::filesystem::path& out, int& code) {
    std::string cmd = std::string(FINSLERLAB_CLI_PATH) + " " + args + " --output " + out.string() + " 2>/dev/null";
    int status = std::system(cmd.c_str());
    code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism() {
    auto dir = std::filesystem::temp_directory_path() / "finslerlab_determinism";
    std::filesystem::create_directories(dir);
    std::string metrics = FINSLERLAB_METRICS;
    std::vector<std::string> campaigns = {
        "verify-appendix --fuzz n=3 --samples 40 --seed 42",
        "check " + metrics + "/mu-example.json --theorem einstein --samples 30 --seed 3",
        "check " + metrics + "/mu-example.json --theorem flag --samples 30 --seed 3",
        "check " + metrics + "/mu-example.json --theorem conformal --mu -1 --samples 30 --seed 3",
        "fuzz-identities --n 3 --samples 40 --seed 1"};
    bool ok = true;
    std::string detail;
    for (std::size_t k = 0; k < campaigns.size(); ++k) {
        int c1 = 0, c2 = 0;
        std::string a = run_cli(campaigns[k] + " --threads 1", dir / ("a" + std::to_string(k)), c1);
        std::string b = run_cli(campaigns[k] + " --threads 2", dir / ("b" + std::to_string(k)), c2);
        bool same = !a.empty() && strip_clock(a) == strip_clock(b) && c1 == c2;
        ok = ok && same;
        detail += (same ? "identical" : "DIFFERENT") + std::string(" (exit ") + std::to_string(c1) + "); ";
    }
    std::filesystem::remove_all(dir);
    return {ok, std::to_string(campaigns.size()) + " campaigns run twice: " + detail};
}

}

int main(int argc, char** argv) {
    const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria = {
        {1, {"appendix equivalence", appendix_equivalence}},
        {2, {"general identities", priori_identities}},
        {3, {"divisibility identity", divisibility_identity}},
        {4, {"mu example reproduction", mu_example_reproduction}},
        {5, {"berwald metric flag curvature", berwald_flat}},
        {6, {"einstein constant fit", einstein_constant}},
        {7, {"deformation identities", deformation_remark}},
        {8, {"negative controls", negative_controls}},
        {9, {"derivative soundness", derivative_soundness}},
        {10, {"determinism", determinism}},
    };
    std::vector<int> which;
    for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
    if (which.empty())
        for (const auto& [k, v] : criteria) which.push_back(k);
    bool all = true;
    for (int k : which) {
        auto it = criteria.find(k);
        if (it == criteria.end()) {
            std::cerr << "unknown criterion " << k << "\n";
            return 2;
        }
        Outcome o;
        try {
            o = it->second.second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << "criterion " << k << " " << it->second.first << ": " << (o.pass ? "PASS" : "FAIL") << " - "
                  << o.detail << std::endl;
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
