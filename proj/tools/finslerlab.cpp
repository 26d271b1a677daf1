#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "finslerlab/campaign.hpp"
#include "finslerlab/error.hpp"
#include "finslerlab/metric_file.hpp"

using namespace finslerlab;

namespace {

struct Inputs {
    std::string metric;
    std::string builtin;
    std::vector<std::string> args;
    std::string fuzz;
    int n = 3, degree = 2;
    double eps = 0.1, box = 0.5;
};

double to_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double d = 0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty()) throw InputError("'" + key + "' expects a number, got '" + v + "'");
    return d;
}

std::map<std::string, std::string> key_values(const std::string& text) {
    std::map<std::string, std::string> out;
    std::stringstream s(text);
    std::string item;
    while (std::getline(s, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw InputError("expected key=value, got '" + item + "'");
        out[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return out;
}

FuzzConfig fuzz_config(const Inputs& in, std::uint64_t seed) {
    FuzzConfig cfg;
    cfg.seed = seed;
    cfg.n = in.n;
    cfg.degree = in.degree;
    cfg.eps = in.eps;
    cfg.box = in.box;
    for (const auto& [k, v] : key_values(in.fuzz)) {
        if (k == "n") cfg.n = static_cast<int>(to_double(k, v));
        else if (k == "degree") cfg.degree = static_cast<int>(to_double(k, v));
        else if (k == "eps") cfg.eps = to_double(k, v);
        else if (k == "box") cfg.box = to_double(k, v);
        else throw InputError("unknown fuzz setting '" + k + "'");
    }
    return cfg;
}

// a,b and family-like arguments are JSON, everything else a number
nlohmann::json builtin_args(const std::vector<std::string>& args) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& a : args) {
        auto eq = a.find('=');
        if (eq == std::string::npos) throw InputError("--arg expects key=value, got '" + a + "'");
        std::string k = a.substr(0, eq), v = a.substr(eq + 1);
        if (k == "family") j[k] = v;
        else if (!v.empty() && v.front() == '[') {
            try {
                j[k] = nlohmann::json::parse(v);
            } catch (const nlohmann::json::exception&) {
                throw InputError("--arg " + k + " is not a JSON array");
            }
        } else j[k] = to_double(k, v);
    }
    if (j.contains("n")) j["n"] = j["n"].get<int>();
    return j;
}

MetricSource metric_source(const Inputs& in, std::uint64_t seed, int samples, bool fuzz_allowed) {
    int given = !in.metric.empty() + !in.builtin.empty() + !in.fuzz.empty();
    if (given != 1)
        throw InputError(fuzz_allowed ? "give exactly one of a metric file, --builtin or --fuzz"
                                      : "give exactly one of a metric file or --builtin");
    if (!in.metric.empty()) return file_source(in.metric);
    if (!in.builtin.empty()) {
        nlohmann::json bj = {{"builtin", {{"name", in.builtin}, {"args", builtin_args(in.args)}}}};
        std::string text = bj.dump();
        return {"builtin", "fnv1a64:" + fnv1a64(text), {parse_metric(text)}};
    }
    if (!fuzz_allowed) throw InputError("this command does not take --fuzz");
    return fuzz_source(fuzz_config(in, seed), samples);
}

Vector parse_point(const std::string& text, const char* what) {
    std::vector<double> v;
    std::stringstream s(text);
    std::string item;
    while (std::getline(s, item, ',')) v.push_back(to_double(what, item));
    if (v.empty()) throw InputError(std::string(what) + " is empty");
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void add_source_options(CLI::App* c, Inputs& in, bool fuzz) {
    c->add_option("metric,--metric", in.metric, "metric file (JSON)");
    c->add_option("--builtin", in.builtin, "builtin metric: mu-example, berwald, flat");
    c->add_option("--arg", in.args, "builtin argument key=value (repeatable)");
    if (fuzz) {
        c->add_option("--fuzz", in.fuzz, "generated metrics, e.g. n=3,degree=2,eps=0.1,box=0.5");
        c->add_option("--degree", in.degree, "fuzz polynomial degree");
        c->add_option("--eps", in.eps, "fuzz deviation of a from the identity");
        c->add_option("--box", in.box, "fuzz sampling half-width");
    }
}

}

int main(int argc, char** argv) {
    CLI::App app{"finslerlab: curvature verification for singular square Finsler metrics"};
    app.require_subcommand(1);

    Inputs in;
    CampaignOptions opt;
    std::string tables_path, output, theorem = "einstein", poly12 = "divisibility", xs, ys;
    std::optional<double> mu;
    bool flip = false;
    int dim = 3;

    auto common = [&](CLI::App* c) {
        c->add_option("--samples", opt.samples, "number of samples")->check(CLI::PositiveNumber);
        c->add_option("--seed", opt.seed, "random seed");
        c->add_option("--threads", opt.threads, "worker threads (default FINSLERLAB_THREADS or all cores)");
        c->add_option("--tables", tables_path, "coefficient table file");
        c->add_option("--output,-o", output, "write the report to a file");
        c->add_flag("--flip-curvature-sign", flip, "negate the Riemann tensor of alpha");
    };

    auto* eval = app.add_subcommand("eval", "curvature quantities at one point");
    add_source_options(eval, in, false);
    eval->add_option("--x", xs, "point, comma separated")->required();
    eval->add_option("--y", ys, "direction, comma separated")->required();
    eval->add_option("--tables", tables_path, "coefficient table file");
    eval->add_option("--output,-o", output, "write the report to a file");
    eval->add_flag("--flip-curvature-sign", flip, "negate the Riemann tensor of alpha");

    auto* verify = app.add_subcommand("verify-appendix", "closed-form curvature against the Berwald pipeline");
    add_source_options(verify, in, true);
    common(verify);
    verify->add_option("--tol", opt.tol.appendix, "relative tolerance");

    auto* check = app.add_subcommand("check", "theorem conditions across samples");
    add_source_options(check, in, false);
    common(check);
    check->add_option("--theorem", theorem, "einstein, flag or conformal");
    check->add_option("--mu", mu, "constant for the conformal conditions");
    check->add_option("--tol", opt.tol.conditions, "tolerance");
    check->add_option("--remark-tol", opt.tol.remark, "tolerance for the deformation identities");

    auto* fuzz = app.add_subcommand("fuzz-identities", "general identities over generated metrics");
    common(fuzz);
    fuzz->add_option("--n", dim, "dimension");
    fuzz->add_option("--tol", opt.tol.identities, "tolerance for the identities");
    fuzz->add_option("--poly12-tol", opt.tol.poly12, "tolerance for the divisibility identity");
    fuzz->add_option("--poly12", poly12, "literal or divisibility")
        ->check(CLI::IsMember({"literal", "divisibility"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        std::optional<CoefficientSet> tables;
        if (!tables_path.empty()) {
            tables = CoefficientSet::from_file(tables_path);
            opt.tables = &*tables;
        }
        opt.convention = flip ? Convention::flipped : Convention::standard;
        opt.poly12 = poly12 == "literal" ? Poly12Form::literal : Poly12Form::divisibility;

        Report report;
        if (*eval) {
            MetricSource src = metric_source(in, opt.seed, 1, false);
            report = run_eval(src, parse_point(xs, "--x"), parse_point(ys, "--y"), opt);
        } else if (*verify) {
            report = run_verify_appendix(metric_source(in, opt.seed, opt.samples, true), opt);
        } else if (*check) {
            report = run_check(metric_source(in, opt.seed, opt.samples, false), theorem_from_name(theorem), mu, opt);
        } else {
            report = run_fuzz_identities(dim, opt);
        }
        std::string text = render(report);
        if (output.empty()) {
            std::cout << text;
        } else {
            std::ofstream out(output, std::ios::binary);
            if (!(out << text)) throw InputError("cannot write " + output);
        }
        return report.exit_code;
    } catch (const InputError& e) {
        std::cerr << "finslerlab: input error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "finslerlab: domain error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "finslerlab: " << e.what() << "\n";
        return 1;
    }
}
