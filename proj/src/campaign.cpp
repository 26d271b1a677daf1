#include "finslerlab/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "finslerlab/conditions.hpp"
#include "finslerlab/error.hpp"
#include "finslerlab/finsler.hpp"
#include "finslerlab/metric_file.hpp"

namespace finslerlab {

using ojson = nlohmann::ordered_json;

Theorem theorem_from_name(const std::string& s) {
    if (s == "einstein") return Theorem::einstein;
    if (s == "flag") return Theorem::flag;
    if (s == "conformal") return Theorem::conformal;
    throw InputError("unknown theorem '" + s + "'");
}

int thread_count(int requested) {
    int t = requested;
    if (t <= 0) {
        if (const char* env = std::getenv("FINSLERLAB_THREADS")) t = std::atoi(env);
    }
    if (t <= 0) t = static_cast<int>(std::thread::hardware_concurrency());
    return std::max(1, t);
}

namespace {

template <class F>
void parallel_for(int count, int threads, F&& body) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i; (i = next++) < count;) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < std::min(threads, count); ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

ojson vec_json(const Vector& v) {
    ojson a = ojson::array();
    for (int k = 0; k < v.size(); ++k) a.push_back(v[k]);
    return a;
}

ojson mat_json(const Matrix& m) {
    ojson a = ojson::array();
    for (int i = 0; i < m.rows(); ++i) {
        ojson row = ojson::array();
        for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        a.push_back(row);
    }
    return a;
}

// NaN marks a sample where the check was not evaluated
class Checks {
public:
    explicit Checks(int samples) : samples_(samples) {}

    void set(const std::string& name, int sample, double value, double tol) {
        auto it = index_.find(name);
        if (it == index_.end()) {
            it = index_.emplace(name, static_cast<int>(rows_.size())).first;
            rows_.push_back({name, tol, std::vector<double>(samples_, std::numeric_limits<double>::quiet_NaN())});
        }
        Row& r = rows_[it->second];
        r.tol = std::max(r.tol, tol);
        r.values[sample] = value;
    }

    bool all_pass() const {
        for (const Row& r : rows_)
            if (!pass(r)) return false;
        return true;
    }

    ojson json() const {
        std::vector<const Row*> sorted;
        for (const Row& r : rows_) sorted.push_back(&r);
        std::sort(sorted.begin(), sorted.end(), [](const Row* a, const Row* b) { return a->name < b->name; });
        ojson out = ojson::array();
        for (const Row* r : sorted) {
            Stats s = stats(*r);
            ojson c;
            c["name"] = r->name;
            c["tolerance"] = r->tol;
            c["count"] = s.count;
            c["max"] = s.count ? ojson(s.max) : ojson(nullptr);
            c["mean"] = s.count ? ojson(s.mean) : ojson(nullptr);
            c["worst_sample"] = s.count ? ojson(s.worst) : ojson(nullptr);
            c["pass"] = pass(*r);
            out.push_back(c);
        }
        return out;
    }

    std::vector<int> failing_samples(const std::string& name) const {
        std::vector<int> out;
        auto it = index_.find(name);
        if (it == index_.end()) return out;
        const Row& r = rows_[it->second];
        for (int i = 0; i < samples_; ++i)
            if (!std::isnan(r.values[i]) && !(r.values[i] < r.tol)) out.push_back(i);
        return out;
    }

private:
    struct Row {
        std::string name;
        double tol;
        std::vector<double> values;
    };
    struct Stats {
        int count = 0, worst = -1;
        double max = 0, mean = 0;
    };
    int samples_;
    std::vector<Row> rows_;
    std::map<std::string, int> index_;

    static Stats stats(const Row& r) {
        Stats s;
        double sum = 0;
        for (std::size_t i = 0; i < r.values.size(); ++i) {
            double v = r.values[i];
            if (std::isnan(v)) continue;
            if (s.count == 0 || !(v <= s.max)) {
                s.max = v;
                s.worst = static_cast<int>(i);
            }
            sum += v;
            ++s.count;
        }
        if (s.count) s.mean = sum / s.count;
        return s;
    }
    static bool pass(const Row& r) {
        Stats s = stats(r);
        return s.count > 0 && s.max < r.tol;
    }
};

struct Drawn {
    int spec;
    Sample sample;
};

// every spec gets an equal share of the samples from its own generator stream
std::vector<Drawn> draw_all(const MetricSource& src, int samples, std::uint64_t seed, int& attempts) {
    std::vector<Drawn> out;
    int m = static_cast<int>(src.specs.size());
    attempts = 0;
    for (int k = 0; k < m; ++k) {
        int share = samples / m + (k < samples % m ? 1 : 0);
        if (share == 0) continue;
        Rng rng = Rng::stream(seed, 1000 + k);
        SampleSet s = draw_samples(src.specs[k], share, rng);
        attempts += s.attempts;
        for (auto& smp : s.samples) out.push_back({k, std::move(smp)});
    }
    return out;
}

ojson header(const std::string& command, const MetricSource& src, const CampaignOptions& opt) {
    ojson h;
    h["schema_version"] = report_schema_version;
    h["tool"] = {{"name", "finslerlab"}, {"version", FINSLERLAB_VERSION}};
    h["command"] = command;
    h["input"] = {{"kind", src.kind}, {"digest", src.digest}, {"specs", src.specs.size()}};
    h["seed"] = opt.seed;
    h["settings"] = {{"samples", opt.samples},
                     {"convention", opt.convention == Convention::standard ? "standard" : "flipped"},
                     {"tolerances",
                      {{"appendix", opt.tol.appendix},
                       {"identities", opt.tol.identities},
                       {"conditions", opt.tol.conditions},
                       {"poly12", opt.tol.poly12},
                       {"remark", opt.tol.remark}}}};
    return h;
}

ojson tables_json(const CoefficientSet& set) {
    return {{"origin", set.origin()},
            {"declared_checksum", set.declared_checksum()},
            {"computed_checksum", set.computed_checksum()},
            {"checksum_ok", set.checksum_ok()}};
}

ojson samples_json(const std::vector<Drawn>& drawn, int attempts) {
    ojson list = ojson::array();
    for (const Drawn& d : drawn)
        list.push_back({{"spec", d.spec},
                        {"x", vec_json(d.sample.x)},
                        {"y", vec_json(d.sample.y)},
                        {"margins", {{"alpha", d.sample.guard.alpha}, {"b2", d.sample.guard.b2}, {"cone", d.sample.guard.margin}}}});
    int n = static_cast<int>(drawn.size());
    return {{"count", n},
            {"attempts", attempts},
            {"rejection_rate", attempts ? double(attempts - n) / attempts : 0.0},
            {"list", list}};
}

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void finish(Report& r, const Checks& checks, std::chrono::steady_clock::time_point t0) {
    r.body["checks"] = checks.json();
    bool ok = checks.all_pass();
    r.body["status"] = ok ? "pass" : "fail";
    r.exit_code = ok ? 0 : 1;
    r.wall_clock = elapsed(t0);
}

double rel_matrix(const Matrix& closed, const Matrix& direct, double F2) {
    return (closed - direct).cwiseAbs().maxCoeff() / std::max(direct.cwiseAbs().maxCoeff(), F2);
}

std::vector<Attribution> ranked(std::vector<Attribution> v) {
    std::stable_sort(v.begin(), v.end(), [](const Attribution& a, const Attribution& b) { return a.score > b.score; });
    if (v.size() > 3) v.resize(3);
    return v;
}

ojson attribution_json(const std::vector<Attribution>& v) {
    ojson out = ojson::array();
    for (const auto& a : v) out.push_back({{"table", a.table}, {"name", a.name}, {"block", a.block}, {"score", a.score}});
    return out;
}

// residual names whose inputs include gradients of c or d
const std::set<std::string> uses_gradients = {
    "einstein.ric00", "einstein.c0",       "einstein.s0|b", "einstein.si0|i",  "einstein.X",      "einstein.Y",
    "einstein.Z",     "einstein.ric0",     "einstein.ric",  "einstein.ric0_jet", "einstein.ric_jet", "flag.rik",
    "flag.dk_skew",   "flag.s0|k",         "remark.tau_i"};

}

std::vector<Attribution> attribute_riemann(const CoefficientSet& set, const std::vector<Matrix>& mismatch,
                                           const std::vector<ClosedRiemann>& closed, const std::vector<double>& scale) {
    const auto& table = set.table("riemann");
    std::vector<Attribution> out;
    for (std::size_t t = 0; t < table.size(); ++t) {
        double ee = 0, tt = 0, et = 0;
        for (std::size_t s = 0; s < mismatch.size(); ++s) {
            const Matrix& T = closed[s].terms[t].value;
            double w = 1.0 / (scale[s] * scale[s]);
            ee += w * mismatch[s].squaredNorm();
            tt += w * T.squaredNorm();
            et += w * (mismatch[s].array() * T.array()).sum();
        }
        double score = ee > 0 && tt > 0 ? et * et / (ee * tt) : 0.0;
        out.push_back({"riemann", table[t].name, table[t].block, score});
    }
    return ranked(std::move(out));
}

std::vector<Attribution> attribute_ricci(const CoefficientSet& set, const std::vector<double>& mismatch,
                                         const std::vector<ClosedRicci>& closed, const std::vector<double>& scale) {
    const auto& table = set.table("ricci");
    std::vector<Attribution> out;
    for (std::size_t t = 0; t < table.size(); ++t) {
        double ee = 0, tt = 0, et = 0;
        for (std::size_t s = 0; s < mismatch.size(); ++s) {
            double e = mismatch[s] / scale[s], v = closed[s].terms[t].value / scale[s];
            ee += e * e;
            tt += v * v;
            et += e * v;
        }
        double score = ee > 0 && tt > 0 ? et * et / (ee * tt) : 0.0;
        out.push_back({"ricci", table[t].name, table[t].block, score});
    }
    return ranked(std::move(out));
}

std::string render(const Report& r) {
    ojson b = r.body;
    b["wall_clock_seconds"] = r.wall_clock;
    return b.dump(2) + "\n";
}

MetricSource file_source(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open metric file " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    std::string text = s.str();
    return {"file", "fnv1a64:" + fnv1a64(text), {parse_metric(text)}};
}

MetricSource fuzz_source(const FuzzConfig& cfg, int samples) {
    cfg.validate();
    MetricSource src{"fuzz", "", {}};
    int count = std::max(1, (samples + 9) / 10);
    std::string all;
    for (int k = 0; k < count; ++k) {
        FuzzConfig c = cfg;
        std::uint64_t state = cfg.seed + static_cast<std::uint64_t>(k);
        c.seed = splitmix64(state);
        src.specs.push_back(random_spec(c));
        all += metric_json(src.specs.back()).dump();
    }
    src.digest = "fnv1a64:" + fnv1a64(all);
    return src;
}

Report run_eval(const MetricSource& src, const Vector& x, const Vector& y, const CampaignOptions& opt) {
    auto t0 = std::chrono::steady_clock::now();
    const MetricSpec& spec = src.specs.at(0);
    if (x.size() != spec.n || y.size() != spec.n) throw InputError("x and y must have the metric dimension");
    ChartFrame f = assemble_chart(spec, x);
    require_guards(spec.family, f, y);
    CurvatureBundle cb = berwald(spec.family, f, y, true);
    AlphaCurvature ac = alpha_curvature(f, y, opt.convention);
    BetaTensors bt = beta_tensors(f);
    Report r;
    r.body = header("eval", src, opt);
    r.body["x"] = vec_json(x);
    r.body["y"] = vec_json(y);
    r.body["family"] = std::string(family_name(spec.family));
    r.body["F"] = cb.F;
    r.body["g"] = mat_json(cb.g);
    r.body["G"] = vec_json(cb.G);
    r.body["FR"] = mat_json(cb.FR);
    r.body["FRic00"] = cb.FRic00;
    r.body["alpha"] = {{"R", mat_json(ac.Rik)}, {"ric00", ac.ric00}};
    ojson beta = {{"b2", bt.b2},
                  {"b_ij", mat_json(bt.bij)},
                  {"r_ij", mat_json(bt.r)},
                  {"s_ij", mat_json(bt.s)},
                  {"r_i", vec_json(bt.ri)},
                  {"s_i", vec_json(bt.si)},
                  {"r", bt.rb},
                  {"t", bt.t_s}};
    try {
        Decomposition dec = extract_decomposition(f, bt);
        beta["decomposition"] = {{"c", dec.c}, {"d", dec.d}, {"theta", vec_json(dec.theta)}, {"residual", dec.residual}};
    } catch (const RankDeficient& e) {
        beta["decomposition"] = {{"c", e.c()}, {"note", e.what()}};
    }
    r.body["beta"] = beta;
    r.body["status"] = "ok";
    r.wall_clock = elapsed(t0);
    return r;
}

Report run_verify_appendix(const MetricSource& src, const CampaignOptions& opt) {
    auto t0 = std::chrono::steady_clock::now();
    for (const auto& s : src.specs)
        if (s.family != Family::singular_square)
            throw InputError("closed forms apply to the singular-square family only, not " +
                             std::string(family_name(s.family)));
    const CoefficientSet& set = opt.table_set();
    int attempts = 0;
    std::vector<Drawn> drawn = draw_all(src, opt.samples, opt.seed, attempts);
    int N = static_cast<int>(drawn.size());
    std::vector<Matrix> dR(N);
    std::vector<double> dRic(N), scaleR(N), scaleRic(N), errR(N), errRic(N);
    std::vector<ClosedRiemann> cr(N);
    std::vector<ClosedRicci> cc(N);
    parallel_for(N, thread_count(opt.threads), [&](int i) {
        const MetricSpec& spec = src.specs[drawn[i].spec];
        const Sample& s = drawn[i].sample;
        ChartFrame f = assemble_chart(spec, s.x);
        CurvatureBundle cb = berwald(spec.family, f, s.y, true);
        BetaTensors bt = beta_tensors(f);
        AlphaCurvature ac = alpha_curvature(f, s.y, opt.convention);
        cr[i] = closed_riemann(set, bt, ac, s.y);
        cc[i] = closed_ricci(set, bt, ac, s.y);
        double F2 = cb.F * cb.F;
        dR[i] = cr[i].FR - cb.FR;
        dRic[i] = cc[i].FRic00 - cb.FRic00;
        scaleR[i] = std::max(cb.FR.cwiseAbs().maxCoeff(), F2);
        scaleRic[i] = std::max(std::abs(cb.FRic00), F2);
        errR[i] = rel_matrix(cr[i].FR, cb.FR, F2);
        errRic[i] = std::abs(dRic[i]) / scaleRic[i];
    });
    Checks checks(N);
    for (int i = 0; i < N; ++i) {
        checks.set("appendix.riemann", i, errR[i], opt.tol.appendix);
        checks.set("appendix.ricci", i, errRic[i], opt.tol.appendix);
    }
    Report r;
    r.body = header("verify-appendix", src, opt);
    r.body["tables"] = tables_json(set);
    r.body["samples"] = samples_json(drawn, attempts);
    ojson attr = ojson::object();
    std::vector<int> badR = checks.failing_samples("appendix.riemann");
    if (!badR.empty()) {
        std::vector<Matrix> m;
        std::vector<ClosedRiemann> c;
        std::vector<double> sc;
        for (int i : badR) {
            m.push_back(dR[i]);
            c.push_back(cr[i]);
            sc.push_back(scaleR[i]);
        }
        attr["riemann"] = attribution_json(attribute_riemann(set, m, c, sc));
    }
    std::vector<int> badRic = checks.failing_samples("appendix.ricci");
    if (!badRic.empty()) {
        std::vector<double> m, sc;
        std::vector<ClosedRicci> c;
        for (int i : badRic) {
            m.push_back(dRic[i]);
            c.push_back(cc[i]);
            sc.push_back(scaleRic[i]);
        }
        attr["ricci"] = attribution_json(attribute_ricci(set, m, c, sc));
    }
    if (!attr.empty()) r.body["attribution"] = attr;
    finish(r, checks, t0);
    return r;
}

Report run_check(const MetricSource& src, Theorem th, std::optional<double> mu, const CampaignOptions& opt) {
    auto t0 = std::chrono::steady_clock::now();
    if (th == Theorem::conformal && !mu) throw InputError("--theorem conformal needs --mu");
    for (const auto& s : src.specs) {
        if (s.family != Family::singular_square) throw InputError("theorem checks apply to the singular-square family");
        if (s.n < 3) throw InputError("theorem checks need n >= 3");
    }
    int attempts = 0;
    std::vector<Drawn> drawn = draw_all(src, opt.samples, opt.seed, attempts);
    int N = static_cast<int>(drawn.size());
    std::vector<ResidualMap> maps(N);
    std::vector<double> fric(N), f2(N), flag(N);
    std::vector<char> exact(N);
    parallel_for(N, thread_count(opt.threads), [&](int i) {
        const MetricSpec& spec = src.specs[drawn[i].spec];
        const Sample& s = drawn[i].sample;
        ChartFrame f = assemble_chart(spec, s.x);
        BetaTensors bt = beta_tensors(f);
        AlphaCurvature ac = alpha_curvature(f, s.y, opt.convention);
        Decomposition dec = extract_decomposition(f, bt);
        ScalarField sf = scalar_field(spec, s.x);
        exact[i] = sf.exact;
        PointData p{f, ac, bt, dec, sf, s.y};
        ResidualMap& out = maps[i];
        auto merge = [&](const std::string& prefix, const ResidualMap& m) {
            for (const auto& [k, v] : m) out[prefix + k] = v;
        };
        out["decomposition.residual"] = dec.residual / std::max(1.0, bt.r.cwiseAbs().maxCoeff());
        switch (th) {
        case Theorem::einstein: {
            merge("einstein.", check_einstein(p));
            try {
                merge("remark.", check_deformation_remark(p, opt.tol.remark));
            } catch (const HypothesisNotMet&) {
            }
            CurvatureBundle cb = berwald(spec.family, f, s.y, true);
            fric[i] = cb.FRic00;
            f2[i] = cb.F * cb.F;
            break;
        }
        case Theorem::flag: {
            merge("flag.", check_flag(p));
            CurvatureBundle cb = berwald(spec.family, f, s.y, false);
            flag[i] = flag_constancy_residual(cb, s.y, 0.0).tensor;
            break;
        }
        case Theorem::conformal: merge("conformal.", check_conformal(p, *mu)); break;
        }
    });
    Checks checks(N);
    bool all_exact = true;
    for (int i = 0; i < N; ++i) {
        all_exact = all_exact && exact[i];
        for (const auto& [k, v] : maps[i]) {
            double tol = k.rfind("remark.", 0) == 0 ? opt.tol.remark : opt.tol.conditions;
            if (!exact[i] && uses_gradients.count(k)) tol = std::max(tol, stencil_accuracy);
            checks.set(k, i, v, tol);
        }
    }
    Report r;
    r.body = header("check", src, opt);
    r.body["theorem"] = th == Theorem::einstein ? "einstein" : th == Theorem::flag ? "flag" : "conformal";
    if (mu) r.body["mu"] = *mu;
    r.body["scalars"] = all_exact ? "exact" : "stencil";
    r.body["samples"] = samples_json(drawn, attempts);
    if (th == Theorem::einstein && N > 0) {
        int n = src.specs[0].n;
        double K = fit_einstein_constant(n, fric, f2);
        r.body["K"] = K;
        for (int i = 0; i < N; ++i) {
            checks.set("einstein.ricci_constancy", i, std::abs(fric[i] - (n - 1) * K * f2[i]) / f2[i],
                       opt.tol.conditions);
            checks.set("einstein.K", i, std::abs(K), opt.tol.conditions);
        }
    }
    if (th == Theorem::flag)
        for (int i = 0; i < N; ++i) checks.set("flag.constancy", i, flag[i], opt.tol.conditions);
    finish(r, checks, t0);
    return r;
}

Report run_fuzz_identities(int n, const CampaignOptions& opt) {
    auto t0 = std::chrono::steady_clock::now();
    FuzzConfig cfg;
    cfg.seed = opt.seed;
    cfg.n = n;
    MetricSource src = fuzz_source(cfg, opt.samples);
    const CoefficientSet& set = opt.table_set();
    int attempts = 0;
    std::vector<Drawn> drawn = draw_all(src, opt.samples, opt.seed, attempts);
    int N = static_cast<int>(drawn.size());
    std::vector<ResidualMap> maps(N);
    parallel_for(N, thread_count(opt.threads), [&](int i) {
        const MetricSpec& spec = src.specs[drawn[i].spec];
        const Sample& s = drawn[i].sample;
        ChartFrame f = assemble_chart(spec, s.x);
        BetaTensors bt = beta_tensors(f);
        AlphaCurvature ac = alpha_curvature(f, s.y, opt.convention);
        for (const auto& [k, v] : priori_residuals(bt, ac, s.y)) maps[i]["identity." + k] = v;
        maps[i]["poly12"] = poly12_residual(set, bt, ac, s.y, 0.0, opt.poly12);
    });
    Checks checks(N);
    for (int i = 0; i < N; ++i)
        for (const auto& [k, v] : maps[i]) checks.set(k, i, v, k == "poly12" ? opt.tol.poly12 : opt.tol.identities);
    Report r;
    r.body = header("fuzz-identities", src, opt);
    r.body["dimension"] = n;
    r.body["poly12_form"] = opt.poly12 == Poly12Form::literal ? "literal" : "divisibility";
    r.body["tables"] = tables_json(set);
    r.body["samples"] = samples_json(drawn, attempts);
    finish(r, checks, t0);
    return r;
}

}
