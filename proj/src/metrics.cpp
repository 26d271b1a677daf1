#include "finslerlab/metrics.hpp"

#include <charconv>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "finslerlab/error.hpp"

namespace finslerlab {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) {
    for (auto& w : s_) w = splitmix64(seed);
}

Rng Rng::stream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t m = stream;
    return Rng(seed ^ splitmix64(m));
}

std::uint64_t Rng::next() {
    auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
    std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

// rejection from the cube keeps the draw free of transcendental functions
Vector Rng::unit_vector(int n) {
    for (;;) {
        Vector v(n);
        for (int k = 0; k < n; ++k) v[k] = uniform(-1.0, 1.0);
        double r2 = v.squaredNorm();
        if (r2 > 1e-4 && r2 <= 1.0) return v / std::sqrt(r2);
    }
}

void FuzzConfig::validate() const {
    if (n < 2) throw InputError("fuzz dimension must be at least 2");
    if (!(eps >= 0.0 && eps <= 0.3)) throw InputError("fuzz eps must lie in [0, 0.3]");
    if (degree < 1 || degree > 3) throw InputError("fuzz degree must be 1, 2 or 3");
    if (!(box > 0.0 && box <= 0.5)) throw InputError("fuzz box must lie in (0, 0.5]");
}

namespace {

std::string num(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    return v < 0 ? "(" + s + ")" : s;
}

std::string xs(int k) { return "x" + std::to_string(k + 1); }

std::string squared_norm(int n, const std::string& u, const std::string& v) {
    std::string s;
    for (int k = 0; k < n; ++k) s += (k ? " + " : "") + u + std::to_string(k + 1) + "*" + v + std::to_string(k + 1);
    return "(" + s + ")";
}

// a random polynomial with one monomial of each degree 1..degree and no constant term
std::string random_poly(int n, int degree, double amp, Rng& rng) {
    std::string s;
    for (int deg = 1; deg <= degree; ++deg) {
        std::vector<int> e(n, 0);
        for (int k = 0; k < deg; ++k) ++e[rng.below(n)];
        std::string mono = num(rng.uniform(-amp, amp));
        for (int k = 0; k < n; ++k)
            if (e[k] > 0) mono += "*" + xs(k) + (e[k] > 1 ? "^" + std::to_string(e[k]) : "");
        s += (s.empty() ? "" : " + ") + mono;
    }
    return s;
}

}

MetricSpec berwald_metric(int n) {
    if (n < 2) throw InputError("berwald metric needs n >= 2");
    std::string q = "(1 - " + squared_norm(n, "x", "x") + ")";
    std::vector<std::vector<std::string>> a(n, std::vector<std::string>(n));
    std::vector<std::string> b(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            a[i][j] = "(" + std::string(i == j ? q + " + " : "") + xs(i) + "*" + xs(j) + ")/" + q + "^4";
        b[i] = xs(i) + "/" + q + "^2";
    }
    MetricSpec s = make_spec(n, Family::square, a, b);
    s.region = {0.9, 0.9};
    return s;
}

MetricSpec mu_example(int n, double mu, double lambda, const Vector& avec, double perturb) {
    if (n < 3) throw InputError("mu example needs n >= 3");
    if (!(mu < 0)) throw InputError("mu example needs mu < 0");
    if (avec.size() != n) throw InputError("mu example needs an n-vector a");
    double defect = lambda * lambda + mu * avec.squaredNorm();
    if (!(std::abs(defect) <= 1e-12))
        throw ConstraintViolation("lambda^2 + mu |a|^2 = " + std::to_string(defect) + " must vanish");
    Params p{{"mu", mu}, {"lam", lambda}};
    for (int k = 0; k < n; ++k) p["a" + std::to_string(k + 1)] = avec[k];
    std::string D = "(1 + mu*" + squared_norm(n, "x", "x") + ")";
    std::string ax = squared_norm(n, "a", "x");
    std::vector<std::vector<std::string>> a(n, std::vector<std::string>(n));
    std::vector<std::string> b(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            a[i][j] = "(" + std::string(i == j ? D + " - " : "- ") + "mu*" + xs(i) + "*" + xs(j) + ")/" + D + "^2";
        b[i] = "(lam*" + xs(i) + " + " + D + "*a" + std::to_string(i + 1) + " - mu*" + ax + "*" + xs(i) + ")/" +
               D + "^(3/2)";
    }
    std::optional<std::string> c, d;
    if (perturb != 0.0) {
        b[2] += " + " + num(perturb) + "*x2";
    } else {
        c = "(lam - mu*" + ax + ")/sqrt" + D;
        d = "0";
    }
    MetricSpec s = make_spec(n, Family::singular_square, a, b, p, c, d);
    double r = 0.9 / std::sqrt(-mu);
    s.region = {std::min(0.5, r), r};
    return s;
}

MetricSpec flat_metric(int n, const Vector& bv, Family family) {
    if (bv.size() != n) throw InputError("flat metric needs an n-vector b");
    std::vector<std::vector<std::string>> a(n, std::vector<std::string>(n, "0"));
    std::vector<std::string> b(n);
    for (int i = 0; i < n; ++i) {
        a[i][i] = "1";
        b[i] = num(bv[i]);
    }
    return make_spec(n, family, a, b, {}, std::string("0"), std::string("0"));
}

MetricSpec random_spec(const FuzzConfig& cfg) {
    cfg.validate();
    int n = cfg.n;
    Rng rng(cfg.seed);
    for (int attempt = 0; attempt < 50; ++attempt) {
        std::vector<std::vector<std::string>> a(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                std::string e = i == j ? "1" : "0";
                if (cfg.eps > 0)
                    e += " + " + num(cfg.eps) + "*(" + num(rng.uniform(-1, 1)) + " + " +
                         random_poly(n, cfg.degree, 1.0, rng) + ")";
                a[i].push_back(e);
            }
        std::vector<std::string> b(n);
        for (int i = 0; i < n; ++i) b[i] = num(rng.uniform(-1, 1)) + " + " + random_poly(n, cfg.degree, 0.3, rng);
        MetricSpec s = make_spec(n, Family::singular_square, a, b);
        s.region = {cfg.box, {}};
        bool ok = true;
        for (int k = 0; k < 100 && ok; ++k) {
            Vector x(n);
            for (int m = 0; m < n; ++m) x[m] = rng.uniform(-cfg.box, cfg.box);
            Matrix A(n, n);
            Vector bx(n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) A(i, j) = eval(s.a_at(i, j), std::span<const double>(x.data(), n), {});
                bx[i] = eval(s.b[i], std::span<const double>(x.data(), n), {});
            }
            Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
            double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
            if (!(lo > 1e-10 * hi)) {
                ok = false;
                break;
            }
            ok = bx.dot(A.ldlt().solve(bx)) > 0.25;
        }
        if (ok) return s;
    }
    throw GenerationFailed("no admissible random metric after 50 draws");
}

SampleSet draw_samples(const MetricSpec& spec, int count, Rng& rng) {
    int n = spec.n;
    SampleSet out;
    long cap = 100L * count;
    while (static_cast<int>(out.samples.size()) < count) {
        if (out.attempts >= cap)
            throw SamplingExhausted("found " + std::to_string(out.samples.size()) + " of " + std::to_string(count) +
                                    " admissible samples in " + std::to_string(out.attempts) + " attempts");
        ++out.attempts;
        Vector x(n);
        for (int k = 0; k < n; ++k) x[k] = rng.uniform(-spec.region.box, spec.region.box);
        Vector y = rng.unit_vector(n);
        if (spec.region.ball && x.norm() > *spec.region.ball) continue;
        try {
            ChartFrame f = assemble_chart(spec, x);
            GuardReport g = check_guards(spec.family, f, y);
            if (!g.ok) continue;
            out.samples.push_back({x, y, g});
        } catch (const DomainError&) {
        }
    }
    return out;
}

}
