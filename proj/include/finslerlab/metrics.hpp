#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "finslerlab/finsler.hpp"
#include "finslerlab/riemann.hpp"

namespace finslerlab {

// xoshiro256** seeded through splitmix64
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    // an independent stream derived from (seed, stream)
    static Rng stream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next();
    // uniform in [0, 1) with 53 random bits
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int below(int n) { return static_cast<int>(uniform() * n); }
    Vector unit_vector(int n);

private:
    std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t& state);

struct FuzzConfig {
    std::uint64_t seed = 42;
    int n = 3;
    int degree = 2;
    double eps = 0.1;
    double box = 0.5;

    // throws InputError unless eps in [0, 0.3], degree in {1, 2, 3}, 0 < box <= 0.5, n >= 2
    void validate() const;
};

// square family on the ball |x| < 1, sampled in |x| <= 0.9
MetricSpec berwald_metric(int n);
// throws ConstraintViolation unless lambda^2 + mu |a|^2 = 0 within 1e-12; perturb adds perturb * x2 to b_3
MetricSpec mu_example(int n, double mu, double lambda, const Vector& avec, double perturb = 0.0);
// a = I with a constant 1-form
MetricSpec flat_metric(int n, const Vector& b, Family family = Family::singular_square);
// throws GenerationFailed after 50 rejected draws
MetricSpec random_spec(const FuzzConfig& cfg);

struct Sample {
    Vector x, y;
    GuardReport guard;
};

struct SampleSet {
    std::vector<Sample> samples;
    int attempts = 0;
};

// x uniform in the spec region, y uniform on the unit sphere; rejected draws are redrawn up to
// 100 * count attempts, then SamplingExhausted
SampleSet draw_samples(const MetricSpec& spec, int count, Rng& rng);

}
