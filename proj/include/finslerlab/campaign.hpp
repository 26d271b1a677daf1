#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "finslerlab/closedform.hpp"
#include "finslerlab/coefficients.hpp"
#include "finslerlab/metrics.hpp"

namespace finslerlab {

inline constexpr int report_schema_version = 1;

struct Tolerances {
    double appendix = 1e-8;
    double identities = 1e-9;
    double conditions = 1e-7;
    double poly12 = 1e-7;
    double remark = 1e-6;
};

enum class Theorem { einstein, flag, conformal };

Theorem theorem_from_name(const std::string& s);

struct CampaignOptions {
    int samples = 100;
    std::uint64_t seed = 42;
    Tolerances tol;
    const CoefficientSet* tables = nullptr; // builtin tables when null
    Convention convention = Convention::standard;
    Poly12Form poly12 = Poly12Form::divisibility;
    int threads = 0; // 0: FINSLERLAB_THREADS, else the hardware concurrency

    const CoefficientSet& table_set() const { return tables ? *tables : CoefficientSet::builtin(); }
};

struct MetricSource {
    std::string kind;   // file, fuzz
    std::string digest; // of the input bytes, or of the generated specs
    std::vector<MetricSpec> specs;
};

MetricSource file_source(const std::filesystem::path& path);
// one generated spec per ten samples, seeds derived from cfg.seed
MetricSource fuzz_source(const FuzzConfig& cfg, int samples);

struct Report {
    nlohmann::ordered_json body;
    int exit_code = 0;
    double wall_clock = 0;
};

// the report body with the wall-clock field appended
std::string render(const Report& r);

Report run_eval(const MetricSource& src, const Vector& x, const Vector& y, const CampaignOptions& opt);
Report run_verify_appendix(const MetricSource& src, const CampaignOptions& opt);
Report run_check(const MetricSource& src, Theorem th, std::optional<double> mu, const CampaignOptions& opt);
Report run_fuzz_identities(int n, const CampaignOptions& opt);

int thread_count(int requested);

// closed-form terms ranked by how well they explain a closed-minus-direct mismatch
struct Attribution {
    std::string table, name, block;
    double score = 0;
};

// squared cosine between the mismatch and each term, stacked across samples weighted by 1/scale
std::vector<Attribution> attribute_riemann(const CoefficientSet& set, const std::vector<Matrix>& mismatch,
                                           const std::vector<ClosedRiemann>& closed, const std::vector<double>& scale);
std::vector<Attribution> attribute_ricci(const CoefficientSet& set, const std::vector<double>& mismatch,
                                         const std::vector<ClosedRicci>& closed, const std::vector<double>& scale);

}
