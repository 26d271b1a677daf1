#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

#include "finslerlab/riemann.hpp"

namespace finslerlab {

// JSON metric file:
//   {"dimension": n, "family": "singular-square" | "square" | "riemannian-only",
//    "a": [[...]] (full rows or upper-triangle rows), "b": [...], "params": {name: value},
//    "scalars": {"c": expr, "d": expr}, "region": {"box": h, "ball": r}}
// or {"builtin": {"name": "mu-example" | "berwald" | "flat", "args": {...}}}
MetricSpec parse_metric(std::string_view text);
MetricSpec load_metric(const std::filesystem::path& path);
MetricSpec builtin_metric(const std::string& name, const nlohmann::json& args);

// the explicit form of a spec; parse_metric(metric_json(s)) reproduces s
nlohmann::ordered_json metric_json(const MetricSpec& spec);

}
