#include "finslerlab/metric_file.hpp"

#include <fstream>
#include <sstream>

#include "finslerlab/error.hpp"
#include "finslerlab/metrics.hpp"

namespace finslerlab {

namespace {

using nlohmann::json;

std::string expr_string(const json& v, const std::string& where) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) {
        std::ostringstream s;
        s.precision(17);
        s << v.get<double>();
        return s.str();
    }
    throw InputError(where + " must be an expression string");
}

Vector vector_arg(const json& args, const char* key, int n, Vector fallback) {
    if (!args.contains(key)) return fallback;
    const json& v = args.at(key);
    if (!v.is_array() || static_cast<int>(v.size()) != n)
        throw InputError(std::string("builtin argument '") + key + "' must be an array of " + std::to_string(n));
    Vector out(n);
    for (int k = 0; k < n; ++k) out[k] = v[k].get<double>();
    return out;
}

MetricSpec explicit_metric(const json& j) {
    for (const char* k : {"dimension", "a", "b"})
        if (!j.contains(k)) throw InputError(std::string("metric file lacks '") + k + "'");
    int n = j.at("dimension").get<int>();
    Family family = family_from_name(j.value("family", std::string("singular-square")));
    const json& ja = j.at("a");
    const json& jb = j.at("b");
    if (!ja.is_array() || !jb.is_array()) throw InputError("'a' and 'b' must be arrays");
    std::vector<std::vector<std::string>> a;
    for (std::size_t i = 0; i < ja.size(); ++i) {
        if (!ja[i].is_array()) throw InputError("row " + std::to_string(i + 1) + " of 'a' must be an array");
        std::vector<std::string> row;
        for (std::size_t k = 0; k < ja[i].size(); ++k)
            row.push_back(expr_string(ja[i][k], "a[" + std::to_string(i) + "][" + std::to_string(k) + "]"));
        a.push_back(std::move(row));
    }
    std::vector<std::string> b;
    for (std::size_t i = 0; i < jb.size(); ++i) b.push_back(expr_string(jb[i], "b[" + std::to_string(i) + "]"));
    Params params;
    if (j.contains("params"))
        for (const auto& [k, v] : j.at("params").items()) {
            if (!v.is_number()) throw InputError("parameter '" + k + "' must be a number");
            params[k] = v.get<double>();
        }
    std::optional<std::string> c, d;
    if (j.contains("scalars")) {
        const json& s = j.at("scalars");
        if (s.contains("c")) c = expr_string(s.at("c"), "scalars.c");
        if (s.contains("d")) d = expr_string(s.at("d"), "scalars.d");
        if (c.has_value() != d.has_value()) throw InputError("scalars need both 'c' and 'd'");
    }
    MetricSpec spec = make_spec(n, family, a, b, params, c, d);
    if (j.contains("region")) {
        const json& r = j.at("region");
        spec.region.box = r.value("box", spec.region.box);
        if (r.contains("ball")) spec.region.ball = r.at("ball").get<double>();
    }
    if (!(spec.region.box > 0)) throw InputError("region box must be positive");
    return spec;
}

}

MetricSpec builtin_metric(const std::string& name, const json& args) {
    int n = args.value("n", 3);
    if (name == "mu-example") {
        Vector a = Vector::Zero(n);
        if (n > 0) a[0] = 1.0;
        return mu_example(n, args.value("mu", -1.0), args.value("lambda", 1.0), vector_arg(args, "a", n, a),
                          args.value("perturb", 0.0));
    }
    if (name == "berwald") return berwald_metric(n);
    if (name == "flat") {
        Vector b = Vector::Zero(n);
        if (n > 0) b[0] = 1.0;
        return flat_metric(n, vector_arg(args, "b", n, b),
                           family_from_name(args.value("family", std::string("singular-square"))));
    }
    throw InputError("unknown builtin metric '" + name + "'");
}

MetricSpec parse_metric(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("metric file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw InputError("metric file must hold a JSON object");
    try {
        bool has_builtin = j.contains("builtin");
        bool has_explicit = j.contains("a") || j.contains("b");
        if (has_builtin == has_explicit) throw InputError("metric file needs exactly one of 'builtin' or 'a'/'b'");
        if (has_builtin) {
            const json& bi = j.at("builtin");
            return builtin_metric(bi.at("name").get<std::string>(), bi.value("args", json::object()));
        }
        return explicit_metric(j);
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed metric file: ") + e.what());
    }
}

MetricSpec load_metric(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open metric file " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return parse_metric(s.str());
}

nlohmann::ordered_json metric_json(const MetricSpec& spec) {
    nlohmann::ordered_json j;
    int n = spec.n;
    j["dimension"] = n;
    j["family"] = std::string(family_name(spec.family));
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (int i = 0; i < n; ++i) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (int k = i; k < n; ++k) row.push_back(spec.a_at(i, k).unparse());
        a.push_back(row);
    }
    j["a"] = a;
    nlohmann::ordered_json b = nlohmann::ordered_json::array();
    for (const auto& e : spec.b) b.push_back(e.unparse());
    j["b"] = b;
    nlohmann::ordered_json p = nlohmann::ordered_json::object();
    for (const auto& [k, v] : spec.params) p[k] = v;
    j["params"] = p;
    if (spec.c_expr && spec.d_expr) j["scalars"] = {{"c", spec.c_expr->unparse()}, {"d", spec.d_expr->unparse()}};
    j["region"] = {{"box", spec.region.box}};
    if (spec.region.ball) j["region"]["ball"] = *spec.region.ball;
    return j;
}

}
