#include "finslerlab/coefficients.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "finslerlab/error.hpp"
#include "json.hpp"

namespace finslerlab {

namespace detail {
extern const std::string_view default_table_json;
}

std::string fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

Coefficient read_record(const nlohmann::json& r) {
    Coefficient c;
    c.name = r.at("name").get<std::string>();
    c.block = r.value("block", "");
    c.source = r.value("source", "");
    const auto& d = r.at("den");
    c.den.c = d.at("c").get<double>();
    c.den.b = d.at("b").get<int>();
    c.den.al = d.at("al").get<int>();
    c.den.P = d.at("P").get<int>();
    c.den.M = d.at("M").get<int>();
    if (c.den.c == 0.0) throw InputError("coefficient " + c.name + " has a zero denominator");
    for (const auto& t : r.at("terms")) {
        if (t.size() != 5) throw InputError("coefficient " + c.name + " has a malformed term");
        c.terms.push_back({t[0].get<double>(), t[1].get<int>(), t[2].get<int>(), t[3].get<int>(), t[4].get<int>()});
    }
    return c;
}

}

CoefficientSet CoefficientSet::from_json(std::string_view text, std::string origin) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError("coefficient file " + origin + ": " + e.what());
    }
    CoefficientSet s;
    s.origin_ = std::move(origin);
    try {
        if (doc.value("format", "") != "finslerlab-coefficients")
            throw InputError("coefficient file " + s.origin_ + " has an unknown format");
        if (doc.value("version", 0) != 1) throw InputError("coefficient file " + s.origin_ + " has an unknown version");
        const auto& tables = doc.at("tables");
        s.declared_ = doc.value("checksum", "");
        s.computed_ = "fnv1a64:" + fnv1a64(tables.dump());
        for (const auto& [name, records] : tables.items()) {
            auto& out = s.tables_[name];
            for (const auto& r : records) {
                Coefficient c = read_record(r);
                for (const Monomial& m : c.terms) {
                    s.max_.b = std::max(s.max_.b, m.pb);
                    s.max_.al = std::max(s.max_.al, m.pal);
                    s.max_.be = std::max(s.max_.be, m.pbe);
                }
                s.max_.b = std::max(s.max_.b, c.den.b);
                s.max_.al = std::max(s.max_.al, c.den.al);
                s.max_.P = std::max(s.max_.P, c.den.P);
                s.max_.M = std::max(s.max_.M, c.den.M);
                out.push_back(std::move(c));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError("coefficient file " + s.origin_ + ": " + e.what());
    }
    return s;
}

CoefficientSet CoefficientSet::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open coefficient file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str(), path.string());
}

const CoefficientSet& CoefficientSet::builtin() {
    static const CoefficientSet s = from_json(detail::default_table_json, "builtin");
    return s;
}

const std::vector<Coefficient>& CoefficientSet::table(std::string_view name) const {
    auto it = tables_.find(name);
    if (it == tables_.end()) throw InputError("coefficient table '" + std::string(name) + "' is missing");
    return it->second;
}

const Coefficient& CoefficientSet::entry(std::string_view table_name, std::string_view name) const {
    for (const Coefficient& c : table(table_name))
        if (c.name == name) return c;
    throw InputError("coefficient '" + std::string(name) + "' is missing from table " + std::string(table_name));
}

}
