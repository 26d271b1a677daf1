#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "finslerlab/jet2.hpp"

namespace finslerlab {

using Params = std::map<std::string, double, std::less<>>;

enum class Op { number, coord, param, add, sub, mul, div, neg, pow, sqrt };

struct Node {
    Op op = Op::number;
    double number = 0.0;
    int coord = 0;       // zero-based coordinate index
    std::string name;    // parameter name
    int exponent = 0;    // integer exponent, or 3 with half set
    bool half = false;   // exponent is 3/2
    std::shared_ptr<const Node> lhs, rhs;
};

// immutable expression tree; copies share structure
class Expression {
public:
    Expression();
    explicit Expression(std::shared_ptr<const Node> root);

    const Node& root() const { return *root_; }
    std::string unparse() const;

    // highest coordinate index used plus one
    int coordinate_count() const;
    std::vector<std::string> parameters() const;
    bool is_constant() const;

    friend bool operator==(const Expression& a, const Expression& b);

private:
    std::shared_ptr<const Node> root_;
};

Expression parse(std::string_view text);

// throws UnknownIdentifier for coordinates beyond n or names missing from params
void check_identifiers(const Expression& e, int n, const Params& params);

double eval(const Expression& e, std::span<const double> x, const Params& params);
Jet2 eval_jet2(const Expression& e, std::span<const double> x, const Params& params);

}
