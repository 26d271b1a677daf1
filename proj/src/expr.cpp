#include "finslerlab/expr.hpp"

#include <charconv>
#include <cmath>
#include <set>

namespace finslerlab {

namespace {

using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Op op, NodePtr l = nullptr, NodePtr r = nullptr) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
}

bool is_ident_start(char c) { return c >= 'a' && c <= 'z'; }
bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9') || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    NodePtr run() {
        skip();
        if (pos_ >= s_.size()) throw SyntaxError(pos_, "expression");
        NodePtr e = expr();
        skip();
        if (pos_ < s_.size()) throw SyntaxError(pos_, "operator or end of input");
        return e;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;

    void skip() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r'))
            ++pos_;
    }
    bool peek(char c) {
        skip();
        return pos_ < s_.size() && s_[pos_] == c;
    }
    void expect(char c) {
        if (!peek(c)) throw SyntaxError(pos_, std::string("'") + c + "'");
        ++pos_;
    }

    NodePtr expr() {
        NodePtr l = term();
        for (;;) {
            if (peek('+')) {
                ++pos_;
                l = make(Op::add, l, term());
            } else if (peek('-')) {
                ++pos_;
                l = make(Op::sub, l, term());
            } else {
                return l;
            }
        }
    }

    NodePtr term() {
        NodePtr l = unary();
        for (;;) {
            if (peek('*')) {
                ++pos_;
                l = make(Op::mul, l, unary());
            } else if (peek('/')) {
                ++pos_;
                l = make(Op::div, l, unary());
            } else {
                return l;
            }
        }
    }

    NodePtr unary() {
        if (peek('-')) {
            ++pos_;
            return make(Op::neg, unary());
        }
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (!peek('^')) return base;
        ++pos_;
        auto [k, half] = exponent();
        auto n = std::make_shared<Node>();
        n->op = Op::pow;
        n->lhs = base;
        n->exponent = k;
        n->half = half;
        if (peek('^')) throw SyntaxError(pos_, "parenthesized base for repeated '^'");
        return n;
    }

    // integer, -integer, (integer), (-integer) or (3/2)
    std::pair<int, bool> exponent() {
        skip();
        std::size_t at = pos_;
        bool paren = false;
        if (peek('(')) {
            ++pos_;
            paren = true;
        }
        bool neg = false;
        if (peek('-')) {
            ++pos_;
            neg = true;
        }
        skip();
        std::size_t start = pos_;
        while (pos_ < s_.size() && is_digit(s_[pos_])) ++pos_;
        if (start == pos_) throw SyntaxError(start, "integer or 3/2 exponent");
        int k = 0;
        std::from_chars(s_.data() + start, s_.data() + pos_, k);
        bool half = false;
        if (paren && peek('/')) {
            ++pos_;
            skip();
            std::size_t ds = pos_;
            while (pos_ < s_.size() && is_digit(s_[pos_])) ++pos_;
            int den = 0;
            std::from_chars(s_.data() + ds, s_.data() + pos_, den);
            if (ds == pos_ || den != 2 || k != 3 || neg) throw SyntaxError(at, "integer or 3/2 exponent");
            half = true;
        }
        if (paren) expect(')');
        if (!paren && pos_ < s_.size() && (s_[pos_] == '.' || s_[pos_] == 'e' || s_[pos_] == 'E'))
            throw SyntaxError(at, "integer or 3/2 exponent");
        return {neg ? -k : k, half};
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) throw SyntaxError(pos_, "operand");
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            expect(')');
            return e;
        }
        if (is_digit(c) || c == '.') return number();
        if (is_ident_start(c)) return identifier();
        throw SyntaxError(pos_, "operand");
    }

    NodePtr number() {
        std::size_t start = pos_;
        while (pos_ < s_.size() && (is_digit(s_[pos_]) || s_[pos_] == '.')) ++pos_;
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            if (pos_ < s_.size() && is_digit(s_[pos_])) {
                while (pos_ < s_.size() && is_digit(s_[pos_])) ++pos_;
            } else {
                pos_ = save;
            }
        }
        double v = 0.0;
        auto res = std::from_chars(s_.data() + start, s_.data() + pos_, v);
        if (res.ec != std::errc() || res.ptr != s_.data() + pos_) throw SyntaxError(start, "number");
        auto n = std::make_shared<Node>();
        n->op = Op::number;
        n->number = v;
        return n;
    }

    NodePtr identifier() {
        std::size_t start = pos_;
        while (pos_ < s_.size() && is_ident_char(s_[pos_])) ++pos_;
        std::string name(s_.substr(start, pos_ - start));
        if (peek('(')) {
            if (name != "sqrt") throw UnknownIdentifier(name);
            ++pos_;
            NodePtr arg = expr();
            expect(')');
            return make(Op::sqrt, arg);
        }
        auto n = std::make_shared<Node>();
        if (name.size() > 1 && name[0] == 'x' && name[1] >= '1' && name[1] <= '9' &&
            name.find_first_not_of("0123456789", 1) == std::string::npos) {
            n->op = Op::coord;
            n->coord = std::stoi(name.substr(1)) - 1;
        } else if (name == "sqrt") {
            throw SyntaxError(pos_, "'(' after sqrt");
        } else {
            n->op = Op::param;
            n->name = std::move(name);
        }
        return n;
    }
};

std::string fmt_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void unparse(const Node& n, std::string& out) {
    auto bin = [&](const char* op) {
        out += '(';
        unparse(*n.lhs, out);
        out += op;
        unparse(*n.rhs, out);
        out += ')';
    };
    switch (n.op) {
    case Op::number: out += fmt_number(n.number); break;
    case Op::coord: out += "x" + std::to_string(n.coord + 1); break;
    case Op::param: out += n.name; break;
    case Op::add: bin(" + "); break;
    case Op::sub: bin(" - "); break;
    case Op::mul: bin("*"); break;
    case Op::div: bin("/"); break;
    case Op::neg:
        out += "(-";
        unparse(*n.lhs, out);
        out += ')';
        break;
    case Op::sqrt:
        out += "sqrt(";
        unparse(*n.lhs, out);
        out += ')';
        break;
    case Op::pow:
        out += '(';
        unparse(*n.lhs, out);
        out += ")^";
        if (n.half)
            out += "(3/2)";
        else if (n.exponent < 0)
            out += "(" + std::to_string(n.exponent) + ")";
        else
            out += std::to_string(n.exponent);
        break;
    }
}

bool same(const Node& a, const Node& b) {
    if (a.op != b.op) return false;
    switch (a.op) {
    case Op::number: return a.number == b.number;
    case Op::coord: return a.coord == b.coord;
    case Op::param: return a.name == b.name;
    case Op::pow: return a.exponent == b.exponent && a.half == b.half && same(*a.lhs, *b.lhs);
    case Op::neg:
    case Op::sqrt: return same(*a.lhs, *b.lhs);
    default: return same(*a.lhs, *b.lhs) && same(*a.rhs, *b.rhs);
    }
}

template <class F>
void visit(const Node& n, F&& f) {
    f(n);
    if (n.lhs) visit(*n.lhs, f);
    if (n.rhs) visit(*n.rhs, f);
}

double param_value(const Node& n, const Params& params) {
    auto it = params.find(n.name);
    if (it == params.end()) throw UnboundParameter(n.name);
    return it->second;
}

double eval_node(const Node& n, std::span<const double> x, const Params& p) {
    switch (n.op) {
    case Op::number: return n.number;
    case Op::coord:
        if (n.coord >= static_cast<int>(x.size())) throw UnknownIdentifier("x" + std::to_string(n.coord + 1));
        return x[n.coord];
    case Op::param: return param_value(n, p);
    case Op::add: return eval_node(*n.lhs, x, p) + eval_node(*n.rhs, x, p);
    case Op::sub: return eval_node(*n.lhs, x, p) - eval_node(*n.rhs, x, p);
    case Op::mul: return eval_node(*n.lhs, x, p) * eval_node(*n.rhs, x, p);
    case Op::div: {
        double d = eval_node(*n.rhs, x, p);
        if (d == 0.0) throw DomainError("division by zero");
        return eval_node(*n.lhs, x, p) / d;
    }
    case Op::neg: return -eval_node(*n.lhs, x, p);
    case Op::sqrt: {
        double v = eval_node(*n.lhs, x, p);
        if (v < 0.0) throw DomainError("square root of a negative value");
        return std::sqrt(v);
    }
    case Op::pow: {
        double v = eval_node(*n.lhs, x, p);
        if (n.half) {
            if (v < 0.0) throw DomainError("fractional power of a negative value");
            return v * std::sqrt(v);
        }
        if (v == 0.0 && n.exponent < 0) throw DomainError("division by zero");
        return std::pow(v, n.exponent);
    }
    }
    return 0.0;
}

Jet2 jet_node(const Node& n, std::span<const double> x, const Params& p) {
    int dim = static_cast<int>(x.size());
    switch (n.op) {
    case Op::number: return Jet2(dim, n.number);
    case Op::coord:
        if (n.coord >= dim) throw UnknownIdentifier("x" + std::to_string(n.coord + 1));
        return Jet2::variable(dim, n.coord, x[n.coord]);
    case Op::param: return Jet2(dim, param_value(n, p));
    case Op::add: return jet_node(*n.lhs, x, p) + jet_node(*n.rhs, x, p);
    case Op::sub: return jet_node(*n.lhs, x, p) - jet_node(*n.rhs, x, p);
    case Op::mul: return jet_node(*n.lhs, x, p) * jet_node(*n.rhs, x, p);
    case Op::div: return jet_node(*n.lhs, x, p) / jet_node(*n.rhs, x, p);
    case Op::neg: return -jet_node(*n.lhs, x, p);
    case Op::sqrt: return sqrt(jet_node(*n.lhs, x, p));
    case Op::pow: {
        Jet2 u = jet_node(*n.lhs, x, p);
        return n.half ? pow32(u) : pow(u, n.exponent);
    }
    }
    return Jet2(dim, 0.0);
}

}

Expression::Expression() : root_(std::make_shared<Node>()) {}

Expression::Expression(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

std::string Expression::unparse() const {
    std::string out;
    finslerlab::unparse(*root_, out);
    return out;
}

int Expression::coordinate_count() const {
    int m = 0;
    visit(*root_, [&](const Node& n) {
        if (n.op == Op::coord) m = std::max(m, n.coord + 1);
    });
    return m;
}

std::vector<std::string> Expression::parameters() const {
    std::set<std::string> names;
    visit(*root_, [&](const Node& n) {
        if (n.op == Op::param) names.insert(n.name);
    });
    return {names.begin(), names.end()};
}

bool Expression::is_constant() const { return coordinate_count() == 0; }

bool operator==(const Expression& a, const Expression& b) { return same(*a.root_, *b.root_); }

Expression parse(std::string_view text) { return Expression(Parser(text).run()); }

void check_identifiers(const Expression& e, int n, const Params& params) {
    visit(e.root(), [&](const Node& nd) {
        if (nd.op == Op::coord && nd.coord >= n) throw UnknownIdentifier("x" + std::to_string(nd.coord + 1));
        if (nd.op == Op::param && params.find(nd.name) == params.end()) throw UnknownIdentifier(nd.name);
    });
}

double eval(const Expression& e, std::span<const double> x, const Params& params) {
    return eval_node(e.root(), x, params);
}

Jet2 eval_jet2(const Expression& e, std::span<const double> x, const Params& params) {
    return jet_node(e.root(), x, params);
}

}
