#include "cloaksim/expr.hpp"

#include "cloaksim/errors.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

namespace cloaksim {

struct Expression::Node {
    enum Kind { Number, Variable, Negate, Add, Sub, Mul, Div, Pow, Call } kind = Number;
    double value = 0.0;
    std::string name;
    std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Node = Expression::Node;

const char* const kVariables[] = {"x", "y", "r", "theta", "t", "k"};
const char* const kFunctions[] = {"sin", "cos", "tan", "exp", "log", "sqrt", "abs", "tanh"};

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr parse() {
        auto n = sum();
        skip();
        if (pos_ != s_.size()) fail("unexpected character");
        return n;
    }

private:
    const std::string& s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw PreconditionError("expression '" + s_ + "': " + what + " at position " +
                                std::to_string(pos_));
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    static NodePtr make(Node::Kind kind, std::vector<NodePtr> args) {
        auto n = std::make_shared<Node>();
        n->kind = kind;
        n->args = std::move(args);
        return n;
    }

    NodePtr sum() {
        auto lhs = product();
        for (;;) {
            if (accept('+')) lhs = make(Node::Add, {lhs, product()});
            else if (accept('-')) lhs = make(Node::Sub, {lhs, product()});
            else return lhs;
        }
    }

    NodePtr product() {
        auto lhs = unary();
        for (;;) {
            if (accept('*')) lhs = make(Node::Mul, {lhs, unary()});
            else if (accept('/')) lhs = make(Node::Div, {lhs, unary()});
            else return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make(Node::Negate, {unary()});
        if (accept('+')) return unary();
        return power();
    }

    // Right associative; binds tighter than unary minus on its left: -x^2 = -(x^2).
    NodePtr power() {
        auto base = primary();
        if (accept('^')) return make(Node::Pow, {base, unary()});
        return base;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end");
        const char c = s_[pos_];
        if (accept('(')) {
            auto n = sum();
            if (!accept(')')) fail("expected ')'");
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return word();
        fail("unexpected character");
    }

    NodePtr number() {
        const char* begin = s_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("bad number");
        pos_ += static_cast<std::size_t>(end - begin);
        auto n = std::make_shared<Node>();
        n->kind = Node::Number;
        n->value = v;
        return n;
    }

    NodePtr word() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            ++pos_;
        const std::string id = s_.substr(start, pos_ - start);
        auto n = std::make_shared<Node>();
        n->name = id;
        if (id == "pi") {
            n->kind = Node::Number;
            n->value = std::numbers::pi;
            return n;
        }
        for (const char* v : kVariables)
            if (id == v) {
                n->kind = Node::Variable;
                return n;
            }
        for (const char* f : kFunctions)
            if (id == f) {
                if (!accept('(')) fail("expected '(' after " + id);
                n->kind = Node::Call;
                n->args.push_back(sum());
                if (!accept(')')) fail("expected ')'");
                return n;
            }
        pos_ = start;
        fail("unknown identifier '" + id + "'");
    }
};

double variable(const std::string& name, const ExprVariables& v) {
    switch (name[0]) {
    case 'x': return v.x;
    case 'y': return v.y;
    case 'r': return v.r;
    case 't': return name.size() == 1 ? v.t : v.theta;
    default: return v.k;
    }
}

double call(const std::string& f, double a) {
    if (f == "sin") return std::sin(a);
    if (f == "cos") return std::cos(a);
    if (f == "tan") return std::tan(a);
    if (f == "exp") return std::exp(a);
    if (f == "log") return std::log(a);
    if (f == "sqrt") return std::sqrt(a);
    if (f == "abs") return std::abs(a);
    return std::tanh(a);
}

double eval(const Node& n, const ExprVariables& v) {
    switch (n.kind) {
    case Node::Number: return n.value;
    case Node::Variable: return variable(n.name, v);
    case Node::Negate: return -eval(*n.args[0], v);
    case Node::Add: return eval(*n.args[0], v) + eval(*n.args[1], v);
    case Node::Sub: return eval(*n.args[0], v) - eval(*n.args[1], v);
    case Node::Mul: return eval(*n.args[0], v) * eval(*n.args[1], v);
    case Node::Div: return eval(*n.args[0], v) / eval(*n.args[1], v);
    case Node::Pow: return std::pow(eval(*n.args[0], v), eval(*n.args[1], v));
    case Node::Call: return call(n.name, eval(*n.args[0], v));
    }
    return 0.0;
}

bool mentions(const Node& n, const std::string& name) {
    if (n.kind == Node::Variable && n.name == name) return true;
    for (const auto& a : n.args)
        if (mentions(*a, name)) return true;
    return false;
}

}  // namespace

Expression Expression::parse(const std::string& text) {
    Expression e;
    e.text_ = text;
    e.root_ = Parser(text).parse();
    return e;
}

double Expression::operator()(const ExprVariables& vars) const { return eval(*root_, vars); }

bool Expression::uses(const std::string& name) const { return mentions(*root_, name); }

}  // namespace cloaksim
