#pragma once

#include <memory>
#include <string>

namespace cloaksim {

/// Values bound to the variable names an expression may use.
struct ExprVariables {
    double x = 0.0;
    double y = 0.0;
    double r = 0.0;
    double theta = 0.0;
    double t = 0.0;
    double k = 0.0;
};

/// Arithmetic expression over x, y, r, theta, t, k and pi: + - * / ^, unary minus, parentheses,
/// and sin cos tan exp log sqrt abs tanh. Parsed once, evaluated many times; evaluation is
/// thread-safe.
class Expression {
public:
    /// Throws PreconditionError with the offending position on a syntax error.
    static Expression parse(const std::string& text);

    double operator()(const ExprVariables& vars) const;
    const std::string& text() const { return text_; }
    /// True when the expression mentions `name`.
    bool uses(const std::string& name) const;

    struct Node;

private:
    std::string text_;
    std::shared_ptr<const Node> root_;
};

}  // namespace cloaksim
