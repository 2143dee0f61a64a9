#ifndef MULTIPHASE_EXPRESSION_HPP
#define MULTIPHASE_EXPRESSION_HPP

#include <array>
#include <memory>
#include <string>
#include <string_view>

namespace multiphase {

/// Variables an expression may reference, in evaluation-slot order.
enum class Variable { x1 = 0, x2, t, z1, z2 };
inline constexpr int kVariableCount = 5;

using VariableValues = std::array<double, kVariableCount>;

struct ExpressionNode;

/// Compiled arithmetic expression over x1, x2, t, z1, z2.
///
/// Grammar: + - * / ^ (right associative), unary minus, parentheses,
/// numeric literals, the constant `pi`, and the functions
/// sin cos exp abs sqrt log (one argument) and min max (two arguments).
/// Immutable after parsing; safe to evaluate concurrently.
class Expression {
public:
    static Expression parse(std::string_view text);

    double evaluate(const VariableValues& vars) const;
    double operator()(double x1, double x2) const { return evaluate({x1, x2, 0.0, 0.0, 0.0}); }

    bool uses(Variable v) const { return used_[static_cast<int>(v)]; }
    const std::string& text() const { return text_; }

private:
    std::shared_ptr<const ExpressionNode> root_;
    std::array<bool, kVariableCount> used_{};
    std::string text_;
};

} // namespace multiphase

#endif
