#include "multiphase/expression.hpp"

#include "multiphase/types.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

namespace multiphase {

enum class NodeKind { number, variable, negate, add, sub, mul, div, pow, call1, call2 };
enum class Function { sin, cos, exp, abs, sqrt, log, min, max };

struct ExpressionNode {
    NodeKind kind = NodeKind::number;
    double value = 0.0;
    int slot = 0;
    Function fn = Function::sin;
    std::shared_ptr<const ExpressionNode> lhs;
    std::shared_ptr<const ExpressionNode> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const ExpressionNode>;

NodePtr make_node(NodeKind kind, NodePtr lhs = nullptr, NodePtr rhs = nullptr)
{
    auto node = std::make_shared<ExpressionNode>();
    node->kind = kind;
    node->lhs = std::move(lhs);
    node->rhs = std::move(rhs);
    return node;
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    NodePtr parse_all(std::array<bool, kVariableCount>& used)
    {
        used_ = &used;
        NodePtr root = parse_sum();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected character");
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& what) const
    {
        throw ContractError("expression error at offset " + std::to_string(pos_) + ": " + what +
                            " in \"" + std::string(text_) + "\"");
    }

    void skip_space()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c)
    {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    NodePtr parse_sum()
    {
        NodePtr node = parse_product();
        for (;;) {
            if (accept('+'))
                node = make_node(NodeKind::add, node, parse_product());
            else if (accept('-'))
                node = make_node(NodeKind::sub, node, parse_product());
            else
                return node;
        }
    }

    NodePtr parse_product()
    {
        NodePtr node = parse_unary();
        for (;;) {
            if (accept('*'))
                node = make_node(NodeKind::mul, node, parse_unary());
            else if (accept('/'))
                node = make_node(NodeKind::div, node, parse_unary());
            else
                return node;
        }
    }

    NodePtr parse_unary()
    {
        if (accept('-')) return make_node(NodeKind::negate, parse_unary());
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    NodePtr parse_power()
    {
        NodePtr base = parse_primary();
        if (accept('^')) return make_node(NodeKind::pow, base, parse_unary());
        return base;
    }

    NodePtr parse_primary()
    {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        const char c = text_[pos_];
        if (accept('(')) {
            NodePtr inner = parse_sum();
            expect(')');
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
        fail("unexpected character");
    }

    NodePtr parse_number()
    {
        const std::string rest(text_.substr(pos_));
        std::size_t consumed = 0;
        double value = 0.0;
        try {
            value = std::stod(rest, &consumed);
        } catch (const std::exception&) {
            fail("malformed number");
        }
        pos_ += consumed;
        auto node = std::make_shared<ExpressionNode>();
        node->kind = NodeKind::number;
        node->value = value;
        return node;
    }

    NodePtr parse_identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string name(text_.substr(start, pos_ - start));

        static const std::vector<std::pair<std::string, Variable>> variables = {
            {"x1", Variable::x1}, {"x2", Variable::x2}, {"t", Variable::t},
            {"z1", Variable::z1}, {"z2", Variable::z2}};
        for (const auto& [var_name, var] : variables) {
            if (name == var_name) {
                auto node = std::make_shared<ExpressionNode>();
                node->kind = NodeKind::variable;
                node->slot = static_cast<int>(var);
                (*used_)[node->slot] = true;
                return node;
            }
        }
        if (name == "pi") {
            auto node = std::make_shared<ExpressionNode>();
            node->value = std::numbers::pi;
            return node;
        }

        static const std::vector<std::pair<std::string, Function>> unary = {
            {"sin", Function::sin}, {"cos", Function::cos},   {"exp", Function::exp},
            {"abs", Function::abs}, {"sqrt", Function::sqrt}, {"log", Function::log}};
        for (const auto& [fn_name, fn] : unary) {
            if (name == fn_name) {
                expect('(');
                auto node = std::make_shared<ExpressionNode>();
                node->kind = NodeKind::call1;
                node->fn = fn;
                node->lhs = parse_sum();
                expect(')');
                return node;
            }
        }
        if (name == "min" || name == "max") {
            expect('(');
            auto node = std::make_shared<ExpressionNode>();
            node->kind = NodeKind::call2;
            node->fn = name == "min" ? Function::min : Function::max;
            node->lhs = parse_sum();
            expect(',');
            node->rhs = parse_sum();
            expect(')');
            return node;
        }
        pos_ = start;
        fail("unknown identifier '" + name + "'");
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::array<bool, kVariableCount>* used_ = nullptr;
};

double eval_node(const ExpressionNode& n, const VariableValues& vars)
{
    switch (n.kind) {
    case NodeKind::number:
        return n.value;
    case NodeKind::variable:
        return vars[n.slot];
    case NodeKind::negate:
        return -eval_node(*n.lhs, vars);
    case NodeKind::add:
        return eval_node(*n.lhs, vars) + eval_node(*n.rhs, vars);
    case NodeKind::sub:
        return eval_node(*n.lhs, vars) - eval_node(*n.rhs, vars);
    case NodeKind::mul:
        return eval_node(*n.lhs, vars) * eval_node(*n.rhs, vars);
    case NodeKind::div:
        return eval_node(*n.lhs, vars) / eval_node(*n.rhs, vars);
    case NodeKind::pow:
        return std::pow(eval_node(*n.lhs, vars), eval_node(*n.rhs, vars));
    case NodeKind::call1: {
        const double a = eval_node(*n.lhs, vars);
        switch (n.fn) {
        case Function::sin: return std::sin(a);
        case Function::cos: return std::cos(a);
        case Function::exp: return std::exp(a);
        case Function::abs: return std::abs(a);
        case Function::sqrt: return std::sqrt(a);
        case Function::log: return std::log(a);
        default: break;
        }
        break;
    }
    case NodeKind::call2: {
        const double a = eval_node(*n.lhs, vars);
        const double b = eval_node(*n.rhs, vars);
        return n.fn == Function::min ? std::min(a, b) : std::max(a, b);
    }
    }
    return std::nan("");
}

} // namespace

Expression Expression::parse(std::string_view text)
{
    Expression expr;
    expr.text_ = std::string(text);
    Parser parser(text);
    expr.root_ = parser.parse_all(expr.used_);
    return expr;
}

double Expression::evaluate(const VariableValues& vars) const
{
    return eval_node(*root_, vars);
}

} // namespace multiphase
