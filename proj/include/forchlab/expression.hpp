#pragma once

/**
 * @file expression.hpp
 * @brief Minimal arithmetic expression language for field and boundary data.
 *
 * Grammar: +, -, *, /, ^ (right associative), unary minus, parentheses,
 * functions sin, cos, exp, ln, sqrt, abs, min(a,b), max(a,b), variables
 * x, y, t and the constant pi. Parsed once into a small AST, evaluated
 * many times while sampling onto grids.
 */

#include <cctype>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace forchlab {

struct ExprError : std::runtime_error {
    size_t position;
    ExprError(const std::string& msg, size_t pos)
        : std::runtime_error(msg + " (at column " + std::to_string(pos + 1) + ")"),
          position(pos) {}
};

class Expression {
public:
    Expression() = default;

    static Expression parse(const std::string& text) {
        Parser p{text, 0};
        Expression e;
        e.text_ = text;
        e.root_ = p.parse_expr();
        p.skip_ws();
        if (p.pos != text.size())
            throw ExprError("unexpected trailing input", p.pos);
        return e;
    }

    double eval(double x, double y = 0.0, double t = 0.0) const {
        if (!root_) throw std::logic_error("Expression: eval on empty expression");
        return eval_node(*root_, x, y, t);
    }

    bool empty() const { return !root_; }
    const std::string& text() const { return text_; }

private:
    enum class Op {
        num, var_x, var_y, var_t,
        add, sub, mul, div, pow, neg,
        sin, cos, exp, ln, sqrt, abs,
        min, max
    };

    struct Node {
        Op op;
        double value = 0.0;
        std::unique_ptr<Node> a, b;
    };
    using NodePtr = std::unique_ptr<Node>;

    std::string text_;
    std::shared_ptr<Node> root_;  // shared so Expression copies cheaply

    static double eval_node(const Node& n, double x, double y, double t) {
        switch (n.op) {
            case Op::num: return n.value;
            case Op::var_x: return x;
            case Op::var_y: return y;
            case Op::var_t: return t;
            case Op::add: return eval_node(*n.a, x, y, t) + eval_node(*n.b, x, y, t);
            case Op::sub: return eval_node(*n.a, x, y, t) - eval_node(*n.b, x, y, t);
            case Op::mul: return eval_node(*n.a, x, y, t) * eval_node(*n.b, x, y, t);
            case Op::div: return eval_node(*n.a, x, y, t) / eval_node(*n.b, x, y, t);
            case Op::pow: return std::pow(eval_node(*n.a, x, y, t), eval_node(*n.b, x, y, t));
            case Op::neg: return -eval_node(*n.a, x, y, t);
            case Op::sin: return std::sin(eval_node(*n.a, x, y, t));
            case Op::cos: return std::cos(eval_node(*n.a, x, y, t));
            case Op::exp: return std::exp(eval_node(*n.a, x, y, t));
            case Op::ln: return std::log(eval_node(*n.a, x, y, t));
            case Op::sqrt: return std::sqrt(eval_node(*n.a, x, y, t));
            case Op::abs: return std::fabs(eval_node(*n.a, x, y, t));
            case Op::min: return std::min(eval_node(*n.a, x, y, t), eval_node(*n.b, x, y, t));
            case Op::max: return std::max(eval_node(*n.a, x, y, t), eval_node(*n.b, x, y, t));
        }
        return 0.0;
    }

    struct Parser {
        const std::string& s;
        size_t pos;

        void skip_ws() {
            while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
        }
        bool eat(char c) {
            skip_ws();
            if (pos < s.size() && s[pos] == c) { ++pos; return true; }
            return false;
        }
        char peek() {
            skip_ws();
            return pos < s.size() ? s[pos] : '\0';
        }

        NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
            auto n = std::make_unique<Node>();
            n->op = op;
            n->a = std::move(a);
            n->b = std::move(b);
            return n;
        }

        // expr := term (('+'|'-') term)*
        std::shared_ptr<Node> parse_expr() {
            NodePtr n = parse_term();
            for (;;) {
                if (eat('+')) n = make(Op::add, std::move(n), parse_term());
                else if (eat('-')) n = make(Op::sub, std::move(n), parse_term());
                else break;
            }
            return std::shared_ptr<Node>(std::move(n));
        }

        // term := unary (('*'|'/') unary)*
        NodePtr parse_term() {
            NodePtr n = parse_unary();
            for (;;) {
                if (eat('*')) n = make(Op::mul, std::move(n), parse_unary());
                else if (eat('/')) n = make(Op::div, std::move(n), parse_unary());
                else break;
            }
            return n;
        }

        // unary := '-' unary | power
        NodePtr parse_unary() {
            if (eat('-')) return make(Op::neg, parse_unary());
            return parse_power();
        }

        // power := atom ('^' unary)?   (right associative, binds above unary minus)
        NodePtr parse_power() {
            NodePtr base = parse_atom();
            if (eat('^')) {
                NodePtr exponent = eat('-') ? make(Op::neg, parse_power()) : parse_power();
                return make(Op::pow, std::move(base), std::move(exponent));
            }
            return base;
        }

        NodePtr parse_atom() {
            skip_ws();
            if (pos >= s.size()) throw ExprError("unexpected end of expression", pos);
            const char c = s[pos];
            if (c == '(') {
                ++pos;
                NodePtr inner(parse_expr_raw());
                if (!eat(')')) throw ExprError("missing ')'", pos);
                return inner;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
            if (std::isalpha(static_cast<unsigned char>(c))) return parse_name();
            throw ExprError(std::string("unexpected character '") + c + "'", pos);
        }

        NodePtr parse_expr_raw() {
            NodePtr n = parse_term();
            for (;;) {
                if (eat('+')) n = make(Op::add, std::move(n), parse_term());
                else if (eat('-')) n = make(Op::sub, std::move(n), parse_term());
                else break;
            }
            return n;
        }

        NodePtr parse_number() {
            size_t start = pos;
            while (pos < s.size() &&
                   (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.' ||
                    s[pos] == 'e' || s[pos] == 'E' ||
                    ((s[pos] == '+' || s[pos] == '-') && pos > start &&
                     (s[pos - 1] == 'e' || s[pos - 1] == 'E'))))
                ++pos;
            try {
                auto n = make(Op::num);
                n->value = std::stod(s.substr(start, pos - start));
                return n;
            } catch (const std::exception&) {
                throw ExprError("malformed number", start);
            }
        }

        NodePtr parse_name() {
            size_t start = pos;
            while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
                ++pos;
            const std::string name = s.substr(start, pos - start);
            if (name == "x") return make(Op::var_x);
            if (name == "y") return make(Op::var_y);
            if (name == "t") return make(Op::var_t);
            if (name == "pi") {
                auto n = make(Op::num);
                n->value = 3.14159265358979323846;
                return n;
            }
            Op fn;
            if (name == "sin") fn = Op::sin;
            else if (name == "cos") fn = Op::cos;
            else if (name == "exp") fn = Op::exp;
            else if (name == "ln") fn = Op::ln;
            else if (name == "sqrt") fn = Op::sqrt;
            else if (name == "abs") fn = Op::abs;
            else if (name == "min") fn = Op::min;
            else if (name == "max") fn = Op::max;
            else throw ExprError("unknown name '" + name + "'", start);

            if (!eat('(')) throw ExprError("expected '(' after function name", pos);
            NodePtr a(parse_expr_raw());
            NodePtr b;
            if (fn == Op::min || fn == Op::max) {
                if (!eat(',')) throw ExprError("expected ',' in two-argument function", pos);
                b = parse_expr_raw();
            }
            if (!eat(')')) throw ExprError("missing ')'", pos);
            return make(fn, std::move(a), std::move(b));
        }
    };
};

}  // namespace forchlab
