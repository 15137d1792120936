#include "finsler/expr.hpp"

#include <cctype>
#include <cstdlib>

namespace finsler {

struct Expr::Parser {
    const std::string& s;
    size_t pos = 0;
    const std::vector<std::string>& vars;
    std::vector<Node>& nodes;

    void skip_ws() { while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos; }

    bool eat(char c)
    {
        skip_ws();
        if (pos < s.size() && s[pos] == c) { ++pos; return true; }
        return false;
    }

    [[noreturn]] void fail(const std::string& what)
    { throw UsageError("expr: " + what + " at position " + std::to_string(pos) + " in \"" + s + "\""); }

    int add(Node n) { nodes.push_back(n); return static_cast<int>(nodes.size()) - 1; }

    int parse_expr()
    {
        int lhs = parse_term();
        for (;;) {
            if (eat('+')) lhs = add({Op::kAdd, lhs, parse_term()});
            else if (eat('-')) lhs = add({Op::kSub, lhs, parse_term()});
            else return lhs;
        }
    }

    int parse_term()
    {
        int lhs = parse_factor();
        for (;;) {
            if (eat('*')) lhs = add({Op::kMul, lhs, parse_factor()});
            else if (eat('/')) lhs = add({Op::kDiv, lhs, parse_factor()});
            else return lhs;
        }
    }

    int parse_factor()
    {
        skip_ws();
        if (eat('-')) return add({Op::kNeg, parse_factor()});
        if (eat('+')) return parse_factor();
        return parse_primary();
    }

    int parse_primary()
    {
        skip_ws();
        if (pos >= s.size()) fail("unexpected end");
        char c = s[pos];
        if (c == '(') {
            ++pos;
            int e = parse_expr();
            if (!eat(')')) fail("missing ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s.c_str() + pos;
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            if (end == begin) fail("bad number");
            pos += static_cast<size_t>(end - begin);
            Node n{Op::kLit};
            n.lit = v;
            return add(n);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos;
            while (pos < s.size() &&
                   (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
                ++pos;
            std::string name = s.substr(start, pos - start);
            if (name == "sin" || name == "cos" || name == "sqrt" || name == "pow") {
                if (!eat('(')) fail("missing '(' after " + name);
                int a = parse_expr();
                if (name == "pow") {
                    if (!eat(',')) fail("pow needs two arguments");
                    skip_ws();
                    // the exponent must be a (possibly signed) literal
                    double sign = 1.0;
                    while (eat('-')) sign = -sign;
                    size_t save = pos;
                    const char* begin = s.c_str() + pos;
                    char* end = nullptr;
                    double p = std::strtod(begin, &end);
                    if (end == begin) { pos = save; fail("pow exponent must be a numeric literal"); }
                    pos += static_cast<size_t>(end - begin);
                    if (!eat(')')) fail("missing ')'");
                    Node n{Op::kPow, a};
                    n.lit = sign * p;
                    return add(n);
                }
                if (!eat(')')) fail("missing ')'");
                if (name == "sin") return add({Op::kSin, a});
                if (name == "cos") return add({Op::kCos, a});
                return add({Op::kSqrt, a});
            }
            for (size_t i = 0; i < vars.size(); ++i) {
                if (vars[i] == name) {
                    Node n{Op::kVar};
                    n.var = static_cast<int>(i);
                    return add(n);
                }
            }
            fail("unknown symbol '" + name + "'");
        }
        fail(std::string("unexpected character '") + c + "'");
    }
};

Expr Expr::parse(const std::string& src, const std::vector<std::string>& vars)
{
    Expr e;
    e.src_ = src;
    Parser p{src, 0, vars, e.nodes_};
    e.root_ = p.parse_expr();
    p.skip_ws();
    if (p.pos != src.size()) p.fail("trailing input");
    return e;
}

}  // namespace finsler
