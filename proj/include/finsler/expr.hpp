#pragma once

// Small arithmetic expression grammar for scenario files: + - * /, unary
// minus, parentheses, numeric literals, named variables, and the functions
// sin, cos, sqrt, pow (exponent must be a literal).  Evaluation is templated
// over the scalar so expressions differentiate through dual numbers.

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "finsler/dual.hpp"
#include "finsler/errors.hpp"

namespace finsler {

class Expr {
 public:
    // `vars` lists the variable names that may appear, e.g. {"x1","x2","x3"}.
    static Expr parse(const std::string& src, const std::vector<std::string>& vars);

    template <class S>
    S eval(std::span<const S> vars) const { return eval_node<S>(root_, vars); }

    // Original text; reserializing a loaded scenario keeps literals bit-exact.
    const std::string& source() const { return src_; }

 private:
    enum class Op { kLit, kVar, kAdd, kSub, kMul, kDiv, kNeg, kSin, kCos, kSqrt, kPow };
    struct Node { Op op; int a = -1, b = -1; double lit = 0.0; int var = -1; };

    template <class S>
    S eval_node(int idx, std::span<const S> vars) const
    {
        const Node& n = nodes_[idx];
        switch (n.op) {
            case Op::kLit: return S(n.lit);
            case Op::kVar: return vars[n.var];
            case Op::kAdd: return eval_node<S>(n.a, vars) + eval_node<S>(n.b, vars);
            case Op::kSub: return eval_node<S>(n.a, vars) - eval_node<S>(n.b, vars);
            case Op::kMul: return eval_node<S>(n.a, vars) * eval_node<S>(n.b, vars);
            case Op::kDiv: return eval_node<S>(n.a, vars) / eval_node<S>(n.b, vars);
            case Op::kNeg: return -eval_node<S>(n.a, vars);
            case Op::kSin: return sin(eval_node<S>(n.a, vars));
            case Op::kCos: return cos(eval_node<S>(n.a, vars));
            case Op::kSqrt: return sqrt(eval_node<S>(n.a, vars));
            case Op::kPow: return pow(eval_node<S>(n.a, vars), n.lit);
        }
        throw UsageError("expr: corrupt node");
    }

    struct Parser;
    std::vector<Node> nodes_;
    int root_ = -1;
    std::string src_;
};

}  // namespace finsler
