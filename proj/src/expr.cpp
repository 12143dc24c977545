#include "isrm/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

#include "isrm/errors.hpp"

namespace isrm {

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;
using Op = Expr::Op;

NodePtr make(Op op, std::size_t offset, std::vector<NodePtr> args = {}, double value = 0.0, int var = 0) {
    auto n = std::make_shared<Expr::Node>();
    n->op = op;
    n->offset = offset;
    n->args = std::move(args);
    n->value = value;
    n->var = var;
    return n;
}

struct FunctionInfo {
    const char* name;
    Op op;
    int arity;
};

constexpr FunctionInfo kFunctions[] = {
    {"abs", Op::Abs, 1},   {"exp", Op::Exp, 1},  {"log", Op::Log, 1},   {"sqrt", Op::Sqrt, 1},
    {"sin", Op::Sin, 1},   {"cos", Op::Cos, 1},  {"min", Op::Min, 2},   {"max", Op::Max, 2},
    {"pow", Op::PowFn, 2}, {"indicator", Op::Indicator, 3},
};

const FunctionInfo* find_function(std::string_view name) {
    for (const auto& f : kFunctions)
        if (name == f.name) return &f;
    return nullptr;
}

const FunctionInfo* info_of(Op op) {
    for (const auto& f : kFunctions)
        if (f.op == op) return &f;
    return nullptr;
}

class Parser {
public:
    Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

    NodePtr run() {
        NodePtr e = expr();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected input", {"operator", "end of input"});
        return e;
    }

private:
    std::string_view text_;
    int dim_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what, std::vector<std::string> expected) const {
        throw SyntaxError(what, pos_, std::move(expected));
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'", {std::string(1, c)});
    }

    static NodePtr negate(NodePtr x, std::size_t offset) {
        // Folding keeps print/parse a round trip for negative constants.
        if (x->op == Op::Const) return make(Op::Const, offset, {}, -x->value);
        return make(Op::Neg, offset, {std::move(x)});
    }

    NodePtr expr() {
        NodePtr lhs = term();
        while (true) {
            skip_space();
            const std::size_t at = pos_;
            if (accept('+'))
                lhs = make(Op::Add, at, {lhs, term()});
            else if (accept('-'))
                lhs = make(Op::Sub, at, {lhs, term()});
            else
                return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        while (true) {
            skip_space();
            const std::size_t at = pos_;
            if (accept('*'))
                lhs = make(Op::Mul, at, {lhs, unary()});
            else if (accept('/'))
                lhs = make(Op::Div, at, {lhs, unary()});
            else
                return lhs;
        }
    }

    NodePtr unary() {
        skip_space();
        const std::size_t at = pos_;
        if (accept('-')) return negate(unary(), at);
        if (accept('+')) return unary();
        return power();
    }

    NodePtr exponent() {
        skip_space();
        const std::size_t at = pos_;
        if (accept('-')) return negate(exponent(), at);
        if (accept('+')) return exponent();
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        skip_space();
        const std::size_t at = pos_;
        if (accept('^')) return make(Op::Pow, at, {base, exponent()});
        return base;
    }

    NodePtr number() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
            if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
                pos_ = p;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            }
        }
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (ec != std::errc() || ptr != text_.data() + pos_ || !std::isfinite(v)) {
            pos_ = start;
            fail("malformed number", {"number"});
        }
        return make(Op::Const, start, {}, v);
    }

    NodePtr primary() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of input", {"number", "identifier", "("});
        const char c = text_[pos_];
        const std::size_t at = pos_;
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            expect(')');
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            const std::string_view name = text_.substr(at, pos_ - at);
            if (name == "pi") return make(Op::Const, at, {}, M_PI);
            if (name == "s" && dim_ == 1) return make(Op::Var, at, {}, 0.0, 0);
            if (name.size() >= 2 && name[0] == 's' &&
                std::all_of(name.begin() + 1, name.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
                int idx = 0;
                std::from_chars(name.data() + 1, name.data() + name.size(), idx);
                if (idx >= 1 && idx <= dim_) return make(Op::Var, at, {}, 0.0, idx - 1);
                throw UnknownIdentifier(std::string(name), at);
            }
            const FunctionInfo* fn = find_function(name);
            if (!fn) throw UnknownIdentifier(std::string(name), at);
            expect('(');
            std::vector<NodePtr> args{expr()};
            while (accept(',')) args.push_back(expr());
            if (static_cast<int>(args.size()) != fn->arity)
                fail(std::string(fn->name) + " takes " + std::to_string(fn->arity) + " argument(s)",
                     {fn->arity > static_cast<int>(args.size()) ? "," : ")"});
            expect(')');
            return make(fn->op, at, std::move(args));
        }
        fail("unexpected character", {"number", "identifier", "("});
    }
};

double checked(double v, const Expr::Node& n, const char* what = "non-finite result") {
    if (!std::isfinite(v)) throw EvalError(what, n.offset);
    return v;
}

double eval_node(const Expr::Node& n, const double* s, int dim) {
    auto arg = [&](int i) { return eval_node(*n.args[i], s, dim); };
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::Var:
            if (n.var >= dim) throw EvalError("variable s" + std::to_string(n.var + 1) + " not available", n.offset);
            return s[n.var];
        case Op::Neg: return -arg(0);
        case Op::Add: return checked(arg(0) + arg(1), n);
        case Op::Sub: return checked(arg(0) - arg(1), n);
        case Op::Mul: return checked(arg(0) * arg(1), n);
        case Op::Div: {
            const double a = arg(0);
            const double b = arg(1);
            if (b == 0.0) throw EvalError("division by zero", n.offset);
            return checked(a / b, n);
        }
        case Op::Pow:
        case Op::PowFn: {
            const double a = arg(0);
            const double b = arg(1);
            if (a == 0.0 && b < 0.0) throw EvalError("zero raised to a negative power", n.offset);
            return checked(std::pow(a, b), n);
        }
        case Op::Abs: return std::abs(arg(0));
        case Op::Exp: return checked(std::exp(arg(0)), n);
        case Op::Log: {
            const double a = arg(0);
            if (!(a > 0.0)) throw EvalError("log of a nonpositive value", n.offset);
            return std::log(a);
        }
        case Op::Sqrt: {
            const double a = arg(0);
            if (a < 0.0) throw EvalError("sqrt of a negative value", n.offset);
            return std::sqrt(a);
        }
        case Op::Sin: return std::sin(arg(0));
        case Op::Cos: return std::cos(arg(0));
        case Op::Min: return std::min(arg(0), arg(1));
        case Op::Max: return std::max(arg(0), arg(1));
        case Op::Indicator: {
            const double lo = arg(0);
            const double hi = arg(1);
            const double x = arg(2);
            return (lo <= x && x < hi) ? 1.0 : 0.0;
        }
    }
    throw EvalError("corrupt expression", n.offset);
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    if (v < 0) return "(" + s + ")";
    return s;
}

void print_node(const Expr::Node& n, std::string& out) {
    auto binary = [&](const char* op) {
        out += '(';
        print_node(*n.args[0], out);
        out += op;
        print_node(*n.args[1], out);
        out += ')';
    };
    switch (n.op) {
        case Op::Const: out += format_number(n.value); return;
        case Op::Var: out += "s" + std::to_string(n.var + 1); return;
        case Op::Neg:
            out += "(-";
            print_node(*n.args[0], out);
            out += ')';
            return;
        case Op::Add: binary(" + "); return;
        case Op::Sub: binary(" - "); return;
        case Op::Mul: binary("*"); return;
        case Op::Div: binary("/"); return;
        case Op::Pow: binary("^"); return;
        default: break;
    }
    out += info_of(n.op)->name;
    out += '(';
    for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += ", ";
        print_node(*n.args[i], out);
    }
    out += ')';
}

bool equal_nodes(const Expr::Node& a, const Expr::Node& b) {
    if (a.op != b.op || a.args.size() != b.args.size()) return false;
    if (a.op == Op::Const && a.value != b.value) return false;
    if (a.op == Op::Var && a.var != b.var) return false;
    for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!equal_nodes(*a.args[i], *b.args[i])) return false;
    return true;
}

int max_var(const Expr::Node& n) {
    int m = n.op == Op::Var ? n.var + 1 : 0;
    for (const auto& a : n.args) m = std::max(m, max_var(*a));
    return m;
}

void collect_breaks(const Expr::Node& n, int axis, std::set<double>& out) {
    if (n.op == Op::Indicator && n.args[2]->op == Op::Var && n.args[2]->var == axis) {
        for (int i = 0; i < 2; ++i)
            if (max_var(*n.args[i]) == 0) {
                try {
                    out.insert(eval_node(*n.args[i], nullptr, 0));
                } catch (const EvalError&) {
                }
            }
    }
    for (const auto& a : n.args) collect_breaks(*a, axis, out);
}

}  // namespace

Expr::Expr() : root_(make(Op::Const, 0)) {}

Expr Expr::parse(std::string_view text, int dim) { return Expr(Parser(text, dim).run()); }

Expr Expr::constant(double v) {
    if (!std::isfinite(v)) throw Error("expression constants must be finite");
    return Expr(make(Op::Const, 0, {}, v));
}

Expr Expr::variable(int index) { return Expr(make(Op::Var, 0, {}, 0.0, index)); }

double Expr::eval(const Point& s) const { return eval_node(*root_, s.data(), static_cast<int>(s.size())); }

double Expr::eval(double s1) const { return eval_node(*root_, &s1, 1); }

std::string Expr::print() const {
    std::string out;
    print_node(*root_, out);
    return out;
}

bool Expr::operator==(const Expr& other) const { return equal_nodes(*root_, *other.root_); }

bool Expr::is_constant() const { return max_var(*root_) == 0; }

int Expr::arity() const { return max_var(*root_); }

std::vector<double> Expr::breakpoints(int axis) const {
    std::set<double> out;
    collect_breaks(*root_, axis, out);
    return {out.begin(), out.end()};
}

}  // namespace isrm
