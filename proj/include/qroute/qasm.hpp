#pragma once

// OpenQASM 2.0 subset reader and writer.
//
// Reader: qreg/creg, the qelib1-style gate set (h x y z s sdg t tdg rx ry rz
// u1 u2 u3 id cx cz swap cp cu1 crz rzz rxx ryy iswap, plus builtin U/CX),
// user gate definitions over these, barrier, and trailing measure. Classical
// control, reset, mid-circuit measurement and foreign includes are rejected.
//
// Writer: canonical nodes are emitted as the macro
//   u3 dressings;  rxx(a*pi); ryy(b*pi); rzz(c*pi);  u3 dressings;
// with identity factors omitted. The reader re-merges consecutive
// rxx/ryy/rzz runs on a pair into a single canonical node, which makes
// emit(parse(emit(d))) == emit(d) byte for byte.

#include "circuit.hpp"
#include "parse_error.hpp"

#include <cstdio>
#include <map>
#include <memory>
#include <set>
#include <sstream>

namespace qroute {

class UnsupportedFeature : public std::runtime_error {
public:
    UnsupportedFeature(int line, int col, const std::string& msg)
        : std::runtime_error("unsupported feature at " + std::to_string(line) + ":" +
                             std::to_string(col) + ": " + msg) {}
    explicit UnsupportedFeature(const std::string& msg) : std::runtime_error(msg) {}
};

namespace qasm_detail {

struct Token {
    enum Type { Ident, Number, String, Sym, End } type = End;
    std::string text;
    double num = 0;
    int line = 1, col = 1;
};

inline std::vector<Token> lex(const std::string& src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    size_t i = 0;
    auto advance = [&](size_t k) {
        for (size_t j = 0; j < k; ++j) {
            if (src[i + j] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        i += k;
    };
    while (i < src.size()) {
        char c = src[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance(1);
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        Token t;
        t.line = line;
        t.col = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t j = i;
            while (j < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
                ++j;
            t.type = Token::Ident;
            t.text = src.substr(i, j - i);
            advance(j - i);
        } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                   (c == '.' && i + 1 < src.size() &&
                    std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            size_t j = i;
            while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) ||
                                      src[j] == '.' || src[j] == 'e' || src[j] == 'E' ||
                                      ((src[j] == '+' || src[j] == '-') && j > i &&
                                       (src[j - 1] == 'e' || src[j - 1] == 'E'))))
                ++j;
            t.type = Token::Number;
            t.text = src.substr(i, j - i);
            try {
                t.num = std::stod(t.text);
            } catch (...) {
                throw ParseError(line, col, "bad number '" + t.text + "'");
            }
            advance(j - i);
        } else if (c == '"') {
            size_t j = i + 1;
            while (j < src.size() && src[j] != '"') ++j;
            if (j >= src.size()) throw ParseError(line, col, "unterminated string");
            t.type = Token::String;
            t.text = src.substr(i + 1, j - i - 1);
            advance(j - i + 1);
        } else if (c == '-' && i + 1 < src.size() && src[i + 1] == '>') {
            t.type = Token::Sym;
            t.text = "->";
            advance(2);
        } else {
            t.type = Token::Sym;
            t.text = std::string(1, c);
            advance(1);
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.type = Token::End;
    end.line = line;
    end.col = col;
    out.push_back(end);
    return out;
}

struct Expr {
    enum Kind { Num, Pi, Var, Add, Sub, Mul, Div, Neg } kind = Num;
    double num = 0;
    std::string var;
    std::unique_ptr<Expr> a, b;
    int line = 1, col = 1;

    double eval(const std::map<std::string, double>& env) const {
        switch (kind) {
            case Num: return num;
            case Pi: return kPi;
            case Var: {
                auto it = env.find(var);
                if (it == env.end()) throw ParseError(line, col, "unbound parameter '" + var + "'");
                return it->second;
            }
            case Add: return a->eval(env) + b->eval(env);
            case Sub: return a->eval(env) - b->eval(env);
            case Mul: return a->eval(env) * b->eval(env);
            case Div: return a->eval(env) / b->eval(env);
            case Neg: return -a->eval(env);
        }
        return 0;
    }
};

// 1Q matrix builders --------------------------------------------------------

inline Matrix2 mat_u3(double theta, double phi, double lambda) {
    const Complex i(0, 1);
    double ct = std::cos(theta / 2), st = std::sin(theta / 2);
    Matrix2 m;
    m << ct, -std::exp(i * lambda) * st, std::exp(i * phi) * st,
        std::exp(i * (phi + lambda)) * ct;
    return m;
}

inline Matrix2 mat_rx(double t) {
    const Complex i(0, 1);
    Matrix2 m;
    m << std::cos(t / 2), -i * std::sin(t / 2), -i * std::sin(t / 2), std::cos(t / 2);
    return m;
}

inline Matrix2 mat_ry(double t) {
    Matrix2 m;
    m << std::cos(t / 2), -std::sin(t / 2), std::sin(t / 2), std::cos(t / 2);
    return m;
}

inline Matrix2 mat_rz(double t) {
    const Complex i(0, 1);
    Matrix2 m = Matrix2::Zero();
    m(0, 0) = std::exp(-i * t / 2.0);
    m(1, 1) = std::exp(i * t / 2.0);
    return m;
}

inline Matrix2 mat_phase(double lambda) {
    Matrix2 m = Matrix2::Identity();
    m(1, 1) = std::exp(Complex(0, 1) * lambda);
    return m;
}

// 2Q matrices in the |q1 q0> convention with qubits[0] as the low bit ------

inline Matrix4 mat_cx_low_control() {
    Matrix4 m = Matrix4::Zero();
    m(0, 0) = m(2, 2) = 1;  // control = low bit (qubits[0])
    m(1, 3) = m(3, 1) = 1;
    return m;
}

inline Matrix4 mat_cz() {
    Matrix4 m = Matrix4::Identity();
    m(3, 3) = -1;
    return m;
}

inline Matrix4 mat_cphase(double lambda) {
    Matrix4 m = Matrix4::Identity();
    m(3, 3) = std::exp(Complex(0, 1) * lambda);
    return m;
}

inline Matrix4 mat_crz_low_control(double lambda) {
    const Complex i(0, 1);
    Matrix4 m = Matrix4::Identity();
    m(1, 1) = std::exp(-i * lambda / 2.0);  // control = low bit set, target 0
    m(3, 3) = std::exp(i * lambda / 2.0);
    return m;
}

inline Matrix4 mat_iswap() {
    const Complex i(0, 1);
    Matrix4 m = Matrix4::Zero();
    m(0, 0) = m(3, 3) = 1;
    m(1, 2) = m(2, 1) = i;
    return m;
}

inline Matrix4 mat_axis(int axis, double theta) {
    // exp(-i theta/2 PP) for PP in {XX, YY, ZZ}
    const Complex i(0, 1);
    Complex c = std::cos(theta / 2), s = -i * std::sin(theta / 2);
    Matrix4 m = Matrix4::Zero();
    if (axis == 0) {  // XX: anti-diagonal coupling
        m(0, 0) = m(1, 1) = m(2, 2) = m(3, 3) = c;
        m(0, 3) = m(1, 2) = m(2, 1) = m(3, 0) = s;
    } else if (axis == 1) {  // YY
        m(0, 0) = m(1, 1) = m(2, 2) = m(3, 3) = c;
        m(0, 3) = m(3, 0) = -s;
        m(1, 2) = m(2, 1) = s;
    } else {  // ZZ
        m(0, 0) = m(3, 3) = std::exp(-i * theta / 2.0);
        m(1, 1) = m(2, 2) = std::exp(i * theta / 2.0);
    }
    return m;
}

struct GateApp {
    std::string name;
    std::vector<Expr> params;
    std::vector<std::string> qargs;  // formal names inside bodies
    int line = 1, col = 1;
};

struct GateDef {
    std::vector<std::string> params;
    std::vector<std::string> qargs;
    std::vector<GateApp> body;
};

class Parser {
public:
    explicit Parser(const std::string& src) : toks_(lex(src)) {}

    CircuitDag run() {
        if (peek().type == Token::Ident && peek().text == "OPENQASM") {
            get();
            Token v = expect(Token::Number, "version");
            if (v.text != "2.0" && v.text != "2")
                throw UnsupportedFeature(v.line, v.col, "OPENQASM version " + v.text);
            expect_sym(";");
        }
        while (peek().type != Token::End) statement();
        finish();
        return std::move(dag_);
    }

private:
    // token plumbing --------------------------------------------------------
    const Token& peek(int k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    Token get() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
    Token expect(Token::Type ty, const std::string& what) {
        Token t = get();
        if (t.type != ty) throw ParseError(t.line, t.col, "expected " + what);
        return t;
    }
    void expect_sym(const std::string& s) {
        Token t = get();
        if (t.type != Token::Sym || t.text != s)
            throw ParseError(t.line, t.col, "expected '" + s + "'");
    }
    bool accept_sym(const std::string& s) {
        if (peek().type == Token::Sym && peek().text == s) {
            get();
            return true;
        }
        return false;
    }

    // expressions -----------------------------------------------------------
    Expr parse_expr() { return parse_sum(); }

    Expr parse_sum() {
        Expr e = parse_term();
        while (peek().type == Token::Sym && (peek().text == "+" || peek().text == "-")) {
            Token op = get();
            Expr rhs = parse_term();
            Expr n;
            n.kind = op.text == "+" ? Expr::Add : Expr::Sub;
            n.line = op.line;
            n.col = op.col;
            n.a = std::make_unique<Expr>(std::move(e));
            n.b = std::make_unique<Expr>(std::move(rhs));
            e = std::move(n);
        }
        return e;
    }

    Expr parse_term() {
        Expr e = parse_factor();
        while (peek().type == Token::Sym && (peek().text == "*" || peek().text == "/")) {
            Token op = get();
            Expr rhs = parse_factor();
            Expr n;
            n.kind = op.text == "*" ? Expr::Mul : Expr::Div;
            n.line = op.line;
            n.col = op.col;
            n.a = std::make_unique<Expr>(std::move(e));
            n.b = std::make_unique<Expr>(std::move(rhs));
            e = std::move(n);
        }
        return e;
    }

    Expr parse_factor() {
        Token t = peek();
        if (accept_sym("-")) {
            Expr n;
            n.kind = Expr::Neg;
            n.line = t.line;
            n.col = t.col;
            n.a = std::make_unique<Expr>(parse_factor());
            return n;
        }
        if (accept_sym("(")) {
            Expr e = parse_expr();
            expect_sym(")");
            return e;
        }
        t = get();
        Expr e;
        e.line = t.line;
        e.col = t.col;
        if (t.type == Token::Number) {
            e.kind = Expr::Num;
            e.num = t.num;
        } else if (t.type == Token::Ident && t.text == "pi") {
            e.kind = Expr::Pi;
        } else if (t.type == Token::Ident) {
            e.kind = Expr::Var;
            e.var = t.text;
        } else {
            throw ParseError(t.line, t.col, "expected expression");
        }
        return e;
    }

    // statements ------------------------------------------------------------
    void statement() {
        Token t = peek();
        if (t.type != Token::Ident) throw ParseError(t.line, t.col, "expected statement");
        const std::string& kw = t.text;
        if (kw == "include") {
            get();
            Token s = expect(Token::String, "include file name");
            if (s.text != "qelib1.inc")
                throw UnsupportedFeature(s.line, s.col, "include \"" + s.text + "\"");
            expect_sym(";");
        } else if (kw == "qreg" || kw == "creg") {
            get();
            Token name = expect(Token::Ident, "register name");
            expect_sym("[");
            Token n = expect(Token::Number, "register size");
            expect_sym("]");
            expect_sym(";");
            int size = static_cast<int>(n.num);
            if (size <= 0 || n.num != size)
                throw ParseError(n.line, n.col, "bad register size");
            auto& regs = kw == "qreg" ? qregs_ : cregs_;
            int& count = kw == "qreg" ? dag_.qubit_count : dag_.cbit_count;
            if (regs.count(name.text))
                throw ParseError(name.line, name.col, "duplicate register '" + name.text + "'");
            regs[name.text] = {count, size};
            count += size;
        } else if (kw == "gate") {
            parse_gate_def();
        } else if (kw == "barrier") {
            get();
            std::vector<int> qubits = parse_qubit_args(true);
            expect_sym(";");
            Gate g;
            g.kind = GateKind::Barrier;
            g.qubits = std::move(qubits);
            append(std::move(g));
        } else if (kw == "measure") {
            get();
            parse_measure();
        } else if (kw == "if" || kw == "reset" || kw == "opaque") {
            throw UnsupportedFeature(t.line, t.col, kw);
        } else {
            parse_application();
        }
    }

    void parse_gate_def() {
        get();  // 'gate'
        Token name = expect(Token::Ident, "gate name");
        GateDef def;
        if (accept_sym("(")) {
            if (!accept_sym(")")) {
                do {
                    def.params.push_back(expect(Token::Ident, "parameter name").text);
                } while (accept_sym(","));
                expect_sym(")");
            }
        }
        do {
            def.qargs.push_back(expect(Token::Ident, "qubit argument").text);
        } while (accept_sym(","));
        expect_sym("{");
        while (!accept_sym("}")) {
            Token t = peek();
            if (t.type != Token::Ident) throw ParseError(t.line, t.col, "expected gate body");
            if (t.text == "if" || t.text == "reset" || t.text == "measure")
                throw UnsupportedFeature(t.line, t.col, t.text + " inside gate body");
            GateApp app;
            app.name = get().text;
            app.line = t.line;
            app.col = t.col;
            if (app.name != "barrier" && accept_sym("(")) {
                if (!accept_sym(")")) {
                    do {
                        app.params.push_back(parse_expr());
                    } while (accept_sym(","));
                    expect_sym(")");
                }
            }
            do {
                app.qargs.push_back(expect(Token::Ident, "qubit argument").text);
            } while (accept_sym(","));
            expect_sym(";");
            def.body.push_back(std::move(app));
        }
        defs_[name.text] = std::move(def);
    }

    struct QubitRef {
        std::string reg;
        int index = -1;  // -1: whole register
        int line = 1, col = 1;
    };

    QubitRef parse_qubit_ref() {
        Token name = expect(Token::Ident, "qubit reference");
        QubitRef r;
        r.reg = name.text;
        r.line = name.line;
        r.col = name.col;
        if (accept_sym("[")) {
            Token idx = expect(Token::Number, "qubit index");
            expect_sym("]");
            r.index = static_cast<int>(idx.num);
        }
        return r;
    }

    int resolve_qubit(const QubitRef& r) const {
        auto it = qregs_.find(r.reg);
        if (it == qregs_.end())
            throw ParseError(r.line, r.col, "unknown qreg '" + r.reg + "'");
        if (r.index < 0 || r.index >= it->second.second)
            throw ParseError(r.line, r.col, "qubit index out of range");
        return it->second.first + r.index;
    }

    std::vector<int> parse_qubit_args(bool broadcast) {
        std::vector<int> out;
        do {
            QubitRef r = parse_qubit_ref();
            if (r.index < 0) {
                if (!broadcast)
                    throw UnsupportedFeature(r.line, r.col, "register argument here");
                auto it = qregs_.find(r.reg);
                if (it == qregs_.end())
                    throw ParseError(r.line, r.col, "unknown qreg '" + r.reg + "'");
                for (int i = 0; i < it->second.second; ++i) out.push_back(it->second.first + i);
            } else {
                out.push_back(resolve_qubit(r));
            }
        } while (accept_sym(","));
        return out;
    }

    void parse_measure() {
        QubitRef q = parse_qubit_ref();
        expect_sym("->");
        QubitRef c = parse_qubit_ref();
        expect_sym(";");
        auto cit = cregs_.find(c.reg);
        if (cit == cregs_.end()) throw ParseError(c.line, c.col, "unknown creg '" + c.reg + "'");
        auto add_measure = [&](int qi, int ci) {
            Gate g;
            g.kind = GateKind::Measure;
            g.qubits = {qi};
            g.cbit = ci;
            append(std::move(g));
        };
        if (q.index < 0) {  // broadcast measure
            auto qit = qregs_.find(q.reg);
            if (qit == qregs_.end())
                throw ParseError(q.line, q.col, "unknown qreg '" + q.reg + "'");
            if (c.index >= 0 || qit->second.second != cit->second.second)
                throw ParseError(q.line, q.col, "register size mismatch in measure");
            for (int i = 0; i < qit->second.second; ++i)
                add_measure(qit->second.first + i, cit->second.first + i);
        } else {
            if (c.index < 0 || c.index >= cit->second.second)
                throw ParseError(c.line, c.col, "creg index out of range");
            add_measure(resolve_qubit(q), cit->second.first + c.index);
        }
    }

    void parse_application() {
        Token name = get();
        std::vector<double> params;
        if (accept_sym("(")) {
            if (!accept_sym(")")) {
                do {
                    params.push_back(parse_expr().eval({}));
                } while (accept_sym(","));
                expect_sym(")");
            }
        }
        // 1Q broadcast over whole registers is permitted
        std::vector<QubitRef> refs;
        do {
            refs.push_back(parse_qubit_ref());
        } while (accept_sym(","));
        expect_sym(";");
        bool broadcast = refs.size() == 1 && refs[0].index < 0;
        if (broadcast) {
            auto it = qregs_.find(refs[0].reg);
            if (it == qregs_.end())
                throw ParseError(refs[0].line, refs[0].col, "unknown qreg '" + refs[0].reg + "'");
            for (int i = 0; i < it->second.second; ++i)
                apply(name.text, params, {it->second.first + i}, name.line, name.col, 0);
            return;
        }
        std::vector<int> qubits;
        for (const auto& r : refs) {
            if (r.index < 0)
                throw UnsupportedFeature(r.line, r.col, "register broadcast on multi-qubit gate");
            qubits.push_back(resolve_qubit(r));
        }
        apply(name.text, params, qubits, name.line, name.col, 0);
    }

    // gate application ------------------------------------------------------
    void apply(const std::string& name, const std::vector<double>& params,
               const std::vector<int>& qubits, int line, int col, int depth) {
        if (depth > 64) throw ParseError(line, col, "gate expansion too deep");
        for (size_t i = 0; i < qubits.size(); ++i)
            for (size_t j = i + 1; j < qubits.size(); ++j)
                if (qubits[i] == qubits[j])
                    throw ParseError(line, col, "duplicate qubit argument");

        auto dit = defs_.find(name);
        if (dit != defs_.end()) {
            const GateDef& def = dit->second;
            if (params.size() != def.params.size() || qubits.size() != def.qargs.size())
                throw ParseError(line, col, "wrong arity for gate '" + name + "'");
            std::map<std::string, double> env;
            for (size_t i = 0; i < params.size(); ++i) env[def.params[i]] = params[i];
            std::map<std::string, int> qenv;
            for (size_t i = 0; i < qubits.size(); ++i) qenv[def.qargs[i]] = qubits[i];
            for (const GateApp& app : def.body) {
                std::vector<double> vals;
                for (const Expr& e : app.params) vals.push_back(e.eval(env));
                std::vector<int> qs;
                for (const std::string& qa : app.qargs) {
                    auto qit = qenv.find(qa);
                    if (qit == qenv.end())
                        throw ParseError(app.line, app.col, "unknown qubit '" + qa + "'");
                    qs.push_back(qit->second);
                }
                if (app.name == "barrier") {
                    Gate g;
                    g.kind = GateKind::Barrier;
                    g.qubits = qs;
                    append(std::move(g));
                } else {
                    apply(app.name, vals, qs, app.line, app.col, depth + 1);
                }
            }
            return;
        }
        apply_builtin(name, params, qubits, line, col);
    }

    void check_arity(bool ok, int line, int col, const std::string& name) {
        if (!ok) throw ParseError(line, col, "wrong arity for gate '" + name + "'");
    }

    void apply_builtin(const std::string& name, const std::vector<double>& p,
                       const std::vector<int>& q, int line, int col) {
        const size_t np = p.size(), nq = q.size();
        auto add1 = [&](const Matrix2& m) { append(one_qubit_gate(q[0], m)); };
        auto add2 = [&](const Matrix4& m) { add_two_qubit(q[0], q[1], m); };

        if (name == "h") { check_arity(np == 0 && nq == 1, line, col, name);
            Matrix2 m; m << 1, 1, 1, -1; add1(m / std::sqrt(2.0)); }
        else if (name == "x") { check_arity(np == 0 && nq == 1, line, col, name);
            Matrix2 m; m << 0, 1, 1, 0; add1(m); }
        else if (name == "y") { check_arity(np == 0 && nq == 1, line, col, name);
            Matrix2 m; m << 0, Complex(0, -1), Complex(0, 1), 0; add1(m); }
        else if (name == "z") { check_arity(np == 0 && nq == 1, line, col, name);
            add1(mat_phase(kPi)); }
        else if (name == "s") { check_arity(np == 0 && nq == 1, line, col, name);
            add1(mat_phase(kPi / 2)); }
        else if (name == "sdg") { check_arity(np == 0 && nq == 1, line, col, name);
            add1(mat_phase(-kPi / 2)); }
        else if (name == "t") { check_arity(np == 0 && nq == 1, line, col, name);
            add1(mat_phase(kPi / 4)); }
        else if (name == "tdg") { check_arity(np == 0 && nq == 1, line, col, name);
            add1(mat_phase(-kPi / 4)); }
        else if (name == "id") { check_arity(np == 0 && nq == 1, line, col, name);
            add1(Matrix2::Identity()); }
        else if (name == "rx") { check_arity(np == 1 && nq == 1, line, col, name);
            add1(mat_rx(p[0])); }
        else if (name == "ry") { check_arity(np == 1 && nq == 1, line, col, name);
            add1(mat_ry(p[0])); }
        else if (name == "rz") { check_arity(np == 1 && nq == 1, line, col, name);
            add1(mat_rz(p[0])); }
        else if (name == "u1") { check_arity(np == 1 && nq == 1, line, col, name);
            add1(mat_phase(p[0])); }
        else if (name == "u2") { check_arity(np == 2 && nq == 1, line, col, name);
            add1(mat_u3(kPi / 2, p[0], p[1])); }
        else if (name == "u3" || name == "U" || name == "u") {
            check_arity(np == 3 && nq == 1, line, col, name);
            add1(mat_u3(p[0], p[1], p[2])); }
        else if (name == "cx" || name == "CX") { check_arity(np == 0 && nq == 2, line, col, name);
            add2(mat_cx_low_control()); }
        else if (name == "cz") { check_arity(np == 0 && nq == 2, line, col, name);
            add2(mat_cz()); }
        else if (name == "swap") { check_arity(np == 0 && nq == 2, line, col, name);
            append(swap_gate(q[0], q[1])); }
        else if (name == "cp" || name == "cu1") { check_arity(np == 1 && nq == 2, line, col, name);
            add2(mat_cphase(p[0])); }
        else if (name == "crz") { check_arity(np == 1 && nq == 2, line, col, name);
            add2(mat_crz_low_control(p[0])); }
        else if (name == "iswap") { check_arity(np == 0 && nq == 2, line, col, name);
            add2(mat_iswap()); }
        else if (name == "rxx") { check_arity(np == 1 && nq == 2, line, col, name);
            add_axis(q[0], q[1], 0, p[0]); }
        else if (name == "ryy") { check_arity(np == 1 && nq == 2, line, col, name);
            add_axis(q[0], q[1], 1, p[0]); }
        else if (name == "rzz") { check_arity(np == 1 && nq == 2, line, col, name);
            add_axis(q[0], q[1], 2, p[0]); }
        else
            throw ParseError(line, col, "unknown gate '" + name + "'");
    }

    void add_two_qubit(int q0, int q1, const Matrix4& m) {
        CanonicalCoeffs k = weyl_coordinates(m);
        if (k.is_identity() && detail::frobenius_distance(
                                   m / std::pow(m.determinant(), 0.25), Matrix4::Identity()) <
                                   1e-12) {
            return;  // exact identity (e.g. cp(0))
        }
        append(canonical_gate(q0, q1, k, kak_decompose(m)));
    }

    /// Consecutive rxx/ryy/rzz on the same pair merge into one canonical
    /// node; a normalized run needs no dressings at all.
    void add_axis(int q0, int q1, int axis, double theta) {
        double comp[3] = {0, 0, 0};
        comp[axis] = theta / kPi;
        int last0 = last_on_wire(q0), last1 = last_on_wire(q1);
        if (last0 >= 0 && last0 == last1) {
            auto it = axis_runs_.find(last0);
            if (it != axis_runs_.end()) {
                Gate& g = dag_.nodes[last0];
                bool same_pair = (g.qubits[0] == q0 && g.qubits[1] == q1) ||
                                 (g.qubits[0] == q1 && g.qubits[1] == q0);
                if (same_pair) {
                    auto& run = it->second;
                    for (int i = 0; i < 3; ++i) run.raw[i] += comp[i];
                    run.matrix = mat_axis(axis, theta) * run.matrix;
                    rebuild_axis_node(g, run);
                    return;
                }
            }
        }
        Gate g;
        g.kind = GateKind::Canonical;
        g.qubits = {q0, q1};
        AxisRun run;
        for (int i = 0; i < 3; ++i) run.raw[i] = comp[i];
        run.matrix = mat_axis(axis, theta);
        rebuild_axis_node(g, run);
        int idx = static_cast<int>(dag_.nodes.size());
        append(std::move(g));
        axis_runs_[idx] = run;
    }

    struct AxisRun {
        double raw[3];
        Matrix4 matrix;
    };

    void rebuild_axis_node(Gate& g, const AxisRun& run) {
        CanonicalCoeffs norm = normalize_coeffs(run.raw[0], run.raw[1], run.raw[2]);
        g.coeffs = norm;
        if (norm.approx_equal({run.raw[0], run.raw[1], run.raw[2]}, 1e-12))
            g.dressings.reset();  // node matrix is exactly canonical_matrix(coeffs)
        else
            g.dressings = kak_decompose(run.matrix);
    }

    int last_on_wire(int q) const {
        auto it = wire_last_.find(q);
        return it == wire_last_.end() ? -1 : it->second;
    }

    void append(Gate g) {
        int idx = static_cast<int>(dag_.nodes.size());
        for (int q : g.qubits) {
            if (q >= dag_.qubit_count) throw std::logic_error("qubit index out of range");
            if (g.kind != GateKind::Barrier) wire_last_[q] = idx;
            if (g.kind != GateKind::Measure && g.kind != GateKind::Barrier &&
                measured_.count(q))
                throw UnsupportedFeature("mid-circuit measurement on qubit " + std::to_string(q));
            if (g.kind == GateKind::Measure) measured_.insert(q);
        }
        if (g.kind == GateKind::Barrier)
            for (int q : g.qubits) wire_last_[q] = -2;  // fence: block axis merging
        dag_.nodes.push_back(std::move(g));
    }

    void finish() {}

    std::vector<Token> toks_;
    size_t pos_ = 0;
    CircuitDag dag_;
    std::map<std::string, std::pair<int, int>> qregs_, cregs_;  // name -> (offset, size)
    std::map<std::string, GateDef> defs_;
    std::map<int, int> wire_last_;
    std::map<int, AxisRun> axis_runs_;
    std::set<int> measured_;
};

inline std::string fmt_num(double v) {
    if (v == 0) v = 0;  // avoid "-0"
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

/// Angles within noise of the -pi branch cut snap to +pi so that emitted
/// text is stable under re-extraction.
inline double stable_arg(const Complex& z) {
    double a = std::arg(z);
    if (a <= -kPi + 1e-9) a = kPi;
    return a;
}

/// Canonical ZYZ extraction; deterministic representative with
/// theta in [0, pi], phi/lambda in (-pi, pi].
inline bool u3_angles(const Matrix2& m, double& theta, double& phi, double& lambda) {
    double n00 = std::abs(m(0, 0)), n10 = std::abs(m(1, 0));
    theta = 2.0 * std::atan2(n10, n00);
    if (n00 < 1e-12) {  // theta = pi; gauge fixed by phi = 0
        Matrix2 g = m / (m(1, 0) / n10);
        theta = kPi;
        phi = 0;
        lambda = stable_arg(-g(0, 1));
        return true;
    }
    Matrix2 g = m / (m(0, 0) / n00);  // m00 = phase * cos(theta/2), cos >= 0
    if (n10 < 1e-12) {
        phi = 0;
        lambda = stable_arg(g(1, 1));
        if (std::abs(theta) < 1e-9 && std::abs(lambda) < 1e-12) return false;  // identity
        theta = 0;
        return true;
    }
    phi = stable_arg(g(1, 0));
    lambda = stable_arg(-g(0, 1));
    return true;
}

inline void emit_u3(std::ostringstream& os, const Matrix2& m, int q) {
    double th, ph, la;
    if (!u3_angles(m, th, ph, la)) return;
    os << "u3(" << fmt_num(th) << "," << fmt_num(ph) << "," << fmt_num(la) << ") q[" << q
       << "];\n";
}

} // namespace qasm_detail

inline CircuitDag parse_qasm(const std::string& text) {
    return qasm_detail::Parser(text).run();
}

inline std::string emit_qasm(const CircuitDag& dag) {
    using namespace qasm_detail;
    std::ostringstream os;
    os << "OPENQASM 2.0;\ninclude \"qelib1.inc\";\n";
    os << "qreg q[" << dag.qubit_count << "];\n";
    if (dag.cbit_count > 0) os << "creg c[" << dag.cbit_count << "];\n";
    for (const auto& g : dag.nodes) {
        switch (g.kind) {
            case GateKind::OneQubit:
                emit_u3(os, g.matrix, g.qubits[0]);
                break;
            case GateKind::Swap:
                os << "swap q[" << g.qubits[0] << "],q[" << g.qubits[1] << "];\n";
                break;
            case GateKind::Measure:
                os << "measure q[" << g.qubits[0] << "] -> c[" << g.cbit << "];\n";
                break;
            case GateKind::Barrier: {
                os << "barrier";
                for (size_t i = 0; i < g.qubits.size(); ++i)
                    os << (i ? "," : " ") << "q[" << g.qubits[i] << "]";
                os << ";\n";
                break;
            }
            case GateKind::Canonical: {
                int q0 = g.qubits[0], q1 = g.qubits[1];
                Matrix4 m = node_matrix(g);
                CanonicalCoeffs k = g.coeffs;
                bool bare =
                    qroute::detail::frobenius_distance(m, canonical_matrix(k)) < 1e-10 ||
                    [&] {
                        Complex tr = (canonical_matrix(k).adjoint() * m).trace();
                        if (std::abs(tr) < 1e-12) return false;
                        return qroute::detail::frobenius_distance(
                                   Matrix4(m * std::abs(tr) / tr), canonical_matrix(k)) < 1e-10;
                    }();
                KakFactors f;
                if (!bare) {
                    f = g.dressings ? *g.dressings : kak_decompose(m);
                    k = f.coeffs;
                    emit_u3(os, f.before_1, q0);
                    emit_u3(os, f.before_0, q1);
                }
                if (std::abs(k.a) > 1e-12)
                    os << "rxx(" << fmt_num(k.a * kPi) << ") q[" << q0 << "],q[" << q1 << "];\n";
                if (std::abs(k.b) > 1e-12)
                    os << "ryy(" << fmt_num(k.b * kPi) << ") q[" << q0 << "],q[" << q1 << "];\n";
                if (std::abs(k.c) > 1e-12)
                    os << "rzz(" << fmt_num(k.c * kPi) << ") q[" << q0 << "],q[" << q1 << "];\n";
                if (!bare) {
                    emit_u3(os, f.after_1, q0);
                    emit_u3(os, f.after_0, q1);
                }
                break;
            }
        }
    }
    return os.str();
}

} // namespace qroute
