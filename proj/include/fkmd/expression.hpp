#pragma once

#include "fkmd/error.hpp"
#include "fkmd/linalg.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace fkmd {

/// Arithmetic expressions over x (= x1), x1..xd and, for nonlinearities, y.
/// Operators + - * / ^, functions sin cos tan exp log sqrt abs min max, the
/// constant pi. Parsed once into a postfix program.
class Expression {
 public:
  static Expression parse(std::string_view text, int dim, bool allow_y = false) {
    Parser p{text, dim, allow_y, {}, 0};
    p.skip_ws();
    p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("unexpected trailing input");
    Expression e;
    e.source_ = std::string(text);
    e.code_ = std::move(p.code);
    e.analyse();
    return e;
  }

  static Expression constant(double v) {
    Expression e;
    e.source_ = std::to_string(v);
    e.code_.push_back({Op::push_const, v, 0});
    e.analyse();
    return e;
  }

  double operator()(const Vec& x, double y = 0.0) const {
    if (is_constant_) return constant_;
    std::array<double, kMaxStack> stack{};
    int top = 0;
    for (const auto& ins : code_) {
      switch (ins.op) {
        case Op::push_const: stack[top++] = ins.value; break;
        case Op::push_x: stack[top++] = x[ins.index]; break;
        case Op::push_y: stack[top++] = y; break;
        case Op::neg: stack[top - 1] = -stack[top - 1]; break;
        case Op::add: --top; stack[top - 1] += stack[top]; break;
        case Op::sub: --top; stack[top - 1] -= stack[top]; break;
        case Op::mul: --top; stack[top - 1] *= stack[top]; break;
        case Op::div: --top; stack[top - 1] /= stack[top]; break;
        case Op::pow: --top; stack[top - 1] = power(stack[top - 1], stack[top]); break;
        case Op::min: --top; stack[top - 1] = std::min(stack[top - 1], stack[top]); break;
        case Op::max: --top; stack[top - 1] = std::max(stack[top - 1], stack[top]); break;
        case Op::sin: stack[top - 1] = std::sin(stack[top - 1]); break;
        case Op::cos: stack[top - 1] = std::cos(stack[top - 1]); break;
        case Op::tan: stack[top - 1] = std::tan(stack[top - 1]); break;
        case Op::exp: stack[top - 1] = std::exp(stack[top - 1]); break;
        case Op::log: stack[top - 1] = std::log(stack[top - 1]); break;
        case Op::sqrt: stack[top - 1] = std::sqrt(stack[top - 1]); break;
        case Op::abs: stack[top - 1] = std::abs(stack[top - 1]); break;
      }
    }
    return stack[0];
  }

  [[nodiscard]] const std::string& source() const { return source_; }
  [[nodiscard]] bool uses_y() const { return uses_y_; }
  [[nodiscard]] bool uses_x() const { return uses_x_; }
  [[nodiscard]] bool is_constant() const { return is_constant_; }
  [[nodiscard]] double constant_value() const { return constant_; }

 private:
  static constexpr int kMaxStack = 64;

  enum class Op { push_const, push_x, push_y, neg, add, sub, mul, div, pow, min, max, sin, cos, tan, exp, log, sqrt, abs };

  struct Instruction {
    Op op;
    double value;
    int index;
  };

  // Integer exponents go through repeated multiplication so y^3 is exact.
  static double power(double base, double e) {
    if (e == std::floor(e) && std::abs(e) <= 16.0) {
      int n = static_cast<int>(std::abs(e));
      double r = 1.0;
      double b = base;
      while (n > 0) {
        if (n & 1) r *= b;
        b *= b;
        n >>= 1;
      }
      return e < 0 ? 1.0 / r : r;
    }
    return std::pow(base, e);
  }

  struct Parser {
    std::string_view text;
    int dim;
    bool allow_y;
    std::vector<Instruction> code;
    std::size_t pos;

    [[noreturn]] void fail(const std::string& msg) const {
      throw Error(ErrorCode::invalid_argument,
                  "expression '" + std::string(text) + "': " + msg + " at offset " + std::to_string(pos));
    }

    void skip_ws() {
      while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool accept(char c) {
      skip_ws();
      if (pos < text.size() && text[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }

    void expect(char c) {
      if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    void emit(Op op, double v = 0.0, int idx = 0) { code.push_back({op, v, idx}); }

    void parse_expr() {
      parse_term();
      for (;;) {
        if (accept('+')) {
          parse_term();
          emit(Op::add);
        } else if (accept('-')) {
          parse_term();
          emit(Op::sub);
        } else {
          return;
        }
      }
    }

    void parse_term() {
      parse_unary();
      for (;;) {
        if (accept('*')) {
          parse_unary();
          emit(Op::mul);
        } else if (accept('/')) {
          parse_unary();
          emit(Op::div);
        } else {
          return;
        }
      }
    }

    void parse_unary() {
      if (accept('-')) {
        parse_unary();
        emit(Op::neg);
      } else if (accept('+')) {
        parse_unary();
      } else {
        parse_power();
      }
    }

    void parse_power() {
      parse_primary();
      if (accept('^')) {
        parse_unary();
        emit(Op::pow);
      }
    }

    void parse_primary() {
      skip_ws();
      if (pos >= text.size()) fail("unexpected end of input");
      const char c = text[pos];
      if (c == '(') {
        ++pos;
        parse_expr();
        expect(')');
        return;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const std::string rest(text.substr(pos));
        char* end = nullptr;
        const double v = std::strtod(rest.c_str(), &end);
        if (end == rest.c_str()) fail("bad number");
        pos += static_cast<std::size_t>(end - rest.c_str());
        emit(Op::push_const, v);
        return;
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        const std::size_t start = pos;
        while (pos < text.size() && std::isalnum(static_cast<unsigned char>(text[pos]))) ++pos;
        const std::string_view id = text.substr(start, pos - start);
        skip_ws();
        if (pos < text.size() && text[pos] == '(') {
          ++pos;
          parse_call(id);
          return;
        }
        parse_identifier(id);
        return;
      }
      fail(std::string("unexpected character '") + c + "'");
    }

    void parse_call(std::string_view fn) {
      struct Unary {
        std::string_view name;
        Op op;
      };
      static constexpr std::array<Unary, 7> unary{{{"sin", Op::sin}, {"cos", Op::cos}, {"tan", Op::tan}, {"exp", Op::exp},
                                                   {"log", Op::log}, {"sqrt", Op::sqrt}, {"abs", Op::abs}}};
      for (const auto& u : unary) {
        if (fn == u.name) {
          parse_expr();
          expect(')');
          emit(u.op);
          return;
        }
      }
      if (fn == "min" || fn == "max") {
        parse_expr();
        expect(',');
        parse_expr();
        expect(')');
        emit(fn == "min" ? Op::min : Op::max);
        return;
      }
      fail("unknown function '" + std::string(fn) + "'");
    }

    void parse_identifier(std::string_view id) {
      if (id == "pi") {
        emit(Op::push_const, std::numbers::pi);
      } else if (id == "y") {
        if (!allow_y) fail("'y' is only allowed in nonlinearities");
        emit(Op::push_y);
      } else if (id == "x") {
        emit(Op::push_x, 0.0, 0);
      } else if (id.size() >= 2 && id[0] == 'x' && id.find_first_not_of("0123456789", 1) == std::string_view::npos) {
        const int k = std::atoi(std::string(id.substr(1)).c_str());
        if (k < 1 || k > dim) fail("coordinate '" + std::string(id) + "' outside dimension " + std::to_string(dim));
        emit(Op::push_x, 0.0, k - 1);
      } else {
        fail("unknown identifier '" + std::string(id) + "'");
      }
    }
  };

  void analyse() {
    int depth = 0;
    int max_depth = 0;
    for (const auto& ins : code_) {
      switch (ins.op) {
        case Op::push_const:
        case Op::push_x:
        case Op::push_y: ++depth; break;
        case Op::add:
        case Op::sub:
        case Op::mul:
        case Op::div:
        case Op::pow:
        case Op::min:
        case Op::max: --depth; break;
        default: break;
      }
      max_depth = std::max(max_depth, depth);
      if (ins.op == Op::push_x) uses_x_ = true;
      if (ins.op == Op::push_y) uses_y_ = true;
    }
    require(max_depth <= kMaxStack, "expression '" + source_ + "' nests too deeply");
    if (!uses_x_ && !uses_y_) {
      is_constant_ = false;
      constant_ = (*this)(Vec::Zero(1), 0.0);
      is_constant_ = true;
    }
  }

  std::string source_;
  std::vector<Instruction> code_;
  bool uses_x_ = false;
  bool uses_y_ = false;
  bool is_constant_ = false;
  double constant_ = 0.0;
};

}  // namespace fkmd
