// Copyright 2026 The Workbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "workbench/spark.hpp"

namespace workbench {

namespace {

using Value = std::variant<std::int64_t, double>;

double as_double(const Value& v) {
  return std::visit([](auto x) { return static_cast<double>(x); }, v);
}

enum class Op { Add, Sub, Mul, Div };

Value apply(Op op, const Value& a, const Value& b) {
  if (std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b)) {
    auto x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
    std::int64_t r = 0;
    switch (op) {
      case Op::Add:
        if (__builtin_add_overflow(x, y, &r)) throw EvaluationError("integer overflow");
        return r;
      case Op::Sub:
        if (__builtin_sub_overflow(x, y, &r)) throw EvaluationError("integer overflow");
        return r;
      case Op::Mul:
        if (__builtin_mul_overflow(x, y, &r)) throw EvaluationError("integer overflow");
        return r;
      case Op::Div:
        if (y == 0) throw EvaluationError("division by zero");
        if (x == INT64_MIN && y == -1) throw EvaluationError("integer overflow");
        if (x % y == 0) return x / y;
        return static_cast<double>(x) / static_cast<double>(y);
    }
  }
  double x = as_double(a), y = as_double(b);
  switch (op) {
    case Op::Add: return x + y;
    case Op::Sub: return x - y;
    case Op::Mul: return x * y;
    case Op::Div:
      if (y == 0.0) throw EvaluationError("division by zero");
      return x / y;
  }
  return 0.0;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Value parse() {
    auto v = expr();
    skip_space();
    if (pos_ != text_.size()) throw EvaluationError("unexpected input at offset " + std::to_string(pos_));
    return v;
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' || text_[pos_] == '\r')) ++pos_;
  }

  bool accept(std::string_view token) {
    skip_space();
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  std::optional<Op> additive() {
    if (accept("+")) return Op::Add;
    if (accept("-") || accept("−")) return Op::Sub;
    return std::nullopt;
  }

  std::optional<Op> multiplicative() {
    if (accept("*") || accept("×")) return Op::Mul;
    if (accept("/") || accept("÷")) return Op::Div;
    return std::nullopt;
  }

  Value expr() {
    auto v = term();
    while (auto op = additive()) v = apply(*op, v, term());
    return v;
  }

  Value term() {
    auto v = factor();
    while (auto op = multiplicative()) v = apply(*op, v, factor());
    return v;
  }

  Value factor() {
    if (++depth_ > 256) throw EvaluationError("expression nested too deeply");
    struct Leave {
      int& d;
      ~Leave() { --d; }
    } leave{depth_};
    if (auto op = additive()) {
      auto v = factor();
      return *op == Op::Add ? v : apply(Op::Sub, std::int64_t{0}, v);
    }
    if (accept("(")) {
      auto v = expr();
      if (!accept(")")) throw EvaluationError("expected ')'");
      return v;
    }
    return number();
  }

  Value number() {
    skip_space();
    auto start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    bool is_float = false;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      is_float = true;
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E') && pos_ > start) {
      auto save = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        is_float = true;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      } else {
        pos_ = save;
      }
    }
    auto literal = text_.substr(start, pos_ - start);
    if (literal.empty() || literal == ".") {
      throw EvaluationError(pos_ >= text_.size() ? "unexpected end of input"
                                                 : "unexpected character at offset " + std::to_string(start));
    }
    if (is_float) {
      double d = 0;
      auto [ptr, ec] = std::from_chars(literal.data(), literal.data() + literal.size(), d);
      if (ec != std::errc()) throw EvaluationError("bad number '" + std::string(literal) + "'");
      return d;
    }
    std::int64_t n = 0;
    auto [ptr, ec] = std::from_chars(literal.data(), literal.data() + literal.size(), n);
    if (ec != std::errc()) throw EvaluationError("integer literal out of range");
    return n;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

std::string format_value(const Value& v) {
  if (auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  double d = std::get<double>(v);
  if (!std::isfinite(d)) throw EvaluationError("result is not finite");
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), d);
  return std::string(buf, ptr);
}

}  // namespace

std::string evaluate_statement(std::string_view code) {
  return format_value(Parser(code).parse());
}

}  // namespace workbench
