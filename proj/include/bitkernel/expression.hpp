#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace bitkernel::data {

// Real-valued expression of one variable `x`.
//
// Grammar: + - * / ^ (right-associative), unary minus, parentheses, numeric
// literals, the constants `pi` and `e`, and the functions sin cos tan asin
// acos atan sinh cosh tanh exp log (natural) log10 sqrt abs sign floor ceil.
class Expression {
 public:
  // Throws ParseError (line 1) naming the offending column.
  static Expression parse(std::string_view source);

  double operator()(double x) const;
  const std::string& source() const noexcept { return source_; }

  struct Node;

 private:
  std::string source_;
  std::shared_ptr<const Node> root_;
};

}  // namespace bitkernel::data
