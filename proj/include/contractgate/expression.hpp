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

#ifndef CONTRACTGATE_EXPRESSION_HPP
#define CONTRACTGATE_EXPRESSION_HPP

#include <cstddef>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "contractgate/value.hpp"

namespace contractgate {

/**
 * Which value source a path addresses. The namespace is decided by the
 * first segment: `self`, `request` and `response` are reserved, anything
 * else names a resource definition.
 */
enum class Namespace { resource, request, response, self_ns };


class Path
{
public:
  Path() = default;
  explicit Path(std::vector<std::string> segments);

  // Splits on '.'; no validation beyond that.
  static Path from_dotted(std::string_view dotted);

  Namespace ns() const { return ns_; }
  const std::vector<std::string>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }

  // For resource paths, the lowercased definition name; for reserved
  // namespaces, the namespace keyword.
  std::string head() const;

  // Segments after the head, dot-joined ("" when there are none).
  std::string tail() const;

  // Dotted text as written.
  std::string text() const;

  // Canonical lookup key: resource heads are matched case-insensitively,
  // so `Token.token` and `token.token` share a key.
  std::string key() const;

  bool operator==(const Path& other) const
  {
    return segments_ == other.segments_;
  }

private:
  std::vector<std::string> segments_;
  Namespace ns_ = Namespace::resource;
};

struct PathKeyLess
{
  bool operator()(const Path& a, const Path& b) const
  {
    return a.key() < b.key();
  }
};

using PathSet = std::set<Path, PathKeyLess>;


enum class CompareOp { eq, ne, lt, le, gt, ge };

std::string_view to_string(CompareOp op);

enum class ExprKind {
  and_,
  or_,
  not_,
  implies,
  compare,
  size_of,
  is_invalid,
  path_ref,
  literal,
  clock_time,
};


/**
 * Immutable predicate AST node handle. Copies share structure; equality
 * is structural. A default-constructed Expression is the literal True.
 */
class Expression
{
public:
  Expression();

  static Expression make_and(Expression lhs, Expression rhs);
  static Expression make_or(Expression lhs, Expression rhs);
  static Expression make_not(Expression operand);
  static Expression make_implies(Expression lhs, Expression rhs);
  static Expression make_compare(CompareOp op, Expression lhs, Expression rhs);
  static Expression make_size_of(Path path);
  static Expression make_is_invalid(Path path);
  static Expression make_path(Path path);
  static Expression make_literal(Value value);
  static Expression make_clock_time();

  ExprKind kind() const;

  // Binary nodes (and/or/implies/compare).
  const Expression& lhs() const;
  const Expression& rhs() const;

  // Not.
  const Expression& operand() const;

  CompareOp op() const;

  // size_of / is_invalid / path_ref.
  const Path& path() const;

  const Value& literal() const;

  bool is_true_literal() const;

  bool operator==(const Expression& other) const;

  // Surface syntax; parse_expression(to_string()) == *this.
  std::string to_string() const;

  struct Node;

private:
  explicit Expression(std::shared_ptr<const Node> node);

  std::shared_ptr<const Node> node_;
};


class ParseError : public std::runtime_error
{
public:
  ParseError(std::size_t offset, std::vector<std::string> expected,
             const std::string& message);

  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

/**
 * Parses the predicate language:
 *
 *   expr    := or_expr ("==>" expr)?
 *   or_expr := and_expr ("or" and_expr)*
 *   and_expr:= unary ("and" unary)*
 *   unary   := "not" unary | cmp
 *   cmp     := term (("="|"<>"|"<"|"<="|">"|">=") term)?
 *   term    := "(" expr ")" | literal | "clockTime"
 *            | path (("->"|".") ("size"|"oclIsInvalid") "(" ")")?
 *
 * Both `p->size()` and `p.size()` are accepted, likewise for
 * oclIsInvalid. Throws ParseError with the byte offset of the offending
 * token and the set of tokens that would have been accepted there.
 */
Expression parse_expression(std::string_view text);


// Flattens the top-level chain of `and` nodes, left to right.
std::vector<Expression> conjuncts(const Expression& e);

// Left-associated conjunction/disjunction; literal True operands are
// dropped from conjunctions. An empty conjunction is True.
Expression conjoin(const std::vector<Expression>& parts);
Expression disjoin(const std::vector<Expression>& parts);

PathSet free_paths(const Expression& e);

// Paths read by implication antecedents, i.e. the pre-state values a
// postcondition depends on.
PathSet antecedent_paths(const Expression& e);


enum class Phase { pre, post };

std::string_view to_string(Phase p);

} // namespace contractgate

#endif // CONTRACTGATE_EXPRESSION_HPP
