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

#include "contractgate/expression.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>

namespace contractgate {

namespace {

std::string lowercase(std::string_view s)
{
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

} // namespace


Path::Path(std::vector<std::string> segments) : segments_(std::move(segments))
{
  if (!segments_.empty()) {
    const std::string& first = segments_.front();
    if (first == "self") {
      ns_ = Namespace::self_ns;
    } else if (first == "request") {
      ns_ = Namespace::request;
    } else if (first == "response") {
      ns_ = Namespace::response;
    }
  }
}

Path Path::from_dotted(std::string_view dotted)
{
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = dotted.find('.', start);
    parts.emplace_back(dotted.substr(start, dot - start));
    if (dot == std::string_view::npos) {
      break;
    }
    start = dot + 1;
  }
  return Path(std::move(parts));
}

std::string Path::head() const
{
  if (segments_.empty()) {
    return {};
  }
  return ns_ == Namespace::resource ? lowercase(segments_.front())
                                    : segments_.front();
}

std::string Path::tail() const
{
  std::string out;
  for (std::size_t i = 1; i < segments_.size(); ++i) {
    if (i > 1) {
      out += '.';
    }
    out += segments_[i];
  }
  return out;
}

std::string Path::text() const
{
  std::string out;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (i > 0) {
      out += '.';
    }
    out += segments_[i];
  }
  return out;
}

std::string Path::key() const
{
  std::string t = tail();
  return t.empty() ? head() : head() + "." + t;
}


std::string_view to_string(CompareOp op)
{
  switch (op) {
    case CompareOp::eq: return "=";
    case CompareOp::ne: return "<>";
    case CompareOp::lt: return "<";
    case CompareOp::le: return "<=";
    case CompareOp::gt: return ">";
    case CompareOp::ge: return ">=";
  }
  return "=";
}

std::string_view to_string(Phase p)
{
  return p == Phase::pre ? "pre" : "post";
}


struct Expression::Node
{
  ExprKind kind = ExprKind::literal;
  CompareOp op = CompareOp::eq;
  Expression a;
  Expression b;
  Path path;
  Value literal;
};

namespace {

const std::shared_ptr<const Expression::Node>& true_node();

std::shared_ptr<Expression::Node> new_node(ExprKind kind)
{
  auto n = std::make_shared<Expression::Node>();
  n->kind = kind;
  return n;
}

} // namespace

Expression::Expression() : node_(nullptr) {}

Expression::Expression(std::shared_ptr<const Node> node)
  : node_(std::move(node))
{}

Expression Expression::make_and(Expression lhs, Expression rhs)
{
  auto n = new_node(ExprKind::and_);
  n->a = std::move(lhs);
  n->b = std::move(rhs);
  return Expression(std::move(n));
}

Expression Expression::make_or(Expression lhs, Expression rhs)
{
  auto n = new_node(ExprKind::or_);
  n->a = std::move(lhs);
  n->b = std::move(rhs);
  return Expression(std::move(n));
}

Expression Expression::make_not(Expression operand)
{
  auto n = new_node(ExprKind::not_);
  n->a = std::move(operand);
  return Expression(std::move(n));
}

Expression Expression::make_implies(Expression lhs, Expression rhs)
{
  auto n = new_node(ExprKind::implies);
  n->a = std::move(lhs);
  n->b = std::move(rhs);
  return Expression(std::move(n));
}

Expression Expression::make_compare(CompareOp op, Expression lhs,
                                    Expression rhs)
{
  auto n = new_node(ExprKind::compare);
  n->op = op;
  n->a = std::move(lhs);
  n->b = std::move(rhs);
  return Expression(std::move(n));
}

Expression Expression::make_size_of(Path path)
{
  auto n = new_node(ExprKind::size_of);
  n->path = std::move(path);
  return Expression(std::move(n));
}

Expression Expression::make_is_invalid(Path path)
{
  auto n = new_node(ExprKind::is_invalid);
  n->path = std::move(path);
  return Expression(std::move(n));
}

Expression Expression::make_path(Path path)
{
  auto n = new_node(ExprKind::path_ref);
  n->path = std::move(path);
  return Expression(std::move(n));
}

Expression Expression::make_literal(Value value)
{
  auto n = new_node(ExprKind::literal);
  n->literal = std::move(value);
  return Expression(std::move(n));
}

Expression Expression::make_clock_time()
{
  return Expression(new_node(ExprKind::clock_time));
}

// A null node_ stands for the literal True.
ExprKind Expression::kind() const
{
  return node_ ? node_->kind : ExprKind::literal;
}

const Expression& Expression::lhs() const
{
  assert(node_);
  return node_->a;
}

const Expression& Expression::rhs() const
{
  assert(node_);
  return node_->b;
}

const Expression& Expression::operand() const
{
  assert(node_);
  return node_->a;
}

CompareOp Expression::op() const
{
  return node_ ? node_->op : CompareOp::eq;
}

const Path& Expression::path() const
{
  return node_ ? node_->path : true_node()->path;
}

const Value& Expression::literal() const
{
  return node_ ? node_->literal : true_node()->literal;
}

bool Expression::is_true_literal() const
{
  if (kind() != ExprKind::literal) {
    return false;
  }
  const bool* b = literal().as_bool();
  return b != nullptr && *b;
}

bool Expression::operator==(const Expression& other) const
{
  if (node_ == other.node_) {
    return true;
  }
  if (kind() != other.kind()) {
    return false;
  }
  switch (kind()) {
    case ExprKind::and_:
    case ExprKind::or_:
    case ExprKind::implies:
      return lhs() == other.lhs() && rhs() == other.rhs();
    case ExprKind::compare:
      return op() == other.op() && lhs() == other.lhs() &&
             rhs() == other.rhs();
    case ExprKind::not_:
      return operand() == other.operand();
    case ExprKind::size_of:
    case ExprKind::is_invalid:
    case ExprKind::path_ref:
      return path() == other.path();
    case ExprKind::literal:
      return literal() == other.literal();
    case ExprKind::clock_time:
      return true;
  }
  return false;
}

namespace {

const std::shared_ptr<const Expression::Node>& true_node()
{
  static const auto node = [] {
    auto n = std::make_shared<Expression::Node>();
    n->kind = ExprKind::literal;
    n->literal = Value(true);
    return std::shared_ptr<const Expression::Node>(n);
  }();
  return node;
}

// Binding strength, loosest first.
enum Level { kImplies = 0, kOr = 1, kAnd = 2, kNot = 3, kCompare = 4, kAtom = 5 };

int level_of(const Expression& e)
{
  switch (e.kind()) {
    case ExprKind::implies: return kImplies;
    case ExprKind::or_: return kOr;
    case ExprKind::and_: return kAnd;
    case ExprKind::not_: return kNot;
    case ExprKind::compare: return kCompare;
    default: return kAtom;
  }
}

std::string quote(const std::string& text)
{
  std::string out = "'";
  for (char c : text) {
    if (c == '\'') {
      out += "''";
    } else {
      out += c;
    }
  }
  out += '\'';
  return out;
}

std::string print_literal(const Value& v)
{
  if (const bool* b = v.as_bool()) {
    return *b ? "True" : "False";
  }
  if (const std::int64_t* i = v.as_int()) {
    return std::to_string(*i);
  }
  if (const std::string* s = v.as_text()) {
    return quote(*s);
  }
  if (const Count* c = v.as_count()) {
    return std::to_string(c->n);
  }
  if (const Timestamp* t = v.as_timestamp()) {
    return quote(format_timestamp(*t));
  }
  // Absent/Invalid have no surface syntax.
  return "'" + describe(v) + "'";
}

void print(const Expression& e, int min_level, std::string& out)
{
  const int level = level_of(e);
  const bool parens = level < min_level;
  if (parens) {
    out += '(';
  }
  switch (e.kind()) {
    case ExprKind::implies:
      print(e.lhs(), kOr, out);
      out += " ==> ";
      print(e.rhs(), kImplies, out);
      break;
    case ExprKind::or_:
      print(e.lhs(), kOr, out);
      out += " or ";
      print(e.rhs(), kAnd, out);
      break;
    case ExprKind::and_:
      print(e.lhs(), kAnd, out);
      out += " and ";
      print(e.rhs(), kNot, out);
      break;
    case ExprKind::not_:
      out += "not ";
      print(e.operand(), kNot, out);
      break;
    case ExprKind::compare:
      print(e.lhs(), kAtom, out);
      out += to_string(e.op());
      print(e.rhs(), kAtom, out);
      break;
    case ExprKind::size_of:
      out += e.path().text();
      out += "->size()";
      break;
    case ExprKind::is_invalid:
      out += e.path().text();
      out += ".oclIsInvalid()";
      break;
    case ExprKind::path_ref:
      out += e.path().text();
      break;
    case ExprKind::literal:
      out += print_literal(e.literal());
      break;
    case ExprKind::clock_time:
      out += "clockTime";
      break;
  }
  if (parens) {
    out += ')';
  }
}

void collect_paths(const Expression& e, PathSet& out)
{
  switch (e.kind()) {
    case ExprKind::and_:
    case ExprKind::or_:
    case ExprKind::implies:
    case ExprKind::compare:
      collect_paths(e.lhs(), out);
      collect_paths(e.rhs(), out);
      break;
    case ExprKind::not_:
      collect_paths(e.operand(), out);
      break;
    case ExprKind::size_of:
    case ExprKind::is_invalid:
    case ExprKind::path_ref:
      out.insert(e.path());
      break;
    case ExprKind::literal:
    case ExprKind::clock_time:
      break;
  }
}

// Implication antecedents are read in the pre phase wherever they occur.
void collect_antecedent_paths(const Expression& e, PathSet& out)
{
  switch (e.kind()) {
    case ExprKind::implies:
      collect_paths(e.lhs(), out);
      collect_antecedent_paths(e.rhs(), out);
      break;
    case ExprKind::and_:
    case ExprKind::or_:
      collect_antecedent_paths(e.lhs(), out);
      collect_antecedent_paths(e.rhs(), out);
      break;
    case ExprKind::not_:
      collect_antecedent_paths(e.operand(), out);
      break;
    default:
      break;
  }
}

} // namespace


std::string Expression::to_string() const
{
  std::string out;
  print(*this, kImplies, out);
  return out;
}


std::vector<Expression> conjuncts(const Expression& e)
{
  if (e.kind() != ExprKind::and_) {
    return {e};
  }
  std::vector<Expression> out = conjuncts(e.lhs());
  std::vector<Expression> right = conjuncts(e.rhs());
  out.insert(out.end(), right.begin(), right.end());
  return out;
}

Expression conjoin(const std::vector<Expression>& parts)
{
  Expression result;
  bool first = true;
  for (const Expression& p : parts) {
    if (p.is_true_literal()) {
      continue;
    }
    result = first ? p : Expression::make_and(result, p);
    first = false;
  }
  return result;
}

Expression disjoin(const std::vector<Expression>& parts)
{
  if (parts.empty()) {
    return Expression::make_literal(Value(false));
  }
  Expression result = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    result = Expression::make_or(result, parts[i]);
  }
  return result;
}

PathSet free_paths(const Expression& e)
{
  PathSet out;
  collect_paths(e, out);
  return out;
}

PathSet antecedent_paths(const Expression& e)
{
  PathSet out;
  collect_antecedent_paths(e, out);
  return out;
}

} // namespace contractgate
