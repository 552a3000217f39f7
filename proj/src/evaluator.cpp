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

#include "contractgate/evaluator.hpp"

#include <compare>
#include <optional>

namespace contractgate {

Environment::Environment(Resolver resolver, Timestamp now, Phase phase)
  : Environment(std::move(resolver), now, now, phase)
{}

Environment::Environment(Resolver resolver, Timestamp pre_now,
                         Timestamp post_now, Phase phase)
  : resolver_(std::move(resolver)),
    pre_now_(pre_now),
    post_now_(post_now),
    phase_(phase)
{}

Value Environment::lookup(const Path& path, Phase phase)
{
  auto key = std::make_pair(path.key(), phase);
  auto it = cache_.find(key);
  if (it != cache_.end()) {
    return it->second;
  }
  ++resolver_calls_;
  Value v = resolver_ ? resolver_(path, phase) : Value(Absent{});
  cache_.emplace(std::move(key), v);
  return v;
}


namespace {

std::uint64_t size_of(const Value& v)
{
  if (!v.is_defined()) {
    return 0;
  }
  if (const Count* c = v.as_count()) {
    return c->n;
  }
  return 1;
}

TriBool decide(CompareOp op, std::partial_ordering order)
{
  if (order == std::partial_ordering::unordered) {
    return TriBool::Unknown;
  }
  switch (op) {
    case CompareOp::eq: return tri(order == 0);
    case CompareOp::ne: return tri(order != 0);
    case CompareOp::lt: return tri(order < 0);
    case CompareOp::le: return tri(order <= 0);
    case CompareOp::gt: return tri(order > 0);
    case CompareOp::ge: return tri(order >= 0);
  }
  return TriBool::Unknown;
}

std::optional<std::int64_t> as_number(const Value& v)
{
  if (const std::int64_t* i = v.as_int()) {
    return *i;
  }
  if (const Count* c = v.as_count()) {
    return static_cast<std::int64_t>(c->n);
  }
  return std::nullopt;
}

std::optional<Timestamp> as_time(const Value& v)
{
  if (const Timestamp* t = v.as_timestamp()) {
    return *t;
  }
  if (const std::string* s = v.as_text()) {
    return parse_timestamp(*s);
  }
  return std::nullopt;
}

TriBool compare_values(CompareOp op, const Value& a, const Value& b)
{
  if (!a.is_defined() || !b.is_defined()) {
    return TriBool::Unknown;
  }

  auto na = as_number(a);
  auto nb = as_number(b);
  if (na && nb) {
    return decide(op, *na <=> *nb);
  }

  if (a.as_timestamp() || b.as_timestamp()) {
    auto ta = as_time(a);
    auto tb = as_time(b);
    if (ta && tb) {
      return decide(op, *ta <=> *tb);
    }
    return TriBool::Unknown;
  }

  if (const std::string* sa = a.as_text()) {
    if (const std::string* sb = b.as_text()) {
      return decide(op, *sa <=> *sb);
    }
    return TriBool::Unknown;
  }

  const bool* ba = a.as_bool();
  const bool* bb = b.as_bool();
  if (ba && bb) {
    if (op == CompareOp::eq) {
      return tri(*ba == *bb);
    }
    if (op == CompareOp::ne) {
      return tri(*ba != *bb);
    }
  }
  return TriBool::Unknown;
}


class Evaluator
{
public:
  explicit Evaluator(Environment& env) : env_(env) {}

  TriBool truth(const Expression& e, Phase phase)
  {
    switch (e.kind()) {
      case ExprKind::and_: {
        TriBool l = truth(e.lhs(), phase);
        TriBool r = truth(e.rhs(), phase);
        return l && r;
      }
      case ExprKind::or_: {
        TriBool l = truth(e.lhs(), phase);
        TriBool r = truth(e.rhs(), phase);
        return l || r;
      }
      case ExprKind::not_:
        return !truth(e.operand(), phase);
      case ExprKind::implies: {
        // Antecedents describe the state the request arrived in.
        TriBool l = truth(e.lhs(), Phase::pre);
        TriBool r = truth(e.rhs(), phase);
        return implies(l, r);
      }
      case ExprKind::compare:
        return compare_values(e.op(), operand(e.lhs(), phase),
                              operand(e.rhs(), phase));
      case ExprKind::is_invalid: {
        Value v = env_.lookup(e.path(), phase);
        return tri(!v.is_defined());
      }
      case ExprKind::path_ref: {
        Value v = env_.lookup(e.path(), phase);
        if (const bool* b = v.as_bool()) {
          return tri(*b);
        }
        return TriBool::Unknown;
      }
      case ExprKind::literal: {
        if (const bool* b = e.literal().as_bool()) {
          return tri(*b);
        }
        return TriBool::Unknown;
      }
      case ExprKind::size_of:
      case ExprKind::clock_time:
        return TriBool::Unknown;
    }
    return TriBool::Unknown;
  }

private:
  Value operand(const Expression& e, Phase phase)
  {
    switch (e.kind()) {
      case ExprKind::path_ref:
        return env_.lookup(e.path(), phase);
      case ExprKind::literal:
        return e.literal();
      case ExprKind::size_of:
        return Value(Count{size_of(env_.lookup(e.path(), phase))});
      case ExprKind::clock_time:
        return Value(env_.clock(phase));
      default:
        // Not produced by the parser; fold to undefined.
        return Value(Invalid{});
    }
  }

  Environment& env_;
};

} // namespace


TriBool evaluate(const Expression& e, Environment& env)
{
  return Evaluator(env).truth(e, env.phase());
}

TriBool evaluate_in_phase(const Expression& e, Environment& env, Phase phase)
{
  return Evaluator(env).truth(e, phase);
}

} // namespace contractgate
