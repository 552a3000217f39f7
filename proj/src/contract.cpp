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

#include "contractgate/contract.hpp"

#include <algorithm>

namespace contractgate {

namespace {

// Conjunction with nested conjunctions flattened into one left-leaning
// chain, so that printing one conjunct per line reads back identically.
Expression flat_and(const std::vector<Expression>& parts)
{
  std::vector<Expression> flat;
  for (const Expression& p : parts) {
    for (Expression& c : conjuncts(p)) {
      flat.push_back(std::move(c));
    }
  }
  return conjoin(flat);
}

Expression actor_predicate(const std::string& role)
{
  return Expression::make_compare(
      CompareOp::eq, Expression::make_path(Path::from_dotted("user.role")),
      Expression::make_literal(Value(role)));
}

bool is_expiry(const Expression& e)
{
  if (e.kind() != ExprKind::path_ref) {
    return false;
  }
  const auto& segs = e.path().segments();
  return e.path().ns() == Namespace::resource && !segs.empty() &&
         segs.back() == "expires_at";
}

std::string wrap_conjunct(const Expression& e)
{
  std::string s = e.to_string();
  if (e.kind() == ExprKind::or_ || e.kind() == ExprKind::implies) {
    return "(" + s + ")";
  }
  return s;
}

std::string render_block(const Expression& e)
{
  std::string out;
  std::vector<Expression> parts = conjuncts(e);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    out += "  " + (parts.size() == 1 ? parts[i].to_string()
                                     : wrap_conjunct(parts[i]));
    out += i + 1 < parts.size() ? " and\n" : "\n";
  }
  return out;
}

} // namespace


std::string Contract::id() const
{
  return std::string(to_string(method)) + " " + uri_template;
}

UnmodeledMethod::UnmodeledMethod(HttpMethod method, const std::string& uri)
  : std::runtime_error("unmodeled method: no transition is triggered by " +
                       std::string(to_string(method)) + " " + uri)
{}


std::string_view to_string(ExpiresReading r)
{
  return r == ExpiresReading::paper ? "paper" : "corrected";
}

std::optional<ExpiresReading> parse_expires_reading(std::string_view text)
{
  if (text == "paper") {
    return ExpiresReading::paper;
  }
  if (text == "corrected") {
    return ExpiresReading::corrected;
  }
  return std::nullopt;
}

Expression apply_expires_reading(const Expression& e, ExpiresReading reading)
{
  switch (e.kind()) {
    case ExprKind::and_:
      return Expression::make_and(apply_expires_reading(e.lhs(), reading),
                                  apply_expires_reading(e.rhs(), reading));
    case ExprKind::or_:
      return Expression::make_or(apply_expires_reading(e.lhs(), reading),
                                 apply_expires_reading(e.rhs(), reading));
    case ExprKind::implies:
      return Expression::make_implies(
          apply_expires_reading(e.lhs(), reading),
          apply_expires_reading(e.rhs(), reading));
    case ExprKind::not_:
      return Expression::make_not(apply_expires_reading(e.operand(), reading));
    case ExprKind::compare: {
      if (e.op() != CompareOp::le) {
        return e;
      }
      const Expression* clock = nullptr;
      const Expression* expiry = nullptr;
      for (const Expression* side : {&e.lhs(), &e.rhs()}) {
        if (side->kind() == ExprKind::clock_time) {
          clock = side;
        } else if (is_expiry(*side)) {
          expiry = side;
        }
      }
      if (clock == nullptr || expiry == nullptr) {
        return e;
      }
      return reading == ExpiresReading::paper
                 ? Expression::make_compare(CompareOp::le, *expiry, *clock)
                 : Expression::make_compare(CompareOp::le, *clock, *expiry);
    }
    default:
      return e;
  }
}


PathSet compute_snapshot_paths(const Expression& pre, const Expression& post)
{
  PathSet out;
  auto keep = [&out](const PathSet& paths) {
    for (const Path& p : paths) {
      if (p.ns() != Namespace::response) {
        out.insert(p);
      }
    }
  };
  keep(antecedent_paths(post));
  keep(free_paths(pre));
  return out;
}


Contract derive_functional_contract(HttpMethod method, std::string_view uri,
                                    const BehavioralModel& bm)
{
  std::vector<Expression> alternatives;
  std::vector<Expression> obligations;
  for (const Transition& t : bm.transitions) {
    if (t.trigger.method != method || t.trigger.uri_template != uri) {
      continue;
    }
    const State* src = bm.find_state(t.source);
    const State* tgt = bm.find_state(t.target);
    std::vector<Expression> before{src ? src->invariant : Expression(),
                                   t.guard.value_or(Expression())};
    std::vector<Expression> after{tgt ? tgt->invariant : Expression(),
                                  t.effect.value_or(Expression())};
    if (t.actor_role) {
      before.push_back(actor_predicate(*t.actor_role));
      after.push_back(actor_predicate(*t.actor_role));
    }
    Expression antecedent = flat_and(before);
    alternatives.push_back(antecedent);
    obligations.push_back(
        Expression::make_implies(antecedent, flat_and(after)));
  }
  if (alternatives.empty()) {
    throw UnmodeledMethod(method, std::string(uri));
  }

  Contract c;
  c.method = method;
  c.uri_template = std::string(uri);
  c.pre = disjoin(alternatives);
  c.post = flat_and(obligations);
  c.snapshot_paths = compute_snapshot_paths(c.pre, c.post);
  return c;
}

Contract merge_security_rules(Contract c,
                              const std::vector<SecurityRule>& rules)
{
  std::vector<Expression> ifs;
  std::vector<Expression> pre{c.pre};
  std::vector<Expression> post{c.post};
  std::vector<Expression> always;
  for (const SecurityRule& r : rules) {
    if (r.applies_to.method != c.method ||
        r.applies_to.uri_template != c.uri_template) {
      continue;
    }
    if (const auto* cond = std::get_if<ConditionalRule>(&r.body)) {
      ifs.push_back(cond->if_expr);
      post.push_back(Expression::make_implies(cond->if_expr, cond->then_expr));
    } else {
      always.push_back(std::get<UnconditionalRule>(r.body).rule_expr);
    }
  }
  if (!ifs.empty()) {
    pre.push_back(disjoin(ifs));
  }
  pre.insert(pre.end(), always.begin(), always.end());
  post.insert(post.end(), always.begin(), always.end());

  c.pre = flat_and(pre);
  c.post = flat_and(post);
  c.snapshot_paths = compute_snapshot_paths(c.pre, c.post);
  return c;
}


std::vector<Contract> derive_contracts(const Model& m, ExpiresReading reading)
{
  std::vector<Trigger> triggers;
  for (const Transition& t : m.behavior.transitions) {
    if (std::find(triggers.begin(), triggers.end(), t.trigger) ==
        triggers.end()) {
      triggers.push_back(t.trigger);
    }
  }

  std::vector<Contract> out;
  for (const Trigger& t : triggers) {
    Contract c = merge_security_rules(
        derive_functional_contract(t.method, t.uri_template, m.behavior),
        m.rules);
    c.pre = apply_expires_reading(c.pre, reading);
    c.post = apply_expires_reading(c.post, reading);
    out.push_back(std::move(c));
  }
  return out;
}

const Contract* find_contract(const std::vector<Contract>& contracts,
                              HttpMethod method, std::string_view uri_template)
{
  for (const Contract& c : contracts) {
    if (c.method == method && c.uri_template == uri_template) {
      return &c;
    }
  }
  return nullptr;
}

std::string render_contract(const Contract& c)
{
  std::string out = "PreCondition(" + c.id() + "):\n";
  out += render_block(c.pre);
  out += "PostCondition(" + c.id() + "):\n";
  out += render_block(c.post);
  return out;
}

} // namespace contractgate
