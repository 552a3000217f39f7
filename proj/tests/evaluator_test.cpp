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

#include <gtest/gtest.h>

#include <map>

#include "support.hpp"

using namespace contractgate;
using namespace cgtest;

namespace {

constexpr TriBool T = TriBool::True;
constexpr TriBool F = TriBool::False;
constexpr TriBool U = TriBool::Unknown;

struct Bindings
{
  std::map<std::string, Value> pre;
  std::map<std::string, Value> post;
};

Environment env_for(const Bindings& b, Phase phase,
                    Timestamp pre_now = fixed_now(),
                    Timestamp post_now = fixed_now())
{
  return Environment(
      [&b](const Path& p, Phase ph) {
        const auto& m = ph == Phase::pre ? b.pre : b.post;
        auto it = m.find(p.text());
        return it == m.end() ? Value(Absent{}) : it->second;
      },
      pre_now, post_now, phase);
}

TriBool eval(const std::string& text, const Bindings& b,
             Phase phase = Phase::pre)
{
  Environment env = env_for(b, phase);
  return evaluate(parse_expression(text), env);
}

} // namespace


TEST(Compare, Numbers)
{
  Bindings b;
  b.pre["a.n"] = Value(3);
  EXPECT_EQ(eval("a.n=3", b), T);
  EXPECT_EQ(eval("a.n<>3", b), F);
  EXPECT_EQ(eval("a.n<4", b), T);
  EXPECT_EQ(eval("a.n>=4", b), F);
  EXPECT_EQ(eval("a.n<=3", b), T);
  EXPECT_EQ(eval("a.n>2", b), T);
}

TEST(Compare, SizeAgainstIntegers)
{
  Bindings b;
  b.pre["a.x"] = Value("v");
  b.pre["a.c"] = Value(Count{4});
  b.pre["a.bad"] = Value(Invalid{});
  EXPECT_EQ(eval("a.x->size()=1", b), T);
  EXPECT_EQ(eval("a.missing->size()=0", b), T);
  EXPECT_EQ(eval("a.bad->size()=0", b), T);
  EXPECT_EQ(eval("a.c->size()=4", b), T);
  EXPECT_EQ(eval("a.c=4", b), T);
}

TEST(Compare, TimestampsAndText)
{
  Bindings b;
  b.pre["t.at"] = Value(*parse_timestamp("2026-01-01T01:00:00Z"));
  b.pre["t.text"] = Value("2026-01-01T01:00:00Z");
  b.pre["t.junk"] = Value("soon");
  EXPECT_EQ(eval("clockTime<=t.at", b), T);
  EXPECT_EQ(eval("t.at<=clockTime", b), F);
  EXPECT_EQ(eval("clockTime<t.text", b), T);
  EXPECT_EQ(eval("clockTime<t.junk", b), U);
  EXPECT_EQ(eval("t.at=t.text", b), T);
}

TEST(Compare, Strings)
{
  Bindings b;
  b.pre["u.role"] = Value("admin");
  EXPECT_EQ(eval("u.role='admin'", b), T);
  EXPECT_EQ(eval("u.role<>'admin'", b), F);
  EXPECT_EQ(eval("u.role='member'", b), F);
  EXPECT_EQ(eval("u.role=1", b), U);
}

TEST(Compare, BooleansOnlyEquality)
{
  Bindings b;
  b.pre["self.processing"] = Value(false);
  EXPECT_EQ(eval("self.processing=False", b), T);
  EXPECT_EQ(eval("self.processing<>False", b), F);
  EXPECT_EQ(eval("self.processing=True", b), F);
  EXPECT_EQ(eval("self.processing<True", b), U);
}

TEST(Compare, UndefinedOperandsAreUnknown)
{
  Bindings b;
  b.pre["a.bad"] = Value(Invalid{});
  EXPECT_EQ(eval("a.missing='x'", b), U);
  EXPECT_EQ(eval("a.bad=1", b), U);
  EXPECT_EQ(eval("a.missing=a.missing", b), U);
  EXPECT_EQ(eval("not a.missing=1", b), U);
}

TEST(Compare, IsInvalid)
{
  Bindings b;
  b.pre["a.x"] = Value("v");
  b.pre["a.bad"] = Value(Invalid{});
  EXPECT_EQ(eval("a.x->oclIsInvalid()", b), F);
  EXPECT_EQ(eval("a.bad->oclIsInvalid()", b), T);
  EXPECT_EQ(eval("a.missing->oclIsInvalid()", b), T);
}

TEST(Compare, BarePaths)
{
  Bindings b;
  b.pre["a.flag"] = Value(true);
  b.pre["a.name"] = Value("x");
  EXPECT_EQ(eval("a.flag", b), T);
  EXPECT_EQ(eval("a.name", b), U);
  EXPECT_EQ(eval("a.missing", b), U);
  EXPECT_EQ(eval("True and not False", b), T);
}


TEST(Kleene, GeneratedExpressionsMatchOracle)
{
  ExprGenerator gen(11);
  int checked = 0;
  for (int i = 0; i < 400; ++i) {
    Formula f = abstract_atoms(gen.next(4));
    auto atoms = formula_atoms(f);
    if (atoms.size() > 4) {
      continue;
    }
    Expression e = to_expression(f);
    for_each_assignment(atoms, [&](const std::map<std::string, TriBool>& a) {
      ASSERT_EQ(library_eval(e, a), oracle_eval(f, a))
          << e.to_string();
    });
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(Kleene, ModelExpressionsMatchOracle)
{
  Model m = keystone_model();
  std::vector<Expression> exprs;
  for (const State& s : m.behavior.states) {
    exprs.push_back(s.invariant);
  }
  for (const Transition& t : m.behavior.transitions) {
    if (t.guard) exprs.push_back(*t.guard);
    if (t.effect) exprs.push_back(*t.effect);
  }
  for (const SecurityRule& r : m.rules) {
    if (auto* c = std::get_if<ConditionalRule>(&r.body)) {
      exprs.push_back(Expression::make_implies(c->if_expr, c->then_expr));
    } else {
      exprs.push_back(std::get<UnconditionalRule>(r.body).rule_expr);
    }
  }
  for (const Contract& c : derive_contracts(m)) {
    exprs.push_back(c.pre);
    exprs.push_back(c.post);
  }
  ASSERT_FALSE(exprs.empty());
  for (const Expression& e : exprs) {
    Formula f = abstract_atoms(e);
    auto atoms = formula_atoms(f);
    if (atoms.size() > 8) {
      continue;
    }
    Expression lifted = to_expression(f);
    for_each_assignment(atoms, [&](const std::map<std::string, TriBool>& a) {
      ASSERT_EQ(library_eval(lifted, a), oracle_eval(f, a))
          << e.to_string();
    });
  }
}

TEST(Kleene, Monotone)
{
  // Refining an Unknown atom never flips a decided result.
  ExprGenerator gen(23);
  for (int i = 0; i < 200; ++i) {
    Formula f = abstract_atoms(gen.next(4));
    auto atoms = formula_atoms(f);
    if (atoms.size() > 4) {
      continue;
    }
    Expression e = to_expression(f);
    for_each_assignment(atoms, [&](const std::map<std::string, TriBool>& a) {
      TriBool base = library_eval(e, a);
      if (base == U) {
        return;
      }
      for (const auto& [name, v] : a) {
        if (v != U) {
          continue;
        }
        for (TriBool r : {T, F}) {
          auto refined = a;
          refined[name] = r;
          ASSERT_EQ(library_eval(e, refined), base) << e.to_string();
        }
      }
    });
  }
}


TEST(Environment, CachesPerPathAndPhase)
{
  int calls = 0;
  Environment env(
      [&calls](const Path&, Phase) {
        ++calls;
        return Value("x");
      },
      fixed_now(), Phase::post);
  Expression e = parse_expression(
      "a.x->size()=1 and a.x='x' and A.x<>'y' and (a.x='x' ==> a.x='x')");
  EXPECT_EQ(evaluate(e, env), T);
  // one lookup per phase: post for the body, pre for the antecedent
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(env.resolver_calls(), 2u);
  evaluate(e, env);
  EXPECT_EQ(calls, 2);
}

TEST(Environment, ImplicationReadsPreStateAntecedent)
{
  Bindings b;
  b.pre["user.id"] = Value("u-1");
  b.post["user.id"] = Value(Absent{});
  EXPECT_EQ(eval("user.id->size()=1 ==> user.id->size()=0", b,
                 Phase::post),
            T);
  EXPECT_EQ(eval("user.id->size()=1 and user.id->size()=0", b, Phase::post),
            F);
  b.pre.erase("user.id");
  // Vacuous: the antecedent is false before the request.
  EXPECT_EQ(eval("user.id->size()=1 ==> False", b, Phase::post), T);
}

TEST(Environment, ClockPerPhase)
{
  Bindings b;
  b.pre["t.at"] = Value(fixed_now() + std::chrono::seconds(10));
  b.post["t.at"] = b.pre["t.at"];
  Environment env = env_for(b, Phase::post, fixed_now(),
                            fixed_now() + std::chrono::seconds(20));
  EXPECT_EQ(evaluate(parse_expression("clockTime<=t.at"), env), F);
  EXPECT_EQ(evaluate_in_phase(parse_expression("clockTime<=t.at"), env,
                              Phase::pre),
            T);
}

TEST(Environment, NoResolverMeansAbsent)
{
  Environment env(nullptr, fixed_now(), Phase::pre);
  EXPECT_EQ(evaluate(parse_expression("a.x->size()=0"), env), T);
}
