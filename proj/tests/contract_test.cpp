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

#include <random>
#include <sstream>

#include "support.hpp"

using namespace contractgate;
using namespace cgtest;

namespace {

const std::string kPostPre = post_token_listing().pre;
const std::string kPostPost = post_token_listing().post;
const std::string kDeletePre = delete_user_listing().pre;
const std::string kDeletePost = delete_user_listing().post;

const Contract& contract(const std::vector<Contract>& cs, HttpMethod m,
                         const std::string& uri)
{
  const Contract* c = find_contract(cs, m, uri);
  if (c == nullptr) {
    throw std::runtime_error("no contract for " + uri);
  }
  return *c;
}

void expect_equivalent(const Expression& derived, const std::string& text)
{
  Formula a = abstract_atoms(derived);
  Formula b = abstract_atoms(parse_expression(text));
  std::string counterexample;
  EXPECT_TRUE(k3_equivalent(a, b, &counterexample))
      << derived.to_string() << "\nvs\n" << text << "\n" << counterexample;
}

std::size_t occurrences(const std::string& hay, const std::string& needle)
{
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos;
       p = hay.find(needle, p + 1)) {
    ++n;
  }
  return n;
}

// Splits rendered output into the expression text under each heading.
std::vector<std::string> blocks(const std::string& rendered)
{
  std::vector<std::string> out;
  std::istringstream in(rendered);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("  ", 0) == 0) {
      out.back() += " " + line.substr(2);
    } else if (!line.empty()) {
      out.emplace_back();
    }
  }
  return out;
}

BehavioralModel two_state_machine()
{
  BehavioralModel bm;
  bm.states.push_back({"A", parse_expression("item.id->size()=0")});
  bm.states.push_back({"B", parse_expression("item.id->size()=1")});
  bm.states.push_back({"C", parse_expression("item.name='x'")});
  bm.initial = "A";
  Transition t1;
  t1.id = "t1";
  t1.source = "A";
  t1.target = "B";
  t1.trigger = {HttpMethod::PUT, "/api/items/{item_id}"};
  t1.guard = parse_expression("request.name->size()=1");
  bm.transitions.push_back(t1);
  Transition t2;
  t2.id = "t2";
  t2.source = "B";
  t2.target = "C";
  t2.trigger = {HttpMethod::PUT, "/api/items/{item_id}"};
  t2.effect = parse_expression("item.name=request.name");
  bm.transitions.push_back(t2);
  return bm;
}

} // namespace


TEST(Golden, PostTokenMatchesListing)
{
  auto cs = derive_contracts(keystone_model(), ExpiresReading::paper);
  const Contract& c = contract(cs, HttpMethod::POST, "/v3/auth/tokens");
  EXPECT_LE(formula_atoms(abstract_atoms(c.post)).size(), 12u);
  expect_equivalent(c.pre, kPostPre);
  expect_equivalent(c.post, kPostPost);
  std::string text = render_contract(c);
  EXPECT_NE(text.find("token.catalog->size()=1"), std::string::npos);
  EXPECT_NE(text.find("token.catalog->size()=0"), std::string::npos);
}

TEST(Golden, DeleteUserMatchesListing)
{
  auto cs = derive_contracts(keystone_model(), ExpiresReading::paper);
  const Contract& c = contract(cs, HttpMethod::DELETE, "/v3/users/{user_id}");
  expect_equivalent(c.pre, kDeletePre);
  expect_equivalent(c.post, kDeletePost);
  auto b = blocks(render_contract(c));
  ASSERT_EQ(b.size(), 2u);
  EXPECT_NE(b[0].find("user.role='admin'"), std::string::npos);
  EXPECT_NE(b[1].find("user.role='admin'"), std::string::npos);
  // The post-condition repeats the check on both sides of its implication.
  EXPECT_EQ(occurrences(b[1], "user.role='admin'"), 2u);
}

TEST(Golden, CorrectedReadingMatchesFlippedListing)
{
  auto cs = derive_contracts(keystone_model());
  auto flip = [](const std::string& text) {
    return apply_expires_reading(parse_expression(text),
                                 ExpiresReading::corrected)
        .to_string();
  };
  const Contract& post = contract(cs, HttpMethod::POST, "/v3/auth/tokens");
  expect_equivalent(post.pre, flip(kPostPre));
  expect_equivalent(post.post, flip(kPostPost));
  const Contract& del = contract(cs, HttpMethod::DELETE, "/v3/users/{user_id}");
  expect_equivalent(del.pre, flip(kDeletePre));
  expect_equivalent(del.post, flip(kDeletePost));
  EXPECT_NE(flip(kDeletePre).find("clockTime<=token.expires_at"),
            std::string::npos);
}

TEST(Golden, DetectsMissingObligation)
{
  auto cs = derive_contracts(keystone_model(), ExpiresReading::paper);
  const Contract& c = contract(cs, HttpMethod::POST, "/v3/auth/tokens");
  auto parts = conjuncts(c.post);
  parts.pop_back();
  Formula dropped = abstract_atoms(conjoin(parts));
  EXPECT_FALSE(k3_equivalent(dropped, abstract_atoms(parse_expression(kPostPost))));
  std::string swapped = kDeletePost;
  swapped.replace(swapped.find("user.id->size()=0"), 17, "user.id->size()=1");
  EXPECT_FALSE(k3_equivalent(
      abstract_atoms(contract(cs, HttpMethod::DELETE, "/v3/users/{user_id}").post),
      abstract_atoms(parse_expression(swapped))));
}


TEST(Derive, SingleTransition)
{
  Model m = keystone_model();
  Contract c = derive_functional_contract(HttpMethod::DELETE,
                                          "/v3/users/{user_id}", m.behavior);
  EXPECT_EQ(c.pre.to_string(),
            "self.processing=False and token.token->size()=1 and "
            "user.id->size()=1 and clockTime<=token.expires_at and "
            "user.id->size()=1 and user.role='admin'");
  EXPECT_EQ(c.post.to_string(),
            c.pre.to_string() +
                " ==> token.token->size()=1 and user.id->size()=0 and "
                "user.role='admin'");
}

TEST(Derive, SeveralSourceStates)
{
  BehavioralModel bm = two_state_machine();
  Contract c =
      derive_functional_contract(HttpMethod::PUT, "/api/items/{item_id}", bm);
  EXPECT_EQ(c.pre.to_string(),
            "item.id->size()=0 and request.name->size()=1 or "
            "item.id->size()=1");
  ASSERT_EQ(conjuncts(c.post).size(), 2u);
  EXPECT_EQ(conjuncts(c.post)[0].to_string(),
            "item.id->size()=0 and request.name->size()=1 ==> "
            "item.id->size()=1");
  EXPECT_EQ(conjuncts(c.post)[1].to_string(),
            "item.id->size()=1 ==> item.name='x' and item.name=request.name");
}

TEST(Derive, DegenerateTransition)
{
  BehavioralModel bm;
  bm.states.push_back({"S", parse_expression("a.x->size()=1")});
  bm.initial = "S";
  Transition t;
  t.id = "loop";
  t.source = "S";
  t.target = "S";
  t.trigger = {HttpMethod::POST, "/a"};
  bm.transitions.push_back(t);
  Contract c = derive_functional_contract(HttpMethod::POST, "/a", bm);
  EXPECT_EQ(c.pre.to_string(), "a.x->size()=1");
  EXPECT_EQ(c.post.to_string(), "a.x->size()=1 ==> a.x->size()=1");

  bm.transitions[0].guard = parse_expression("True");
  Contract with_true = derive_functional_contract(HttpMethod::POST, "/a", bm);
  EXPECT_EQ(with_true, c);
  EXPECT_EQ(render_contract(with_true).find("True"), std::string::npos);
}

TEST(Derive, TrueGuardElisionPreservesMeaning)
{
  Expression inv = parse_expression("a.x->size()=1 and a.y='v'");
  Expression explicit_form = Expression::make_and(
      inv, Expression::make_literal(Value(true)));
  Expression elided = conjoin({inv, Expression::make_literal(Value(true))});
  std::mt19937_64 rng(5);
  const Value choices[] = {Value(Absent{}), Value(Invalid{}), Value("v"),
                           Value("w"), Value(Count{1}), Value(Count{2})};
  for (int i = 0; i < 500; ++i) {
    Value x = choices[rng() % 6];
    Value y = choices[rng() % 6];
    auto resolver = [&](const Path& p, Phase) {
      return p.text() == "a.x" ? x : y;
    };
    Environment e1(resolver, fixed_now(), Phase::pre);
    Environment e2(resolver, fixed_now(), Phase::pre);
    ASSERT_EQ(evaluate(explicit_form, e1), evaluate(elided, e2));
  }
}

TEST(Derive, UnmodeledMethodThrows)
{
  Model m = keystone_model();
  EXPECT_THROW(derive_functional_contract(HttpMethod::PUT, "/v3/auth/tokens",
                                          m.behavior),
               UnmodeledMethod);
}

TEST(Derive, Deterministic)
{
  auto a = derive_contracts(keystone_model());
  auto b = derive_contracts(keystone_model());
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(render_contract(a[i]), render_contract(b[i]));
    EXPECT_EQ(a[i].snapshot_paths, b[i].snapshot_paths);
  }
  EXPECT_EQ(a[0].id(), "POST /v3/auth/tokens");
  EXPECT_EQ(a[1].id(), "DELETE /v3/users/{user_id}");
}


TEST(Merge, EmptyRuleListIsIdentity)
{
  Model m = keystone_model();
  Contract c = derive_functional_contract(HttpMethod::POST, "/v3/auth/tokens",
                                          m.behavior);
  EXPECT_EQ(merge_security_rules(c, {}), c);
}

TEST(Merge, UnconditionalRuleGoesToBoth)
{
  Model m = keystone_model();
  Contract c = derive_functional_contract(HttpMethod::POST, "/v3/auth/tokens",
                                          m.behavior);
  SecurityRule r;
  r.id = "tls";
  r.applies_to = {HttpMethod::POST, "/v3/auth/tokens"};
  r.body = UnconditionalRule{parse_expression("request.secure=True")};
  Contract merged = merge_security_rules(c, {r});
  auto has = [](const Expression& e, const std::string& text) {
    for (const Expression& part : conjuncts(e)) {
      if (part.to_string() == text) return true;
    }
    return false;
  };
  EXPECT_TRUE(has(merged.pre, "request.secure=True"));
  EXPECT_TRUE(has(merged.post, "request.secure=True"));
  for (const Expression& part : conjuncts(c.pre)) {
    EXPECT_TRUE(has(merged.pre, part.to_string()));
  }
  for (const Expression& part : conjuncts(c.post)) {
    EXPECT_TRUE(has(merged.post, part.to_string()));
  }
  EXPECT_TRUE(merged.snapshot_paths.count(Path::from_dotted("request.secure")));
}

TEST(Merge, ConditionalRules)
{
  Model m = keystone_model();
  Contract c = derive_functional_contract(HttpMethod::POST, "/v3/auth/tokens",
                                          m.behavior);
  Contract merged = merge_security_rules(c, m.rules);
  auto pre = conjuncts(merged.pre);
  EXPECT_EQ(pre.back().to_string(),
            "request.scope->size()=1 and request.scope<>'unscope' and "
            "not request.scope.oclIsInvalid() or "
            "(request.scope->size()=0 or request.scope.oclIsInvalid() or "
            "request.scope='unscope')");
  auto post = conjuncts(merged.post);
  ASSERT_EQ(post.size(), 3u);
  EXPECT_EQ(post[1].kind(), ExprKind::implies);
  EXPECT_EQ(post[2].kind(), ExprKind::implies);
}

TEST(Merge, OtherTriggersIgnored)
{
  Model m = keystone_model();
  Contract c = derive_functional_contract(HttpMethod::DELETE,
                                          "/v3/users/{user_id}", m.behavior);
  EXPECT_EQ(merge_security_rules(c, m.rules), c);
}


TEST(Snapshot, PrePathsAndAntecedents)
{
  auto cs = derive_contracts(keystone_model());
  const Contract& post = contract(cs, HttpMethod::POST, "/v3/auth/tokens");
  std::set<std::string> names;
  for (const Path& p : post.snapshot_paths) {
    names.insert(p.text());
    EXPECT_NE(p.ns(), Namespace::response);
  }
  EXPECT_EQ(names, (std::set<std::string>{
                       "self.processing", "user.credential", "token.token",
                       "token.expires_at", "request.scope"}));
  const Contract& del = contract(cs, HttpMethod::DELETE, "/v3/users/{user_id}");
  EXPECT_TRUE(del.snapshot_paths.count(Path::from_dotted("user.role")));
  EXPECT_TRUE(del.snapshot_paths.count(Path::from_dotted("user.id")));
  EXPECT_EQ(compute_snapshot_paths(
                parse_expression("a.x=1"),
                parse_expression("response.status=201 ==> b.y=1")),
            PathSet({Path::from_dotted("a.x")}));
}


TEST(Render, Layout)
{
  auto cs = derive_contracts(keystone_model());
  std::string text = render_contract(cs[1]);
  EXPECT_EQ(text.rfind("PreCondition(DELETE /v3/users/{user_id}):\n", 0), 0u);
  EXPECT_NE(text.find("\nPostCondition(DELETE /v3/users/{user_id}):\n"),
            std::string::npos);
  EXPECT_NE(text.find("  self.processing=False and\n  token.token->size()=1"),
            std::string::npos);
}

TEST(Render, RoundTrips)
{
  for (ExpiresReading r : {ExpiresReading::paper, ExpiresReading::corrected}) {
    for (const Contract& c : derive_contracts(keystone_model(), r)) {
      auto b = blocks(render_contract(c));
      ASSERT_EQ(b.size(), 2u);
      EXPECT_EQ(parse_expression(b[0]), c.pre) << b[0];
      EXPECT_EQ(parse_expression(b[1]), c.post) << b[1];
    }
  }
  BehavioralModel bm = two_state_machine();
  Contract c =
      derive_functional_contract(HttpMethod::PUT, "/api/items/{item_id}", bm);
  auto b = blocks(render_contract(c));
  EXPECT_EQ(parse_expression(b[0]), c.pre);
  EXPECT_EQ(parse_expression(b[1]), c.post);
}


TEST(ExpiresReading, Rewrites)
{
  Expression corrected = parse_expression("clockTime<=token.expires_at");
  Expression paper = parse_expression("token.expires_at<=clockTime");
  EXPECT_EQ(apply_expires_reading(corrected, ExpiresReading::paper), paper);
  EXPECT_EQ(apply_expires_reading(paper, ExpiresReading::corrected), corrected);
  EXPECT_EQ(apply_expires_reading(paper, ExpiresReading::paper), paper);
  Expression other = parse_expression("clockTime<=token.issued_at");
  EXPECT_EQ(apply_expires_reading(other, ExpiresReading::paper), other);
  EXPECT_EQ(parse_expires_reading("paper"), ExpiresReading::paper);
  EXPECT_EQ(parse_expires_reading("corrected"), ExpiresReading::corrected);
  EXPECT_FALSE(parse_expires_reading("sideways"));
}
