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

#include "support.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#ifndef CG_FIXTURE_DIR
#error "CG_FIXTURE_DIR must point at the fixtures directory"
#endif

namespace cgtest {

std::string fixture(const std::string& name)
{
  return std::string(CG_FIXTURE_DIR) + "/" + name;
}

Model keystone_model()
{
  return load_model_file(fixture("keystone.model"));
}

Timestamp fixed_now()
{
  return *parse_timestamp("2026-01-01T00:00:00Z");
}


namespace {

constexpr TriBool F = TriBool::False;
constexpr TriBool U = TriBool::Unknown;
constexpr TriBool T = TriBool::True;

int idx(TriBool v)
{
  return v == F ? 0 : v == U ? 1 : 2;
}

// rows: left operand F, U, T; columns: right operand F, U, T
constexpr TriBool kAnd[3][3] = {{F, F, F}, {F, U, U}, {F, U, T}};
constexpr TriBool kOr[3][3] = {{F, U, T}, {U, U, T}, {T, T, T}};
constexpr TriBool kImplies[3][3] = {{T, T, T}, {U, U, T}, {F, U, T}};
constexpr TriBool kNot[3] = {T, U, F};

} // namespace

TriBool oracle_and(TriBool a, TriBool b) { return kAnd[idx(a)][idx(b)]; }
TriBool oracle_or(TriBool a, TriBool b) { return kOr[idx(a)][idx(b)]; }
TriBool oracle_not(TriBool a) { return kNot[idx(a)]; }
TriBool oracle_implies(TriBool a, TriBool b)
{
  return kImplies[idx(a)][idx(b)];
}


Formula Formula::var(std::string name)
{
  Formula f;
  f.atom = std::move(name);
  return f;
}

Formula Formula::bin(Op op, Formula a, Formula b)
{
  Formula f;
  f.op = op;
  f.kids = {std::move(a), std::move(b)};
  return f;
}

Formula Formula::neg(Formula a)
{
  Formula f;
  f.op = Op::not_;
  f.kids = {std::move(a)};
  return f;
}

TriBool oracle_eval(const Formula& f,
                    const std::map<std::string, TriBool>& assignment)
{
  switch (f.op) {
    case Formula::Op::atom:
      return assignment.at(f.atom);
    case Formula::Op::not_:
      return oracle_not(oracle_eval(f.kids[0], assignment));
    case Formula::Op::and_:
      return oracle_and(oracle_eval(f.kids[0], assignment),
                        oracle_eval(f.kids[1], assignment));
    case Formula::Op::or_:
      return oracle_or(oracle_eval(f.kids[0], assignment),
                       oracle_eval(f.kids[1], assignment));
    case Formula::Op::implies:
      return oracle_implies(oracle_eval(f.kids[0], assignment),
                            oracle_eval(f.kids[1], assignment));
  }
  throw std::logic_error("bad formula");
}

namespace {

void collect(const Formula& f, std::set<std::string>& out)
{
  if (f.op == Formula::Op::atom) {
    out.insert(f.atom);
  }
  for (const Formula& k : f.kids) {
    collect(k, out);
  }
}

} // namespace

std::vector<std::string> formula_atoms(const Formula& f)
{
  std::set<std::string> s;
  collect(f, s);
  return {s.begin(), s.end()};
}

Expression to_expression(const Formula& f)
{
  switch (f.op) {
    case Formula::Op::atom:
      return Expression::make_path(Path(std::vector<std::string>{"atom", f.atom}));
    case Formula::Op::not_:
      return Expression::make_not(to_expression(f.kids[0]));
    case Formula::Op::and_:
      return Expression::make_and(to_expression(f.kids[0]),
                                  to_expression(f.kids[1]));
    case Formula::Op::or_:
      return Expression::make_or(to_expression(f.kids[0]),
                                 to_expression(f.kids[1]));
    case Formula::Op::implies:
      return Expression::make_implies(to_expression(f.kids[0]),
                                      to_expression(f.kids[1]));
  }
  throw std::logic_error("bad formula");
}

Formula abstract_atoms(const Expression& e)
{
  switch (e.kind()) {
    case ExprKind::and_:
      return Formula::bin(Formula::Op::and_, abstract_atoms(e.lhs()),
                          abstract_atoms(e.rhs()));
    case ExprKind::or_:
      return Formula::bin(Formula::Op::or_, abstract_atoms(e.lhs()),
                          abstract_atoms(e.rhs()));
    case ExprKind::implies:
      return Formula::bin(Formula::Op::implies, abstract_atoms(e.lhs()),
                          abstract_atoms(e.rhs()));
    case ExprKind::not_:
      return Formula::neg(abstract_atoms(e.operand()));
    default:
      return Formula::var(e.to_string());
  }
}

TriBool library_eval(const Expression& e,
                     const std::map<std::string, TriBool>& assignment)
{
  Environment env(
      [&assignment](const Path& p, Phase) {
        TriBool v = assignment.at(p.segments().at(1));
        if (v == TriBool::Unknown) {
          return Value(Absent{});
        }
        return Value(v == TriBool::True);
      },
      fixed_now(), Phase::post);
  return evaluate(e, env);
}

void for_each_assignment(
    const std::vector<std::string>& atoms,
    const std::function<void(const std::map<std::string, TriBool>&)>& fn)
{
  std::vector<int> digits(atoms.size(), 0);
  std::map<std::string, TriBool> a;
  for (;;) {
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      a[atoms[i]] = static_cast<TriBool>(digits[i]);
    }
    fn(a);
    std::size_t i = 0;
    while (i < digits.size() && digits[i] == 2) {
      digits[i++] = 0;
    }
    if (i == digits.size()) {
      return;
    }
    ++digits[i];
  }
}

bool k3_equivalent(const Formula& a, const Formula& b,
                   std::string* counterexample)
{
  std::set<std::string> all;
  collect(a, all);
  collect(b, all);
  bool same = true;
  for_each_assignment({all.begin(), all.end()},
                      [&](const std::map<std::string, TriBool>& as) {
                        if (!same) {
                          return;
                        }
                        if (oracle_eval(a, as) != oracle_eval(b, as)) {
                          same = false;
                          if (counterexample != nullptr) {
                            for (const auto& [k, v] : as) {
                              *counterexample += k + "=" +
                                                 std::string(to_string(v)) +
                                                 "; ";
                            }
                          }
                        }
                      });
  return same;
}


int ExprGenerator::pick(int n)
{
  return static_cast<int>(rng_() % static_cast<std::uint64_t>(n));
}

Path ExprGenerator::path()
{
  static const std::vector<std::string> heads = {
      "token", "user", "Token", "request", "self", "response",
      "collection_users", "project"};
  static const std::vector<std::string> attrs = {
      "token", "id", "role", "scope", "expires_at", "processing",
      "status", "catalog", "name", "size", "region_1"};
  std::vector<std::string> segs{heads[pick(static_cast<int>(heads.size()))]};
  int n = 1 + pick(3);
  for (int i = 0; i < n; ++i) {
    segs.push_back(attrs[pick(static_cast<int>(attrs.size()))]);
  }
  return Path(std::move(segs));
}

Expression ExprGenerator::operand()
{
  static const std::vector<std::string> strings = {
      "admin", "unscope", "", "it's", "a b", "''", "==>"};
  switch (pick(6)) {
    case 0: return Expression::make_path(path());
    case 1: return Expression::make_size_of(path());
    case 2: return Expression::make_clock_time();
    case 3:
      return Expression::make_literal(
          Value(static_cast<std::int64_t>(pick(1000))));
    case 4:
      return Expression::make_literal(
          Value(strings[pick(static_cast<int>(strings.size()))]));
    default: return Expression::make_literal(Value(pick(2) == 0));
  }
}

Expression ExprGenerator::atom()
{
  static const CompareOp ops[] = {CompareOp::eq, CompareOp::ne, CompareOp::lt,
                                  CompareOp::le, CompareOp::gt, CompareOp::ge};
  switch (pick(5)) {
    case 0:
    case 1: return Expression::make_compare(ops[pick(6)], operand(), operand());
    case 2: return Expression::make_is_invalid(path());
    case 3: return Expression::make_path(path());
    default: return Expression::make_literal(Value(pick(2) == 0));
  }
}

Expression ExprGenerator::next(int depth)
{
  if (depth <= 0 || pick(4) == 0) {
    return atom();
  }
  switch (pick(4)) {
    case 0: return Expression::make_and(next(depth - 1), next(depth - 1));
    case 1: return Expression::make_or(next(depth - 1), next(depth - 1));
    case 2: return Expression::make_implies(next(depth - 1), next(depth - 1));
    default: return Expression::make_not(next(depth - 1));
  }
}


namespace {

// Hand transcriptions of the reference POST-token and DELETE-user
// contracts. Normalized: brackets become parentheses, `User.id` is
// lower-cased, the POST arrival state reads self.processing=False, the
// POST post-condition's leading clause is the functional implication and
// its two scope branches are conjoined implications.
const char* const kPostPre =
    "self.processing=False and "
    "(user.credential->size()=1 or token.token->size()=1 and "
    "token.expires_at<=clockTime) and "
    "((request.scope->size()=1 and request.scope<>'unscope' and "
    "not request.scope.oclIsInvalid()) or "
    "(request.scope->size()=0 or request.scope.oclIsInvalid() or "
    "request.scope='unscope'))";

const char* const kPostPost =
    "((self.processing=False and (user.credential->size()=1 or "
    "token.token->size()=1 and token.expires_at<=clockTime)) ==> "
    "(self.processing=False and token.token->size()=1 and "
    "user.id->size()=1 and token.expires_at<=clockTime)) and "
    "((request.scope->size()=1 and request.scope<>'unscope' and "
    "not request.scope.oclIsInvalid()) ==> "
    "(self.processing=False and token.token->size()=1 and "
    "token.catalog->size()=1)) and "
    "((request.scope->size()=0 or request.scope.oclIsInvalid() or "
    "request.scope='unscope') ==> "
    "(self.processing=False and token.token->size()=1 and "
    "token.catalog->size()=0))";

const char* const kDeletePre =
    "self.processing=False and token.token->size()=1 and "
    "user.id->size()=1 and token.expires_at<=clockTime "
    "and user.role='admin'";

const char* const kDeletePost =
    "(self.processing=False and token.token->size()=1 and "
    "user.id->size()=1 and token.expires_at<=clockTime "
    "and user.role='admin') ==> "
    "(token.token->size()=1 and user.role='admin' and "
    "user.id->size()=0)";

} // namespace

Listing post_token_listing() { return {kPostPre, kPostPost}; }
Listing delete_user_listing() { return {kDeletePre, kDeletePost}; }


json password_auth(const std::string& user, const std::string& password,
                   const json& scope)
{
  json auth = {{"identity",
                {{"methods", {"password"}},
                 {"password",
                  {{"user",
                    {{"name", user},
                     {"domain", {{"id", "default"}}},
                     {"password", password}}}}}}}};
  if (!scope.is_null()) {
    auth["scope"] = scope;
  }
  return {{"auth", auth}};
}

json token_auth(const std::string& token, const json& scope)
{
  json auth = {{"identity",
                {{"methods", {"token"}}, {"token", {{"id", token}}}}}};
  if (!scope.is_null()) {
    auth["scope"] = scope;
  }
  return {{"auth", auth}};
}

json project_scope(const std::string& id)
{
  return {{"project", {{"id", id}}}};
}


std::unique_ptr<MockKeystone> make_mock(const std::vector<std::string>& faults)
{
  MockKeystone::Options o;
  o.clock = fixed_now;
  for (const std::string& f : faults) {
    if (!enable_fault(o.faults, f)) {
      throw std::invalid_argument("unknown fault " + f);
    }
  }
  return std::make_unique<MockKeystone>(
      IdentityStore::from_seed_file(fixture("keystone_seed.json")), o);
}

HttpResponse send_to(int port, const HttpRequest& r)
{
  HttpClientUpstream client("http://127.0.0.1:" + std::to_string(port));
  return client.send(r, std::chrono::seconds(5));
}

Stack::Stack(std::vector<std::string> faults, GatewayConfig overrides)
{
  mock_ = make_mock(faults);
  mock_server_ = std::make_unique<HttpServer>(
      [m = mock_.get()](const HttpRequest& r) { return m->handle(r); });
  mock_port_ = mock_server_->bind("127.0.0.1", 0);
  mock_server_->start();

  GatewayConfig cfg = overrides;
  cfg.listen_address = "127.0.0.1:0";
  cfg.upstream_base_url = "http://127.0.0.1:" + std::to_string(mock_port_);
  cfg.model_path = fixture("keystone.model");
  if (!cfg.clock) {
    cfg.clock = fixed_now;
  }
  gateway_ = std::make_unique<Gateway>(cfg);
  gateway_port_ = gateway_->bind();
  gateway_->start();
}

Stack::~Stack()
{
  gateway_->stop();
  mock_server_->stop();
}

HttpResponse Stack::direct(const HttpRequest& r)
{
  return send_to(mock_port_, r);
}

HttpResponse Stack::via_gateway(const HttpRequest& r)
{
  return send_to(gateway_port_, r);
}

HttpResponse Stack::post_tokens(const json& body)
{
  HttpRequest r;
  r.method = "POST";
  r.target = "/v3/auth/tokens";
  r.headers.set("Content-Type", "application/json");
  r.body = body.dump();
  return via_gateway(r);
}

HttpResponse Stack::delete_user(const std::string& id, const std::string& token)
{
  HttpRequest r;
  r.method = "DELETE";
  r.target = "/v3/users/" + id;
  r.headers.set("X-Auth-Token", token);
  return via_gateway(r);
}

std::string Stack::issue(const std::string& user, const std::string& password,
                         const json& scope)
{
  HttpResponse r = post_tokens(password_auth(user, password, scope));
  auto token = r.headers.get("X-Subject-Token");
  if (r.status != 201 || !token) {
    throw std::runtime_error("token issue failed: " + std::to_string(r.status) +
                             " " + r.body);
  }
  return *token;
}

std::vector<json> Stack::log_records()
{
  gateway_->log().flush();
  std::vector<json> out;
  for (const std::string& line : gateway_->log().lines()) {
    out.push_back(json::parse(line));
  }
  return out;
}

} // namespace cgtest
