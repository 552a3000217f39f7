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

#ifndef CONTRACTGATE_TESTS_SUPPORT_HPP
#define CONTRACTGATE_TESTS_SUPPORT_HPP

#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "contractgate/contract.hpp"
#include "contractgate/evaluator.hpp"
#include "contractgate/gateway.hpp"
#include "contractgate/mock_keystone.hpp"
#include "contractgate/monitor.hpp"

namespace cgtest {

using namespace contractgate;
using nlohmann::json;

std::string fixture(const std::string& name);
Model keystone_model();

// 2026-01-01T00:00:00Z, the clock every test stack runs on.
Timestamp fixed_now();


// Strong Kleene connectives written out as tables, kept apart from the
// library so the two can be compared.
TriBool oracle_and(TriBool a, TriBool b);
TriBool oracle_or(TriBool a, TriBool b);
TriBool oracle_not(TriBool a);
TriBool oracle_implies(TriBool a, TriBool b);

// Connective structure over named atoms.
struct Formula
{
  enum class Op { atom, and_, or_, not_, implies };
  Op op = Op::atom;
  std::string atom;
  std::vector<Formula> kids;

  static Formula var(std::string name);
  static Formula bin(Op op, Formula a, Formula b);
  static Formula neg(Formula a);
};

TriBool oracle_eval(const Formula& f,
                    const std::map<std::string, TriBool>& assignment);

std::vector<std::string> formula_atoms(const Formula& f);

// Formula -> library Expression: atom `x` becomes the bare path `atom.x`.
Expression to_expression(const Formula& f);

// Library Expression -> Formula, with every comparison, size/oclIsInvalid
// call, path and literal replaced by an atom named after its text.
Formula abstract_atoms(const Expression& e);

// Evaluates `e` (built from atom paths) with the library evaluator.
TriBool library_eval(const Expression& e,
                     const std::map<std::string, TriBool>& assignment);

// Calls fn for each of the 3^n assignments of `atoms`.
void for_each_assignment(
    const std::vector<std::string>& atoms,
    const std::function<void(const std::map<std::string, TriBool>&)>& fn);

// True when a and b agree on every assignment of their combined atoms.
bool k3_equivalent(const Formula& a, const Formula& b,
                   std::string* counterexample = nullptr);


// Normalized hand transcriptions of the reference POST-token and
// DELETE-user contracts (expiry read as `token.expires_at<=clockTime`).
struct Listing
{
  std::string pre;
  std::string post;
};

Listing post_token_listing();
Listing delete_user_listing();


// Random expressions over the full surface syntax.
class ExprGenerator
{
public:
  explicit ExprGenerator(std::uint64_t seed) : rng_(seed) {}
  Expression next(int depth = 4);

private:
  Expression atom();
  Expression operand();
  Path path();
  int pick(int n);

  std::mt19937_64 rng_;
};


// Identity requests in the shapes the mock accepts.
json password_auth(const std::string& user, const std::string& password,
                   const json& scope = nullptr);
json token_auth(const std::string& token, const json& scope = nullptr);
json project_scope(const std::string& id = "p-demo");


// Mock and gateway in one process, talking over loopback sockets.
class Stack
{
public:
  explicit Stack(std::vector<std::string> faults = {},
                 GatewayConfig overrides = {});
  ~Stack();

  HttpResponse direct(const HttpRequest& r);
  HttpResponse via_gateway(const HttpRequest& r);

  HttpResponse post_tokens(const json& body);
  HttpResponse delete_user(const std::string& id, const std::string& token);
  std::string issue(const std::string& user, const std::string& password,
                    const json& scope = nullptr);

  MockKeystone& mock() { return *mock_; }
  Gateway& gateway() { return *gateway_; }
  std::vector<json> log_records();

  int mock_port() const { return mock_port_; }
  int gateway_port() const { return gateway_port_; }

private:
  std::unique_ptr<MockKeystone> mock_;
  std::unique_ptr<HttpServer> mock_server_;
  std::unique_ptr<Gateway> gateway_;
  int mock_port_ = 0;
  int gateway_port_ = 0;
};

// Issues a request against 127.0.0.1:port.
HttpResponse send_to(int port, const HttpRequest& r);

// Mock with the seed fixture and the fixed clock.
std::unique_ptr<MockKeystone> make_mock(const std::vector<std::string>& faults = {});

} // namespace cgtest

#endif // CONTRACTGATE_TESTS_SUPPORT_HPP
