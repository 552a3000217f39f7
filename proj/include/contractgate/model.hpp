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

#ifndef CONTRACTGATE_MODEL_HPP
#define CONTRACTGATE_MODEL_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "contractgate/expression.hpp"

namespace contractgate {

enum class HttpMethod { GET, HEAD, POST, PUT, DELETE, PATCH, OPTIONS };

std::string_view to_string(HttpMethod m);
std::optional<HttpMethod> parse_method(std::string_view text);

constexpr bool is_side_effect(HttpMethod m)
{
  return m == HttpMethod::PUT || m == HttpMethod::POST ||
         m == HttpMethod::DELETE;
}


enum class DefinitionKind { normal, collection };

enum class AttributeType { string, integer, boolean, timestamp, document };

std::string_view to_string(AttributeType t);
std::optional<AttributeType> parse_attribute_type(std::string_view text);

struct Attribute
{
  std::string name;
  AttributeType type = AttributeType::string;

  bool operator==(const Attribute&) const = default;
};

struct ResourceDefinition
{
  std::string name;
  DefinitionKind kind = DefinitionKind::normal;
  std::vector<Attribute> attributes;
  // Attribute whose value addresses a member in URIs (`{<name>_id}`).
  std::optional<std::string> id_attribute;
  int line = 0;

  const Attribute* attribute(std::string_view attr) const;

  bool operator==(const ResourceDefinition& o) const
  {
    return name == o.name && kind == o.kind && attributes == o.attributes &&
           id_attribute == o.id_attribute;
  }
};

struct Association
{
  std::string source;
  std::string target;
  std::string role_name;
  std::uint64_t min_card = 0;
  std::optional<std::uint64_t> max_card; // nullopt: unbounded
  int line = 0;

  bool operator==(const Association& o) const
  {
    return source == o.source && target == o.target &&
           role_name == o.role_name && min_card == o.min_card &&
           max_card == o.max_card;
  }
};

struct ResourceModel
{
  std::vector<ResourceDefinition> definitions;
  std::vector<Association> associations;
  std::string root;
  // URI prefix of the root definition, e.g. "/v3". Empty means "/".
  std::string base_path;

  // Case-insensitive lookup.
  const ResourceDefinition* find(std::string_view name) const;

  bool operator==(const ResourceModel&) const = default;
};


struct State
{
  std::string name;
  Expression invariant;
  int line = 0;

  bool operator==(const State& o) const
  {
    return name == o.name && invariant == o.invariant;
  }
};

struct Trigger
{
  HttpMethod method = HttpMethod::POST;
  std::string uri_template;

  bool operator==(const Trigger&) const = default;
  auto operator<=>(const Trigger&) const = default;
};

struct Transition
{
  std::string id;
  std::string source;
  std::string target;
  Trigger trigger;
  std::optional<Expression> guard;
  std::optional<Expression> effect;
  std::optional<std::string> actor_role;
  int line = 0;

  bool operator==(const Transition& o) const
  {
    return id == o.id && source == o.source && target == o.target &&
           trigger == o.trigger && guard == o.guard && effect == o.effect &&
           actor_role == o.actor_role;
  }
};

struct BehavioralModel
{
  std::vector<State> states;
  std::vector<Transition> transitions;
  std::string initial;

  const State* find_state(std::string_view name) const;

  bool operator==(const BehavioralModel&) const = default;
};


struct ConditionalRule
{
  Expression if_expr;
  Expression then_expr;

  bool operator==(const ConditionalRule&) const = default;
};

struct UnconditionalRule
{
  Expression rule_expr;

  bool operator==(const UnconditionalRule&) const = default;
};

struct SecurityRule
{
  std::string id;
  Trigger applies_to;
  std::variant<ConditionalRule, UnconditionalRule> body;
  int line = 0;

  bool conditional() const
  {
    return std::holds_alternative<ConditionalRule>(body);
  }

  bool operator==(const SecurityRule& o) const
  {
    return id == o.id && applies_to == o.applies_to && body == o.body;
  }
};


struct Model
{
  ResourceModel resources;
  BehavioralModel behavior;
  std::vector<SecurityRule> rules;

  bool operator==(const Model&) const = default;
};


struct Diagnostic
{
  // Stable machine-readable identifier, e.g. "collection-attributes".
  std::string code;
  std::string message;
  int line = 0;
};

std::string to_string(const Diagnostic& d);


class ModelError : public std::runtime_error
{
public:
  enum class Kind { syntax, unknown_reference, invariant, io };

  ModelError(Kind kind, const std::string& message, int line = 0,
             int column = 0);

  Kind kind() const { return kind_; }
  int line() const { return line_; }
  int column() const { return column_; }

private:
  Kind kind_;
  int line_;
  int column_;
};


/**
 * Reads the line-oriented model document:
 *
 *   root <Definition> [at </base/path>]
 *   resource <name> [collection]
 *     attr <name>: <type> [key]
 *   assoc <source> -> <target> as <role> [<min>..<max|*>]
 *   state <name>: <expression>
 *   initial <state>
 *   transition <id>: <source> -> <target> on <METHOD> <uri>
 *       [guard: <expr>] [effect: <expr>] [actor: <role>]
 *   rule <id> on <METHOD> <uri>: if <expr> then <expr>
 *   rule <id> on <METHOD> <uri>: always <expr>
 *
 * `#` starts a comment, a trailing backslash continues a line. A
 * `collection_` name prefix also marks a collection. Conditional rules on
 * the same trigger with identical then-clauses are grouped into one rule
 * whose if-clause is the disjunction of theirs.
 *
 * Only syntax is checked; throws ModelError(syntax).
 */
Model parse_model_document(std::string_view text);

// parse_model_document + validate_model. The first diagnostic, if any,
// is thrown as ModelError (unknown_reference or invariant).
Model load_model(std::string_view text);
Model load_model_file(const std::filesystem::path& path);

std::vector<Diagnostic> validate_model(const ResourceModel& rm,
                                       const BehavioralModel& bm,
                                       const std::vector<SecurityRule>& rules);

inline std::vector<Diagnostic> validate_model(const Model& m)
{
  return validate_model(m.resources, m.behavior, m.rules);
}

// Document text that parse_model_document reads back into an equal Model.
std::string serialize_model(const Model& m);


struct RouteEntry
{
  std::string uri_template;
  std::string definition;
  std::set<HttpMethod> allowed_methods;

  bool operator==(const RouteEntry&) const = default;
};

struct RouteMatch
{
  const RouteEntry* entry = nullptr;
  std::map<std::string, std::string> params;
};

class RouteTable
{
public:
  std::vector<RouteEntry> entries;
  // Definitions reachable along more than one association path.
  std::vector<std::string> ambiguities;

  const RouteEntry* find(std::string_view uri_template) const;
  const RouteEntry* for_definition(std::string_view definition) const;

  // Matches a concrete path (query string ignored). Literal segments win
  // over `{param}` segments.
  std::optional<RouteMatch> match(std::string_view uri) const;
};

/**
 * One entry per definition reachable from the root. A definition's
 * template is its parent's template plus the association role name,
 * except for members of a collection that declare an id attribute: those
 * take a `{<definition>_id}` segment instead. Allowed methods are GET
 * plus the trigger methods of transitions on that template. When a
 * definition is reachable along two paths the first declared wins and
 * the conflict lands in `ambiguities`.
 */
RouteTable derive_routes(const ResourceModel& rm,
                         const BehavioralModel& bm = {});

// Fills `{name}` placeholders; unknown placeholders are left as-is.
std::string expand_template(std::string_view uri_template,
                            const std::map<std::string, std::string>& params);

} // namespace contractgate

#endif // CONTRACTGATE_MODEL_HPP
