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

#include <algorithm>
#include <cctype>
#include <functional>

#include "contractgate/model.hpp"

namespace contractgate {

namespace {

bool iequals(std::string_view a, std::string_view b)
{
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::string lower(std::string_view s)
{
  std::string out(s);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

bool uri_safe(std::string_view role)
{
  return !role.empty() && std::all_of(role.begin(), role.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
           c == '-';
  });
}

std::vector<std::string> split_path(std::string_view uri)
{
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < uri.size()) {
    if (uri[pos] == '/') {
      ++pos;
      continue;
    }
    std::size_t next = uri.find('/', pos);
    out.emplace_back(uri.substr(pos, next - pos));
    pos = next == std::string_view::npos ? uri.size() : next;
  }
  return out;
}

bool is_param(std::string_view segment)
{
  return segment.size() > 2 && segment.front() == '{' &&
         segment.back() == '}';
}

} // namespace


const Attribute* ResourceDefinition::attribute(std::string_view attr) const
{
  for (const Attribute& a : attributes) {
    if (a.name == attr) {
      return &a;
    }
  }
  return nullptr;
}

const ResourceDefinition* ResourceModel::find(std::string_view name) const
{
  for (const ResourceDefinition& d : definitions) {
    if (iequals(d.name, name)) {
      return &d;
    }
  }
  return nullptr;
}

const State* BehavioralModel::find_state(std::string_view name) const
{
  for (const State& s : states) {
    if (s.name == name) {
      return &s;
    }
  }
  return nullptr;
}


const RouteEntry* RouteTable::find(std::string_view uri_template) const
{
  for (const RouteEntry& e : entries) {
    if (e.uri_template == uri_template) {
      return &e;
    }
  }
  return nullptr;
}

const RouteEntry* RouteTable::for_definition(std::string_view definition) const
{
  for (const RouteEntry& e : entries) {
    if (iequals(e.definition, definition)) {
      return &e;
    }
  }
  return nullptr;
}

std::optional<RouteMatch> RouteTable::match(std::string_view uri) const
{
  std::size_t query = uri.find('?');
  if (query != std::string_view::npos) {
    uri = uri.substr(0, query);
  }
  std::vector<std::string> parts = split_path(uri);

  std::optional<RouteMatch> best;
  std::size_t best_literals = 0;
  for (const RouteEntry& e : entries) {
    std::vector<std::string> pattern = split_path(e.uri_template);
    if (pattern.size() != parts.size()) {
      continue;
    }
    RouteMatch m;
    m.entry = &e;
    std::size_t literals = 0;
    bool ok = true;
    for (std::size_t i = 0; i < parts.size() && ok; ++i) {
      if (is_param(pattern[i])) {
        m.params[pattern[i].substr(1, pattern[i].size() - 2)] = parts[i];
      } else if (pattern[i] == parts[i]) {
        ++literals;
      } else {
        ok = false;
      }
    }
    if (ok && (!best || literals > best_literals)) {
      best = std::move(m);
      best_literals = literals;
    }
  }
  return best;
}


std::string expand_template(std::string_view uri_template,
                            const std::map<std::string, std::string>& params)
{
  std::string out;
  std::size_t pos = 0;
  while (pos < uri_template.size()) {
    std::size_t open = uri_template.find('{', pos);
    if (open == std::string_view::npos) {
      out += uri_template.substr(pos);
      break;
    }
    std::size_t close = uri_template.find('}', open);
    if (close == std::string_view::npos) {
      out += uri_template.substr(pos);
      break;
    }
    out += uri_template.substr(pos, open - pos);
    std::string name(uri_template.substr(open + 1, close - open - 1));
    auto it = params.find(name);
    out += it != params.end() ? it->second
                              : std::string(uri_template.substr(open, close - open + 1));
    pos = close + 1;
  }
  return out;
}


RouteTable derive_routes(const ResourceModel& rm, const BehavioralModel& bm)
{
  RouteTable table;
  const ResourceDefinition* root = rm.find(rm.root);
  if (root == nullptr) {
    return table;
  }

  std::map<std::string, std::string> templates; // lowercased name -> uri
  std::map<std::string, const Association*> reached_by;

  auto add = [&](const ResourceDefinition& def, std::string uri) {
    templates[lower(def.name)] = uri;
    RouteEntry e;
    e.uri_template = std::move(uri);
    e.definition = def.name;
    e.allowed_methods.insert(HttpMethod::GET);
    table.entries.push_back(std::move(e));
  };

  // Depth-first in declaration order, so the path through the earliest
  // declared associations claims a definition.
  std::function<void(const ResourceDefinition&)> visit =
      [&](const ResourceDefinition& def) {
        const std::string parent = templates[lower(def.name)];
        for (const Association& a : rm.associations) {
          if (!iequals(a.source, def.name)) {
            continue;
          }
          const ResourceDefinition* target = rm.find(a.target);
          if (target == nullptr) {
            continue;
          }
          std::string key = lower(target->name);
          if (reached_by.count(key) != 0) {
            if (reached_by[key] != &a) {
              table.ambiguities.push_back(
                  "'" + target->name + "' is reachable along more than one "
                  "association path; keeping " + templates[key]);
            }
            continue;
          }
          reached_by[key] = &a;

          const bool member = def.kind == DefinitionKind::collection &&
                              target->id_attribute.has_value();
          std::string segment = member ? "{" + key + "_id}" : a.role_name;
          add(*target, parent == "/" ? "/" + segment : parent + "/" + segment);
          visit(*target);
        }
      };

  add(*root, rm.base_path.empty() ? "/" : rm.base_path);
  reached_by[lower(root->name)] = nullptr;
  visit(*root);

  for (const Transition& t : bm.transitions) {
    for (RouteEntry& e : table.entries) {
      if (e.uri_template == t.trigger.uri_template) {
        e.allowed_methods.insert(t.trigger.method);
      }
    }
  }
  return table;
}


namespace {

class Validator
{
public:
  Validator(const ResourceModel& rm, const BehavioralModel& bm,
            const std::vector<SecurityRule>& rules)
    : rm_(rm), bm_(bm), rules_(rules)
  {}

  std::vector<Diagnostic> run()
  {
    if (rm_.definitions.empty()) {
      report("empty-model", "empty resource model");
      return std::move(out_);
    }
    check_definitions();
    check_associations();
    check_reachability();
    check_states();
    check_transitions();
    check_rules();
    return std::move(out_);
  }

private:
  void report(std::string code, std::string message, int line = 0)
  {
    out_.push_back({std::move(code), std::move(message), line});
  }

  void check_definitions()
  {
    std::set<std::string> names;
    for (const ResourceDefinition& d : rm_.definitions) {
      if (!names.insert(lower(d.name)).second) {
        report("duplicate-definition",
               "resource definition '" + d.name + "' declared twice", d.line);
      }
      if (d.kind == DefinitionKind::collection && !d.attributes.empty()) {
        report("collection-attributes",
               "collection must have no attributes ('" + d.name + "')",
               d.line);
      }
      if (d.kind == DefinitionKind::normal && d.attributes.empty()) {
        report("normal-without-attributes",
               "normal resource definition '" + d.name +
                   "' needs at least one attribute",
               d.line);
      }
      std::set<std::string> attrs;
      for (const Attribute& a : d.attributes) {
        if (!attrs.insert(a.name).second) {
          report("duplicate-attribute",
                 "attribute '" + a.name + "' declared twice in '" + d.name +
                     "'",
                 d.line);
        }
      }
      if (d.id_attribute && d.attribute(*d.id_attribute) == nullptr) {
        report("unknown-reference",
               "id attribute '" + *d.id_attribute + "' is not declared on '" +
                   d.name + "'",
               d.line);
      }
    }
    if (rm_.find(rm_.root) == nullptr) {
      report("unknown-reference",
             "root definition '" + rm_.root + "' is not declared");
    }
  }

  void check_associations()
  {
    std::set<std::pair<std::string, std::string>> roles;
    for (const Association& a : rm_.associations) {
      const ResourceDefinition* src = rm_.find(a.source);
      const ResourceDefinition* dst = rm_.find(a.target);
      if (src == nullptr) {
        report("unknown-reference",
               "association source '" + a.source + "' is not declared",
               a.line);
      }
      if (dst == nullptr) {
        report("unknown-reference",
               "association target '" + a.target + "' is not declared",
               a.line);
      }
      if (a.role_name.empty()) {
        report("missing-role-name",
               "role name required for URI (" + a.source + " -> " + a.target +
                   ")",
               a.line);
      } else if (!uri_safe(a.role_name)) {
        report("role-name-not-uri-safe",
               "role name '" + a.role_name +
                   "' must use lowercase letters, digits, '_' or '-'",
               a.line);
      } else if (!roles.insert({lower(a.source), a.role_name}).second) {
        report("duplicate-role-name",
               "role name '" + a.role_name + "' used twice from '" +
                   a.source + "'",
               a.line);
      }
      if (a.max_card && a.min_card > *a.max_card) {
        report("cardinality-order",
               "minimum cardinality exceeds maximum (" + a.source + " -> " +
                   a.target + ")",
               a.line);
      }
      if (src != nullptr && dst != nullptr &&
          src->kind == DefinitionKind::collection &&
          dst->kind == DefinitionKind::normal &&
          (a.min_card != 0 || a.max_card.has_value())) {
        report("collection-cardinality",
               "collection '" + src->name + "' must hold 0..* of '" +
                   dst->name + "'",
               a.line);
      }
    }
  }

  void check_reachability()
  {
    RouteTable routes = derive_routes(rm_, bm_);
    for (const ResourceDefinition& d : rm_.definitions) {
      if (routes.for_definition(d.name) == nullptr &&
          rm_.find(rm_.root) != nullptr) {
        report("unreachable-definition",
               "'" + d.name + "' is not reachable from root '" + rm_.root +
                   "'",
               d.line);
      }
    }
    routes_ = std::move(routes);
  }

  // Every path must resolve against the resource model or a reserved
  // namespace.
  void check_paths(const Expression& e, const std::string& where, int line)
  {
    for (const Path& p : free_paths(e)) {
      if (p.ns() != Namespace::resource) {
        if (p.segments().size() < 2) {
          report("unresolved-path",
                 "'" + p.text() + "' in " + where +
                     " needs a field after the namespace",
                 line);
        }
        continue;
      }
      const ResourceDefinition* def = rm_.find(p.segments().front());
      if (def == nullptr) {
        report("unknown-reference",
               "'" + p.text() + "' in " + where +
                   " does not name a resource definition",
               line);
        continue;
      }
      if (p.segments().size() < 2) {
        continue;
      }
      const Attribute* attr = def->attribute(p.segments()[1]);
      if (attr == nullptr) {
        report("unknown-reference",
               "'" + p.text() + "' in " + where + ": '" + def->name +
                   "' has no attribute '" + p.segments()[1] + "'",
               line);
      } else if (p.segments().size() > 2 &&
                 attr->type != AttributeType::document) {
        report("unresolved-path",
               "'" + p.text() + "' in " + where + " descends into non-document attribute",
               line);
      }
    }
  }

  void check_states()
  {
    std::set<std::string> names;
    for (const State& s : bm_.states) {
      if (!names.insert(s.name).second) {
        report("duplicate-state", "state '" + s.name + "' declared twice",
               s.line);
      }
      check_paths(s.invariant, "invariant of '" + s.name + "'", s.line);
    }
    if (!bm_.states.empty() && bm_.find_state(bm_.initial) == nullptr) {
      report("unknown-reference",
             "initial state '" + bm_.initial + "' is not declared");
    }
  }

  void check_trigger(const Trigger& t, const std::string& what, int line)
  {
    if (routes_.find(t.uri_template) == nullptr) {
      report("unrouted-template",
             what + " uses '" + t.uri_template +
                 "', which is not derivable from the resource model",
             line);
    }
  }

  void check_transitions()
  {
    std::set<std::string> ids;
    for (const Transition& t : bm_.transitions) {
      const std::string what = "transition '" + t.id + "'";
      if (!ids.insert(t.id).second) {
        report("duplicate-transition", what + " declared twice", t.line);
      }
      if (!is_side_effect(t.trigger.method)) {
        report("non-side-effect-trigger",
               what + " is triggered by " +
                   std::string(to_string(t.trigger.method)) +
                   "; only side-effect methods (PUT, POST, DELETE) may "
                   "trigger transitions",
               t.line);
      }
      if (bm_.find_state(t.source) == nullptr) {
        report("unknown-reference",
               what + ": source state '" + t.source + "' is not declared",
               t.line);
      }
      if (bm_.find_state(t.target) == nullptr) {
        report("unknown-reference",
               what + ": target state '" + t.target + "' is not declared",
               t.line);
      }
      check_trigger(t.trigger, what, t.line);
      if (t.guard) {
        check_paths(*t.guard, "guard of " + what, t.line);
      }
      if (t.effect) {
        check_paths(*t.effect, "effect of " + what, t.line);
      }
    }
  }

  void check_rules()
  {
    std::set<std::string> ids;
    for (const SecurityRule& r : rules_) {
      const std::string what = "rule '" + r.id + "'";
      if (!ids.insert(r.id).second) {
        report("duplicate-rule", what + " declared twice", r.line);
      }
      check_trigger(r.applies_to, what, r.line);
      if (const auto* c = std::get_if<ConditionalRule>(&r.body)) {
        check_paths(c->if_expr, "if-clause of " + what, r.line);
        check_paths(c->then_expr, "then-clause of " + what, r.line);
      } else {
        check_paths(std::get<UnconditionalRule>(r.body).rule_expr, what,
                    r.line);
      }
    }
  }

  const ResourceModel& rm_;
  const BehavioralModel& bm_;
  const std::vector<SecurityRule>& rules_;
  RouteTable routes_;
  std::vector<Diagnostic> out_;
};

} // namespace


std::vector<Diagnostic> validate_model(const ResourceModel& rm,
                                       const BehavioralModel& bm,
                                       const std::vector<SecurityRule>& rules)
{
  return Validator(rm, bm, rules).run();
}

} // namespace contractgate
