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
#include <fstream>
#include <sstream>

#include "contractgate/model.hpp"

namespace contractgate {

ModelError::ModelError(Kind kind, const std::string& message, int line,
                       int column)
  : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ":" +
                                      std::to_string(column) + ": " + message
                                : message),
    kind_(kind),
    line_(line),
    column_(column)
{}


std::string_view to_string(HttpMethod m)
{
  switch (m) {
    case HttpMethod::GET: return "GET";
    case HttpMethod::HEAD: return "HEAD";
    case HttpMethod::POST: return "POST";
    case HttpMethod::PUT: return "PUT";
    case HttpMethod::DELETE: return "DELETE";
    case HttpMethod::PATCH: return "PATCH";
    case HttpMethod::OPTIONS: return "OPTIONS";
  }
  return "GET";
}

std::optional<HttpMethod> parse_method(std::string_view text)
{
  for (HttpMethod m : {HttpMethod::GET, HttpMethod::HEAD, HttpMethod::POST,
                       HttpMethod::PUT, HttpMethod::DELETE, HttpMethod::PATCH,
                       HttpMethod::OPTIONS}) {
    if (to_string(m) == text) {
      return m;
    }
  }
  return std::nullopt;
}

std::string_view to_string(AttributeType t)
{
  switch (t) {
    case AttributeType::string: return "string";
    case AttributeType::integer: return "integer";
    case AttributeType::boolean: return "boolean";
    case AttributeType::timestamp: return "timestamp";
    case AttributeType::document: return "document";
  }
  return "string";
}

std::optional<AttributeType> parse_attribute_type(std::string_view text)
{
  for (AttributeType t :
       {AttributeType::string, AttributeType::integer, AttributeType::boolean,
        AttributeType::timestamp, AttributeType::document}) {
    if (to_string(t) == text) {
      return t;
    }
  }
  return std::nullopt;
}

std::string to_string(const Diagnostic& d)
{
  std::string out;
  if (d.line > 0) {
    out += "line " + std::to_string(d.line) + ": ";
  }
  return out + d.message + " [" + d.code + "]";
}


namespace {

struct LogicalLine
{
  // Where each physical line's text starts in `text`.
  struct Piece
  {
    std::size_t offset = 0;
    int line = 0;
    int column = 1;
  };

  int number = 0;
  std::string text;
  std::vector<Piece> pieces;

  // Physical (line, column) of a position in `text`.
  std::pair<int, int> locate(std::size_t pos) const
  {
    const Piece* at = nullptr;
    for (const Piece& p : pieces) {
      if (p.offset <= pos) {
        at = &p;
      }
    }
    if (at == nullptr) {
      return {number, static_cast<int>(pos) + 1};
    }
    return {at->line, at->column + static_cast<int>(pos - at->offset)};
  }
};

// Position of the first '#' outside a single-quoted literal.
std::size_t comment_start(std::string_view line)
{
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\'') {
      quoted = !quoted;
    } else if (line[i] == '#' && !quoted) {
      return i;
    }
  }
  return std::string_view::npos;
}

std::string_view trim(std::string_view s)
{
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<LogicalLine> logical_lines(std::string_view text)
{
  std::vector<LogicalLine> out;
  std::string pending;
  std::vector<LogicalLine::Piece> pieces;
  int pending_start = 0;
  int number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(
        pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++number;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;

    if (!raw.empty() && raw.back() == '\r') {
      raw.remove_suffix(1);
    }
    std::size_t hash = comment_start(raw);
    if (hash != std::string_view::npos) {
      raw = raw.substr(0, hash);
    }
    std::string_view body = trim(raw);
    bool continues = !body.empty() && body.back() == '\\';
    if (continues) {
      body.remove_suffix(1);
    }
    if (pending.empty()) {
      pending_start = number;
    } else if (!body.empty()) {
      pending += ' ';
    }
    if (!body.empty()) {
      pieces.push_back({pending.size(), number,
                        static_cast<int>(body.data() - raw.data()) + 1});
    }
    pending += body;
    if (!continues) {
      if (!trim(pending).empty()) {
        out.push_back({pending_start, std::string(trim(pending)), pieces});
      }
      pending.clear();
      pieces.clear();
    }
  }
  if (!trim(pending).empty()) {
    out.push_back({pending_start, std::string(trim(pending)), pieces});
  }
  return out;
}

bool is_identifier(std::string_view s)
{
  if (s.empty() ||
      !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) {
    return false;
  }
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}


/**
 * Cursor over one logical line. Column numbers are 1-based.
 */
class LineReader
{
public:
  explicit LineReader(const LogicalLine& line) : line_(line) {}

  [[noreturn]] void fail(const std::string& message) const
  {
    fail_at(pos_, message);
  }

  [[noreturn]] void fail_at(std::size_t pos, const std::string& message) const
  {
    auto [line, column] = line_.locate(pos);
    throw ModelError(ModelError::Kind::syntax, message, line, column);
  }

  void skip_space()
  {
    while (pos_ < line_.text.size() &&
           std::isspace(static_cast<unsigned char>(line_.text[pos_]))) {
      ++pos_;
    }
  }

  bool at_end()
  {
    skip_space();
    return pos_ >= line_.text.size();
  }

  // Next whitespace-delimited word, stopping before any of `stops`.
  std::string word(std::string_view stops = "")
  {
    skip_space();
    std::size_t start = pos_;
    while (pos_ < line_.text.size() &&
           !std::isspace(static_cast<unsigned char>(line_.text[pos_])) &&
           stops.find(line_.text[pos_]) == std::string_view::npos) {
      ++pos_;
    }
    return line_.text.substr(start, pos_ - start);
  }

  std::string identifier(const std::string& what, std::string_view stops = "")
  {
    std::size_t start = (skip_space(), pos_);
    std::string w = word(stops);
    if (!is_identifier(w)) {
      pos_ = start;
      fail("expected " + what + (w.empty() ? "" : ", found '" + w + "'"));
    }
    return w;
  }

  bool accept(std::string_view token)
  {
    skip_space();
    if (line_.text.compare(pos_, token.size(), token) == 0) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view token)
  {
    if (!accept(token)) {
      fail("expected '" + std::string(token) + "'");
    }
  }

  std::size_t pos() const { return pos_; }
  void set_pos(std::size_t p) { pos_ = p; }
  const std::string& text() const { return line_.text; }
  int number() const { return line_.number; }

  // Parses text[begin, end) as an expression, reporting errors at the
  // right column.
  Expression expression(std::size_t begin, std::size_t end) const
  {
    std::string_view src =
        std::string_view(line_.text).substr(begin, end - begin);
    if (trim(src).empty()) {
      fail_at(begin, "expected expression");
    }
    try {
      return parse_expression(src);
    } catch (const ParseError& e) {
      fail_at(begin + e.offset(), e.what());
    }
  }

private:
  const LogicalLine& line_;
  std::size_t pos_ = 0;
};


// Offsets of `keyword` (e.g. "guard:") occurring at a word boundary and
// outside quotes, searching from `from`.
std::size_t find_keyword(const std::string& text, std::string_view keyword,
                         std::size_t from)
{
  bool quoted = false;
  for (std::size_t i = from; i < text.size(); ++i) {
    if (text[i] == '\'') {
      quoted = !quoted;
      continue;
    }
    if (quoted) {
      continue;
    }
    bool boundary = i == 0 || std::isspace(static_cast<unsigned char>(text[i - 1])) ||
                    text[i - 1] == ')';
    if (boundary && text.compare(i, keyword.size(), keyword) == 0) {
      std::size_t after = i + keyword.size();
      bool word_end = keyword.back() == ':' || after >= text.size() ||
                      (!std::isalnum(static_cast<unsigned char>(text[after])) &&
                       text[after] != '_');
      if (word_end) {
        return i;
      }
    }
  }
  return std::string::npos;
}


class DocumentParser
{
public:
  Model parse(std::string_view text)
  {
    for (const LogicalLine& line : logical_lines(text)) {
      LineReader r(line);
      std::string keyword = r.word();
      if (keyword == "root") {
        parse_root(r);
      } else if (keyword == "resource") {
        parse_resource(r);
      } else if (keyword == "attr") {
        parse_attribute(r);
      } else if (keyword == "assoc") {
        parse_association(r);
      } else if (keyword == "state") {
        parse_state(r);
      } else if (keyword == "initial") {
        model_.behavior.initial = r.identifier("state name");
        expect_end(r);
      } else if (keyword == "transition") {
        parse_transition(r);
      } else if (keyword == "rule") {
        parse_rule(r);
      } else {
        r.set_pos(0);
        r.fail("unknown directive '" + keyword + "'");
      }
    }

    if (model_.resources.root.empty() &&
        !model_.resources.definitions.empty()) {
      model_.resources.root = model_.resources.definitions.front().name;
    }
    if (model_.behavior.initial.empty() && !model_.behavior.states.empty()) {
      model_.behavior.initial = model_.behavior.states.front().name;
    }
    group_rules();
    return std::move(model_);
  }

private:
  void expect_end(LineReader& r)
  {
    if (!r.at_end()) {
      r.fail("unexpected trailing text");
    }
  }

  void parse_root(LineReader& r)
  {
    model_.resources.root = r.identifier("definition name");
    if (r.accept("at")) {
      std::string base = r.word();
      if (base.empty() || base.front() != '/') {
        r.fail("root path must start with '/'");
      }
      while (base.size() > 1 && base.back() == '/') {
        base.pop_back();
      }
      model_.resources.base_path = base == "/" ? "" : base;
    }
    expect_end(r);
  }

  void parse_resource(LineReader& r)
  {
    ResourceDefinition def;
    def.line = r.number();
    def.name = r.identifier("resource name");
    if (r.accept("collection")) {
      def.kind = DefinitionKind::collection;
    } else if (def.name.rfind("collection_", 0) == 0) {
      def.kind = DefinitionKind::collection;
    }
    expect_end(r);
    model_.resources.definitions.push_back(std::move(def));
  }

  void parse_attribute(LineReader& r)
  {
    if (model_.resources.definitions.empty()) {
      r.fail_at(0, "'attr' outside of a resource section");
    }
    ResourceDefinition& def = model_.resources.definitions.back();
    Attribute attr;
    attr.name = r.identifier("attribute name", ":");
    r.expect(":");
    std::size_t type_at = (r.skip_space(), r.pos());
    std::string type = r.word();
    auto parsed = parse_attribute_type(type);
    if (!parsed) {
      r.set_pos(type_at);
      r.fail("unknown attribute type '" + type +
             "' (string, integer, boolean, timestamp, document)");
    }
    attr.type = *parsed;
    if (r.accept("key")) {
      def.id_attribute = attr.name;
    }
    expect_end(r);
    def.attributes.push_back(std::move(attr));
  }

  static std::uint64_t to_card(LineReader& r, const std::string& s)
  {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) {
          return std::isdigit(static_cast<unsigned char>(c));
        })) {
      r.fail("bad cardinality '" + s + "'");
    }
    return std::stoull(s);
  }

  void parse_association(LineReader& r)
  {
    Association a;
    a.line = r.number();
    a.source = r.identifier("source definition");
    r.expect("->");
    a.target = r.identifier("target definition", "[");
    if (r.accept("as")) {
      a.role_name = r.word("[");
    }
    bool explicit_card = false;
    if (r.accept("[")) {
      explicit_card = true;
      std::string lo = r.word(".]");
      r.expect("..");
      std::string hi = r.word("]");
      r.expect("]");
      a.min_card = to_card(r, lo);
      if (hi != "*") {
        a.max_card = to_card(r, hi);
      }
    }
    expect_end(r);
    if (!explicit_card) {
      const ResourceDefinition* src = model_.resources.find(a.source);
      bool from_collection =
          src != nullptr ? src->kind == DefinitionKind::collection
                         : a.source.rfind("collection_", 0) == 0;
      if (from_collection) {
        a.min_card = 0;
        a.max_card.reset();
      } else {
        a.min_card = 1;
        a.max_card = 1;
      }
    }
    model_.resources.associations.push_back(std::move(a));
  }

  void parse_state(LineReader& r)
  {
    State s;
    s.line = r.number();
    s.name = r.identifier("state name", ":");
    r.expect(":");
    s.invariant = r.expression(r.pos(), r.text().size());
    model_.behavior.states.push_back(std::move(s));
  }

  Trigger parse_trigger(LineReader& r)
  {
    Trigger t;
    std::size_t at = (r.skip_space(), r.pos());
    std::string method = r.word();
    auto m = parse_method(method);
    if (!m) {
      r.set_pos(at);
      r.fail("unknown HTTP method '" + method + "'");
    }
    t.method = *m;
    t.uri_template = r.word(":");
    if (t.uri_template.empty() || t.uri_template.front() != '/') {
      r.fail("URI template must start with '/'");
    }
    return t;
  }

  void parse_transition(LineReader& r)
  {
    Transition t;
    t.line = r.number();
    t.id = r.identifier("transition id", ":");
    r.expect(":");
    t.source = r.identifier("source state");
    r.expect("->");
    t.target = r.identifier("target state");
    r.expect("on");
    t.trigger = parse_trigger(r);

    const std::string& text = r.text();
    std::size_t rest = r.pos();
    struct Clause
    {
      std::string_view keyword;
      std::size_t at;
    };
    std::vector<Clause> clauses;
    for (std::string_view kw : {"guard:", "effect:", "actor:"}) {
      std::size_t at = find_keyword(text, kw, rest);
      if (at != std::string::npos) {
        clauses.push_back({kw, at});
      }
    }
    std::sort(clauses.begin(), clauses.end(),
              [](const Clause& a, const Clause& b) { return a.at < b.at; });
    std::size_t first = clauses.empty() ? text.size() : clauses.front().at;
    if (!trim(std::string_view(text).substr(rest, first - rest)).empty()) {
      r.set_pos(rest);
      r.fail("expected 'guard:', 'effect:' or 'actor:'");
    }

    for (std::size_t i = 0; i < clauses.size(); ++i) {
      std::size_t begin = clauses[i].at + clauses[i].keyword.size();
      std::size_t end =
          i + 1 < clauses.size() ? clauses[i + 1].at : text.size();
      if (clauses[i].keyword == "guard:") {
        t.guard = r.expression(begin, end);
      } else if (clauses[i].keyword == "effect:") {
        t.effect = r.expression(begin, end);
      } else {
        std::string role(trim(std::string_view(text).substr(begin, end - begin)));
        if (!is_identifier(role)) {
          r.set_pos(begin);
          r.fail("expected actor role name");
        }
        t.actor_role = role;
      }
    }
    model_.behavior.transitions.push_back(std::move(t));
  }

  void parse_rule(LineReader& r)
  {
    SecurityRule rule;
    rule.line = r.number();
    rule.id = r.identifier("rule id");
    r.expect("on");
    rule.applies_to = parse_trigger(r);
    r.expect(":");

    const std::string& text = r.text();
    if (r.accept("always")) {
      rule.body = UnconditionalRule{r.expression(r.pos(), text.size())};
    } else if (r.accept("if")) {
      std::size_t begin = r.pos();
      std::size_t then_at = find_keyword(text, "then", begin);
      if (then_at == std::string::npos) {
        r.set_pos(text.size());
        r.fail("expected 'then'");
      }
      ConditionalRule c;
      c.if_expr = r.expression(begin, then_at);
      c.then_expr = r.expression(then_at + 4, text.size());
      rule.body = std::move(c);
    } else {
      r.fail("expected 'if' or 'always'");
    }
    model_.rules.push_back(std::move(rule));
  }

  // Rows sharing a trigger and then-clause become one disjunctive rule,
  // kept at the position of the first row.
  void group_rules()
  {
    std::vector<SecurityRule> grouped;
    for (SecurityRule& rule : model_.rules) {
      auto* cond = std::get_if<ConditionalRule>(&rule.body);
      SecurityRule* into = nullptr;
      if (cond != nullptr) {
        for (SecurityRule& g : grouped) {
          auto* gc = std::get_if<ConditionalRule>(&g.body);
          if (gc != nullptr && g.applies_to == rule.applies_to &&
              gc->then_expr == cond->then_expr) {
            into = &g;
            break;
          }
        }
      }
      if (into != nullptr) {
        auto& gc = std::get<ConditionalRule>(into->body);
        gc.if_expr = Expression::make_or(gc.if_expr, cond->if_expr);
      } else {
        grouped.push_back(std::move(rule));
      }
    }
    model_.rules = std::move(grouped);
  }

  Model model_;
};


std::string card_text(const Association& a)
{
  return "[" + std::to_string(a.min_card) + ".." +
         (a.max_card ? std::to_string(*a.max_card) : std::string("*")) + "]";
}

} // namespace


Model parse_model_document(std::string_view text)
{
  return DocumentParser().parse(text);
}


Model load_model(std::string_view text)
{
  Model m = parse_model_document(text);
  std::vector<Diagnostic> diags = validate_model(m);
  if (!diags.empty()) {
    const Diagnostic& d = diags.front();
    auto kind = d.code == "unknown-reference" ? ModelError::Kind::unknown_reference
                                              : ModelError::Kind::invariant;
    throw ModelError(kind, d.message + " [" + d.code + "]", d.line);
  }
  return m;
}

Model load_model_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ModelError(ModelError::Kind::io,
                     "cannot read model file '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_model(buf.str());
}


std::string serialize_model(const Model& m)
{
  std::ostringstream out;
  const ResourceModel& rm = m.resources;
  if (!rm.root.empty()) {
    out << "root " << rm.root;
    if (!rm.base_path.empty()) {
      out << " at " << rm.base_path;
    }
    out << "\n";
  }
  for (const ResourceDefinition& def : rm.definitions) {
    out << "resource " << def.name;
    if (def.kind == DefinitionKind::collection) {
      out << " collection";
    }
    out << "\n";
    for (const Attribute& a : def.attributes) {
      out << "  attr " << a.name << ": " << to_string(a.type);
      if (def.id_attribute == a.name) {
        out << " key";
      }
      out << "\n";
    }
  }
  for (const Association& a : rm.associations) {
    out << "assoc " << a.source << " -> " << a.target;
    if (!a.role_name.empty()) {
      out << " as " << a.role_name;
    }
    out << " " << card_text(a) << "\n";
  }
  for (const State& s : m.behavior.states) {
    out << "state " << s.name << ": " << s.invariant.to_string() << "\n";
  }
  if (!m.behavior.initial.empty()) {
    out << "initial " << m.behavior.initial << "\n";
  }
  for (const Transition& t : m.behavior.transitions) {
    out << "transition " << t.id << ": " << t.source << " -> " << t.target
        << " on " << to_string(t.trigger.method) << " "
        << t.trigger.uri_template;
    if (t.guard) {
      out << " guard: " << t.guard->to_string();
    }
    if (t.effect) {
      out << " effect: " << t.effect->to_string();
    }
    if (t.actor_role) {
      out << " actor: " << *t.actor_role;
    }
    out << "\n";
  }
  for (const SecurityRule& r : m.rules) {
    out << "rule " << r.id << " on " << to_string(r.applies_to.method) << " "
        << r.applies_to.uri_template << ": ";
    if (const auto* c = std::get_if<ConditionalRule>(&r.body)) {
      out << "if " << c->if_expr.to_string() << " then "
          << c->then_expr.to_string();
    } else {
      out << "always " << std::get<UnconditionalRule>(r.body).rule_expr.to_string();
    }
    out << "\n";
  }
  return out.str();
}

} // namespace contractgate
