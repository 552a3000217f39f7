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

#include <cctype>
#include <limits>

#include "contractgate/expression.hpp"

namespace contractgate {

namespace {

enum class Tok {
  ident,
  integer,
  string,
  lparen,
  rparen,
  dot,
  arrow,
  implies,
  eq,
  ne,
  lt,
  le,
  gt,
  ge,
  end,
};

struct Token
{
  Tok kind = Tok::end;
  std::string text;
  std::size_t offset = 0;
};

std::string join(const std::vector<std::string>& items)
{
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) {
      out += ", ";
    }
    out += items[i];
  }
  return out;
}


class Lexer
{
public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run()
  {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.offset = pos_;
      if (pos_ >= text_.size()) {
        t.kind = Tok::end;
        out.push_back(t);
        return out;
      }
      char c = text_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                text_[pos_] == '_')) {
          ++pos_;
        }
        t.kind = Tok::ident;
        t.text = std::string(text_.substr(start, pos_ - start));
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          ++pos_;
        }
        t.kind = Tok::integer;
        t.text = std::string(text_.substr(start, pos_ - start));
      } else if (c == '\'') {
        t.kind = Tok::string;
        t.text = read_string();
      } else {
        t.kind = punctuation(t.text);
      }
      out.push_back(std::move(t));
    }
  }

private:
  void skip_space()
  {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  // Single-quoted; a doubled quote stands for one quote character.
  std::string read_string()
  {
    std::size_t start = pos_;
    ++pos_;
    std::string out;
    while (true) {
      if (pos_ >= text_.size()) {
        throw ParseError(start, {"'"}, "unterminated string literal");
      }
      char c = text_[pos_++];
      if (c == '\'') {
        if (pos_ < text_.size() && text_[pos_] == '\'') {
          out += '\'';
          ++pos_;
          continue;
        }
        return out;
      }
      out += c;
    }
  }

  Tok punctuation(std::string& text)
  {
    auto starts = [&](std::string_view s) {
      return text_.substr(pos_, s.size()) == s;
    };
    struct Entry
    {
      std::string_view spelling;
      Tok kind;
    };
    // Longest spellings first.
    static constexpr Entry table[] = {
        {"==>", Tok::implies}, {"->", Tok::arrow}, {"<>", Tok::ne},
        {"<=", Tok::le},       {">=", Tok::ge},    {"(", Tok::lparen},
        {")", Tok::rparen},    {".", Tok::dot},    {"=", Tok::eq},
        {"<", Tok::lt},        {">", Tok::gt},
    };
    for (const Entry& e : table) {
      if (starts(e.spelling)) {
        text = std::string(e.spelling);
        pos_ += e.spelling.size();
        return e.kind;
      }
    }
    throw ParseError(pos_, {"expression"},
                     std::string("unexpected character '") + text_[pos_] +
                         "' at offset " + std::to_string(pos_));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};


bool is_keyword(const std::string& s)
{
  return s == "and" || s == "or" || s == "not" || s == "True" ||
         s == "False" || s == "clockTime";
}

bool is_call_name(const std::string& s)
{
  return s == "size" || s == "oclIsInvalid";
}

const std::vector<std::string>& term_starts()
{
  static const std::vector<std::string> v = {
      "(", "not", "True", "False", "clockTime", "integer", "string",
      "identifier"};
  return v;
}


class Parser
{
public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  Expression parse()
  {
    Expression e = parse_implies();
    if (peek().kind != Tok::end) {
      fail({"and", "or", "==>", "end of input"});
    }
    return e;
  }

private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& peek_next() const
  {
    return tokens_[pos_ + 1 < tokens_.size() ? pos_ + 1 : pos_];
  }
  const Token& advance() { return tokens_[pos_++]; }

  bool at_word(std::string_view word) const
  {
    return peek().kind == Tok::ident && peek().text == word;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const
  {
    const Token& t = peek();
    std::string found = t.kind == Tok::end ? "end of input" : "'" + t.text + "'";
    std::string message = "syntax error at offset " +
                          std::to_string(t.offset) + ": found " + found +
                          ", expected one of: " + join(expected);
    throw ParseError(t.offset, std::move(expected), message);
  }

  void expect(Tok kind, const std::string& spelling)
  {
    if (peek().kind != kind) {
      fail({spelling});
    }
    advance();
  }

  Expression parse_implies()
  {
    Expression lhs = parse_or();
    if (peek().kind == Tok::implies) {
      advance();
      return Expression::make_implies(lhs, parse_implies());
    }
    return lhs;
  }

  Expression parse_or()
  {
    Expression lhs = parse_and();
    while (at_word("or")) {
      advance();
      lhs = Expression::make_or(lhs, parse_and());
    }
    return lhs;
  }

  Expression parse_and()
  {
    Expression lhs = parse_unary();
    while (at_word("and")) {
      advance();
      lhs = Expression::make_and(lhs, parse_unary());
    }
    return lhs;
  }

  Expression parse_unary()
  {
    if (at_word("not")) {
      advance();
      return Expression::make_not(parse_unary());
    }
    return parse_compare();
  }

  static bool comparable(const Expression& e)
  {
    switch (e.kind()) {
      case ExprKind::path_ref:
      case ExprKind::literal:
      case ExprKind::size_of:
      case ExprKind::clock_time:
        return true;
      default:
        return false;
    }
  }

  Expression parse_compare()
  {
    std::size_t lhs_offset = peek().offset;
    Expression lhs = parse_term();
    CompareOp op;
    switch (peek().kind) {
      case Tok::eq: op = CompareOp::eq; break;
      case Tok::ne: op = CompareOp::ne; break;
      case Tok::lt: op = CompareOp::lt; break;
      case Tok::le: op = CompareOp::le; break;
      case Tok::gt: op = CompareOp::gt; break;
      case Tok::ge: op = CompareOp::ge; break;
      default: return lhs;
    }
    advance();
    std::size_t rhs_offset = peek().offset;
    Expression rhs = parse_term();
    if (!comparable(lhs) || !comparable(rhs)) {
      std::size_t at = comparable(lhs) ? rhs_offset : lhs_offset;
      throw ParseError(
          at, {"path", "literal", "size()", "clockTime"},
          "comparison operand at offset " + std::to_string(at) +
              " must be a path, literal, size() or clockTime");
    }
    return Expression::make_compare(op, lhs, rhs);
  }

  Expression parse_term()
  {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::lparen: {
        advance();
        Expression inner = parse_implies();
        expect(Tok::rparen, ")");
        return inner;
      }
      case Tok::integer: {
        advance();
        std::int64_t v = 0;
        for (char c : t.text) {
          if (v > (std::numeric_limits<std::int64_t>::max() - (c - '0')) / 10) {
            throw ParseError(t.offset, {"integer"},
                             "integer literal out of range at offset " +
                                 std::to_string(t.offset));
          }
          v = v * 10 + (c - '0');
        }
        return Expression::make_literal(Value(v));
      }
      case Tok::string:
        advance();
        return Expression::make_literal(Value(t.text));
      case Tok::ident:
        break;
      default:
        fail(term_starts());
    }

    if (t.text == "True" || t.text == "False") {
      advance();
      return Expression::make_literal(Value(t.text == "True"));
    }
    if (t.text == "clockTime") {
      advance();
      return Expression::make_clock_time();
    }
    if (is_keyword(t.text)) {
      fail(term_starts());
    }
    return parse_path_term();
  }

  Expression parse_path_term()
  {
    std::vector<std::string> segments{advance().text};
    std::string call;
    while (true) {
      if (peek().kind == Tok::dot) {
        advance();
        if (peek().kind != Tok::ident || is_keyword(peek().text)) {
          fail({"identifier", "size", "oclIsInvalid"});
        }
        if (is_call_name(peek().text) && peek_next().kind == Tok::lparen) {
          call = advance().text;
          break;
        }
        segments.push_back(advance().text);
        continue;
      }
      if (peek().kind == Tok::arrow) {
        advance();
        if (peek().kind != Tok::ident || !is_call_name(peek().text)) {
          fail({"size", "oclIsInvalid"});
        }
        call = advance().text;
        break;
      }
      break;
    }

    Path path(std::move(segments));
    if (call.empty()) {
      return Expression::make_path(std::move(path));
    }
    expect(Tok::lparen, "(");
    expect(Tok::rparen, ")");
    return call == "size" ? Expression::make_size_of(std::move(path))
                          : Expression::make_is_invalid(std::move(path));
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

} // namespace


ParseError::ParseError(std::size_t offset, std::vector<std::string> expected,
                       const std::string& message)
  : std::runtime_error(message),
    offset_(offset),
    expected_(std::move(expected))
{}


Expression parse_expression(std::string_view text)
{
  Lexer lexer(text);
  Parser parser(lexer.run());
  return parser.parse();
}

} // namespace contractgate
