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

#include "contractgate/value.hpp"

#include <cctype>
#include <cstdio>

namespace contractgate {

namespace {

bool read_digits(std::string_view text, std::size_t& pos, std::size_t count,
                 int& out)
{
  if (pos + count > text.size()) {
    return false;
  }
  int v = 0;
  for (std::size_t i = 0; i < count; ++i) {
    char c = text[pos + i];
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      return false;
    }
    v = v * 10 + (c - '0');
  }
  pos += count;
  out = v;
  return true;
}

bool expect(std::string_view text, std::size_t& pos, char c)
{
  if (pos < text.size() && text[pos] == c) {
    ++pos;
    return true;
  }
  return false;
}

} // namespace


std::optional<Timestamp> parse_timestamp(std::string_view text)
{
  using namespace std::chrono;

  std::size_t pos = 0;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!read_digits(text, pos, 4, y) || !expect(text, pos, '-') ||
      !read_digits(text, pos, 2, mo) || !expect(text, pos, '-') ||
      !read_digits(text, pos, 2, d)) {
    return std::nullopt;
  }
  if (!expect(text, pos, 'T') && !expect(text, pos, ' ')) {
    return std::nullopt;
  }
  if (!read_digits(text, pos, 2, h) || !expect(text, pos, ':') ||
      !read_digits(text, pos, 2, mi) || !expect(text, pos, ':') ||
      !read_digits(text, pos, 2, s)) {
    return std::nullopt;
  }

  std::int64_t micros = 0;
  if (expect(text, pos, '.')) {
    int digits = 0;
    while (pos < text.size() &&
           std::isdigit(static_cast<unsigned char>(text[pos]))) {
      if (digits < 6) {
        micros = micros * 10 + (text[pos] - '0');
      }
      ++digits;
      ++pos;
    }
    if (digits == 0) {
      return std::nullopt;
    }
    for (int i = digits; i < 6; ++i) {
      micros *= 10;
    }
  }

  int offset_minutes = 0;
  if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
    int sign = text[pos++] == '-' ? -1 : 1;
    int oh = 0, om = 0;
    if (!read_digits(text, pos, 2, oh) || !expect(text, pos, ':') ||
        !read_digits(text, pos, 2, om) || oh > 23 || om > 59) {
      return std::nullopt;
    }
    offset_minutes = sign * (oh * 60 + om);
  } else {
    expect(text, pos, 'Z');
  }
  if (pos != text.size()) {
    return std::nullopt;
  }

  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                     day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) {
    return std::nullopt;
  }
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} +
         microseconds{micros} - minutes{offset_minutes};
}


std::string format_timestamp(Timestamp ts)
{
  using namespace std::chrono;

  auto day_point = floor<days>(ts);
  year_month_day ymd{day_point};
  auto rest = ts - day_point;
  auto h = duration_cast<hours>(rest);
  rest -= h;
  auto mi = duration_cast<minutes>(rest);
  rest -= mi;
  auto s = duration_cast<seconds>(rest);
  rest -= s;

  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d.%06lldZ",
                static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()),
                static_cast<int>(h.count()), static_cast<int>(mi.count()),
                static_cast<int>(s.count()),
                static_cast<long long>(rest.count()));
  return buf;
}


std::string_view to_string(TriBool t)
{
  switch (t) {
    case TriBool::True: return "True";
    case TriBool::False: return "False";
    case TriBool::Unknown: return "Unknown";
  }
  return "Unknown";
}


std::string describe(const Value& v)
{
  struct Visitor
  {
    std::string operator()(Absent) const { return "Absent"; }
    std::string operator()(Invalid) const { return "Invalid"; }
    std::string operator()(bool b) const { return b ? "True" : "False"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(const std::string& s) const
    {
      return "'" + s + "'";
    }
    std::string operator()(Timestamp t) const
    {
      return "#" + format_timestamp(t);
    }
    std::string operator()(Count c) const
    {
      return "count(" + std::to_string(c.n) + ")";
    }
  };
  return std::visit(Visitor{}, v.storage());
}

} // namespace contractgate
