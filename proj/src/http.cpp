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

#include "contractgate/http.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace contractgate {

bool iequals(std::string_view a, std::string_view b)
{
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::optional<std::string> Headers::get(std::string_view name) const
{
  for (const Entry& e : entries_) {
    if (iequals(e.first, name)) {
      return e.second;
    }
  }
  return std::nullopt;
}

void Headers::set(std::string name, std::string value)
{
  remove(name);
  entries_.emplace_back(std::move(name), std::move(value));
}

void Headers::add(std::string name, std::string value)
{
  entries_.emplace_back(std::move(name), std::move(value));
}

void Headers::remove(std::string_view name)
{
  entries_.erase(std::remove_if(entries_.begin(), entries_.end(),
                                [&](const Entry& e) {
                                  return iequals(e.first, name);
                                }),
                 entries_.end());
}


bool is_hop_by_hop(std::string_view name)
{
  static constexpr std::array<std::string_view, 8> hop = {
      "Connection",          "Keep-Alive", "Proxy-Authenticate",
      "Proxy-Authorization", "TE",         "Trailer",
      "Transfer-Encoding",   "Upgrade"};
  return std::any_of(hop.begin(), hop.end(),
                     [&](std::string_view h) { return iequals(h, name); });
}

Headers strip_hop_by_hop(const Headers& h)
{
  std::vector<std::string> named;
  for (const auto& [name, value] : h) {
    if (!iequals(name, "Connection")) {
      continue;
    }
    std::size_t pos = 0;
    while (pos <= value.size()) {
      std::size_t comma = value.find(',', pos);
      std::string token = value.substr(pos, comma - pos);
      token.erase(0, token.find_first_not_of(" \t"));
      token.erase(token.find_last_not_of(" \t") + 1);
      if (!token.empty()) {
        named.push_back(token);
      }
      if (comma == std::string::npos) {
        break;
      }
      pos = comma + 1;
    }
  }

  Headers out;
  for (const auto& [name, value] : h) {
    bool listed = std::any_of(named.begin(), named.end(), [&](const auto& n) {
      return iequals(n, name);
    });
    if (!is_hop_by_hop(name) && !listed) {
      out.add(name, value);
    }
  }
  return out;
}


std::string HttpRequest::path() const
{
  return target.substr(0, target.find('?'));
}

HttpResponse json_response(int status, const std::string& body)
{
  HttpResponse r;
  r.status = status;
  r.headers.set("Content-Type", "application/json");
  r.body = body;
  return r;
}


namespace {

constexpr std::string_view b64 =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(std::string_view in)
{
  std::string out;
  std::size_t i = 0;
  while (i + 2 < in.size()) {
    unsigned n = (static_cast<unsigned char>(in[i]) << 16) |
                 (static_cast<unsigned char>(in[i + 1]) << 8) |
                 static_cast<unsigned char>(in[i + 2]);
    out += b64[(n >> 18) & 63];
    out += b64[(n >> 12) & 63];
    out += b64[(n >> 6) & 63];
    out += b64[n & 63];
    i += 3;
  }
  if (i + 1 == in.size()) {
    unsigned n = static_cast<unsigned char>(in[i]) << 16;
    out += b64[(n >> 18) & 63];
    out += b64[(n >> 12) & 63];
    out += "==";
  } else if (i + 2 == in.size()) {
    unsigned n = (static_cast<unsigned char>(in[i]) << 16) |
                 (static_cast<unsigned char>(in[i + 1]) << 8);
    out += b64[(n >> 18) & 63];
    out += b64[(n >> 12) & 63];
    out += b64[(n >> 6) & 63];
    out += '=';
  }
  return out;
}

std::optional<std::string> base64_decode(std::string_view in)
{
  std::string out;
  unsigned buffer = 0;
  int bits = 0;
  for (char c : in) {
    if (c == '=') {
      break;
    }
    std::size_t v = b64.find(c);
    if (v == std::string_view::npos) {
      return std::nullopt;
    }
    buffer = (buffer << 6) | static_cast<unsigned>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out += static_cast<char>((buffer >> bits) & 0xff);
    }
  }
  return out;
}

} // namespace

std::optional<std::pair<std::string, std::string>> parse_basic_auth(
    std::string_view header)
{
  constexpr std::string_view scheme = "Basic ";
  if (header.size() <= scheme.size() ||
      !iequals(header.substr(0, scheme.size()), scheme)) {
    return std::nullopt;
  }
  auto decoded = base64_decode(header.substr(scheme.size()));
  if (!decoded) {
    return std::nullopt;
  }
  std::size_t colon = decoded->find(':');
  if (colon == std::string::npos) {
    return std::nullopt;
  }
  return std::make_pair(decoded->substr(0, colon), decoded->substr(colon + 1));
}

std::string basic_auth_header(std::string_view user, std::string_view password)
{
  std::string joined(user);
  joined += ':';
  joined += password;
  return "Basic " + base64_encode(joined);
}

} // namespace contractgate
