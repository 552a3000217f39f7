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

#ifndef CONTRACTGATE_HTTP_HPP
#define CONTRACTGATE_HTTP_HPP

#include <chrono>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace contractgate {

// Ordered header list with case-insensitive lookup.
class Headers
{
public:
  using Entry = std::pair<std::string, std::string>;

  Headers() = default;
  Headers(std::initializer_list<Entry> entries) : entries_(entries) {}

  std::optional<std::string> get(std::string_view name) const;
  bool has(std::string_view name) const { return get(name).has_value(); }

  // Replaces every existing entry with that name.
  void set(std::string name, std::string value);
  void add(std::string name, std::string value);
  void remove(std::string_view name);

  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  bool operator==(const Headers&) const = default;

private:
  std::vector<Entry> entries_;
};

bool iequals(std::string_view a, std::string_view b);

// Connection, Keep-Alive, Transfer-Encoding and the other RFC 7230 hop
// headers, plus anything named by a Connection header.
bool is_hop_by_hop(std::string_view name);
Headers strip_hop_by_hop(const Headers& h);


struct HttpRequest
{
  std::string method;
  // Path plus optional query.
  std::string target;
  Headers headers;
  std::string body;

  std::string path() const;
};

struct HttpResponse
{
  int status = 200;
  Headers headers;
  std::string body;
};

HttpResponse json_response(int status, const std::string& body);


class TransportError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Where requests go once they pass the pre check, and where probes are
// sent. Implementations throw TransportError when no response arrived.
class Upstream
{
public:
  virtual ~Upstream() = default;
  virtual HttpResponse send(const HttpRequest& request,
                            std::chrono::milliseconds timeout) = 0;
};

// Calls a handler in-process. Used by tests to skip the socket layer.
class FunctionUpstream : public Upstream
{
public:
  using Handler = std::function<HttpResponse(const HttpRequest&)>;

  explicit FunctionUpstream(Handler handler) : handler_(std::move(handler)) {}

  HttpResponse send(const HttpRequest& request,
                    std::chrono::milliseconds) override
  {
    return handler_(request);
  }

private:
  Handler handler_;
};

// Basic-auth credentials, or nullopt when the header is missing/malformed.
std::optional<std::pair<std::string, std::string>> parse_basic_auth(
    std::string_view header);
std::string basic_auth_header(std::string_view user, std::string_view password);

} // namespace contractgate

#endif // CONTRACTGATE_HTTP_HPP
