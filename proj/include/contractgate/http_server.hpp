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

#ifndef CONTRACTGATE_HTTP_SERVER_HPP
#define CONTRACTGATE_HTTP_SERVER_HPP

#include <functional>
#include <memory>
#include <string>
#include <thread>

#include "contractgate/http.hpp"

namespace contractgate {

// Socket front end: every method on every path goes to one handler.
class HttpServer
{
public:
  using Handler = std::function<HttpResponse(const HttpRequest&)>;

  explicit HttpServer(Handler handler);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks a free port. Returns the bound port; throws
  // std::runtime_error when the address cannot be bound.
  int bind(const std::string& host, int port);

  // Blocks until stop().
  void serve();

  // serve() on a background thread.
  void start();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

// "host:port" or "http://host:port" into (host, port).
std::pair<std::string, int> parse_listen_address(const std::string& text);


// Forwards over HTTP/1.1 to a base URL such as "http://127.0.0.1:5001".
// One connection per request.
class HttpClientUpstream : public Upstream
{
public:
  explicit HttpClientUpstream(std::string base_url);

  HttpResponse send(const HttpRequest& request,
                    std::chrono::milliseconds timeout) override;

private:
  std::string base_url_;
};

} // namespace contractgate

#endif // CONTRACTGATE_HTTP_SERVER_HPP
