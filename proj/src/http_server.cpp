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

#include "contractgate/http_server.hpp"

#include <httplib.h>

#include <stdexcept>

namespace contractgate {

namespace {

// Set by httplib on incoming requests; never part of the wire request.
bool is_pseudo_header(const std::string& name)
{
  return name == "REMOTE_ADDR" || name == "REMOTE_PORT" ||
         name == "LOCAL_ADDR" || name == "LOCAL_PORT";
}

HttpRequest from_httplib(const httplib::Request& req)
{
  HttpRequest out;
  out.method = req.method;
  out.target = req.target.empty() ? req.path : req.target;
  out.body = req.body;
  for (const auto& [name, value] : req.headers) {
    if (!is_pseudo_header(name)) {
      out.headers.add(name, value);
    }
  }
  return out;
}

void to_httplib(const HttpResponse& in, httplib::Response& res)
{
  res.status = in.status;
  for (const auto& [name, value] : in.headers) {
    if (iequals(name, "Content-Length") || is_hop_by_hop(name)) {
      continue;
    }
    res.set_header(name, value);
  }
  // httplib writes Content-Length from the body.
  res.body = in.body;
}

} // namespace


struct HttpServer::Impl
{
  httplib::Server server;
};

HttpServer::HttpServer(Handler handler) : impl_(std::make_unique<Impl>())
{
  auto route = [handler = std::move(handler)](const httplib::Request& req,
                                              httplib::Response& res) {
    HttpResponse out;
    try {
      out = handler(from_httplib(req));
    } catch (const std::exception&) {
      out = json_response(500, std::string("{\"error\":\"internal\"}"));
    }
    to_httplib(out, res);
  };
  const std::string any = ".*";
  impl_->server.Get(any, route);
  impl_->server.Post(any, route);
  impl_->server.Put(any, route);
  impl_->server.Patch(any, route);
  impl_->server.Delete(any, route);
  impl_->server.Options(any, route);
}

HttpServer::~HttpServer()
{
  stop();
}

int HttpServer::bind(const std::string& host, int port)
{
  if (port == 0) {
    int bound = impl_->server.bind_to_any_port(host);
    if (bound <= 0) {
      throw std::runtime_error("cannot bind " + host);
    }
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" +
                             std::to_string(port));
  }
  return port;
}

void HttpServer::serve()
{
  impl_->server.listen_after_bind();
}

void HttpServer::start()
{
  thread_ = std::thread([this] { serve(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop()
{
  impl_->server.stop();
  if (thread_.joinable()) {
    thread_.join();
  }
}

std::pair<std::string, int> parse_listen_address(const std::string& text)
{
  std::string rest = text;
  if (auto scheme = rest.find("://"); scheme != std::string::npos) {
    rest = rest.substr(scheme + 3);
  }
  if (!rest.empty() && rest.back() == '/') {
    rest.pop_back();
  }
  auto colon = rest.rfind(':');
  if (colon == std::string::npos || colon + 1 == rest.size()) {
    throw std::invalid_argument("expected host:port, got '" + text + "'");
  }
  std::string host = rest.substr(0, colon);
  int port = 0;
  try {
    std::size_t used = 0;
    port = std::stoi(rest.substr(colon + 1), &used);
    if (used != rest.size() - colon - 1 || port < 0 || port > 65535) {
      throw std::invalid_argument("port");
    }
  } catch (const std::exception&) {
    throw std::invalid_argument("bad port in '" + text + "'");
  }
  return {host.empty() ? "0.0.0.0" : host, port};
}


HttpClientUpstream::HttpClientUpstream(std::string base_url)
  : base_url_(std::move(base_url))
{
  if (base_url_.find("://") == std::string::npos) {
    base_url_ = "http://" + base_url_;
  }
  while (!base_url_.empty() && base_url_.back() == '/') {
    base_url_.pop_back();
  }
}

HttpResponse HttpClientUpstream::send(const HttpRequest& request,
                                      std::chrono::milliseconds timeout)
{
  httplib::Client client(base_url_);
  if (!client.is_valid()) {
    throw TransportError("invalid upstream url " + base_url_);
  }
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  client.set_keep_alive(false);

  httplib::Request req;
  req.method = request.method;
  req.path = request.target;
  req.body = request.body;
  for (const auto& [name, value] : request.headers) {
    req.headers.emplace(name, value);
  }

  httplib::Result result = client.send(req);
  if (!result) {
    throw TransportError(httplib::to_string(result.error()));
  }
  HttpResponse out;
  out.status = result->status;
  out.body = result->body;
  for (const auto& [name, value] : result->headers) {
    out.headers.add(name, value);
  }
  return out;
}

} // namespace contractgate
