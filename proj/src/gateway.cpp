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

#include "contractgate/gateway.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace contractgate {

std::vector<std::string> check_config(const GatewayConfig& cfg)
{
  std::vector<std::string> problems;
  if (cfg.probe_timeout.count() <= 0) {
    problems.push_back("probe timeout must be positive");
  }
  if (cfg.upstream_timeout.count() <= 0) {
    problems.push_back("upstream timeout must be positive");
  }
  if (cfg.model_path.empty()) {
    problems.push_back("no model file given");
  } else if (!std::ifstream(cfg.model_path)) {
    problems.push_back("cannot read model file " + cfg.model_path.string());
  }
  try {
    parse_listen_address(cfg.listen_address);
  } catch (const std::invalid_argument& e) {
    problems.push_back(std::string("listen address: ") + e.what());
  }
  return problems;
}

std::string fnv1a_hex(std::string_view data)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}


Gateway::Gateway(GatewayConfig cfg) : cfg_(std::move(cfg))
{
  if (cfg_.upstream_base_url.empty()) {
    throw std::invalid_argument("no upstream given");
  }
  owned_upstream_ = std::make_unique<HttpClientUpstream>(cfg_.upstream_base_url);
  init(*owned_upstream_);
}

Gateway::Gateway(GatewayConfig cfg, Upstream& upstream) : cfg_(std::move(cfg))
{
  init(upstream);
}

Gateway::~Gateway()
{
  stop();
}

void Gateway::init(Upstream& upstream)
{
  std::vector<std::string> problems = check_config(cfg_);
  if (!problems.empty()) {
    std::string all;
    for (const std::string& p : problems) {
      all += (all.empty() ? "" : "; ") + p;
    }
    throw std::invalid_argument(all);
  }

  std::ifstream in(cfg_.model_path);
  std::stringstream text;
  text << in.rdbuf();
  Model model = load_model(text.str());
  checksum_ = fnv1a_hex(text.str());

  std::vector<Contract> contracts = derive_contracts(model, cfg_.expires_reading);
  MonitorOptions opts;
  opts.probe_timeout = cfg_.probe_timeout;
  opts.upstream_timeout = cfg_.upstream_timeout;
  opts.processing_wait = cfg_.upstream_timeout;
  opts.paper_status = cfg_.paper_status;
  opts.audit_get = cfg_.audit_get;
  opts.clock = cfg_.clock;
  monitor_ = std::make_unique<Monitor>(std::move(model), std::move(contracts),
                                       upstream, opts);
  log_ = std::make_unique<ViolationLog>(cfg_.log_path);
}

std::string Gateway::rendered_contracts() const
{
  std::string out;
  for (const Contract& c : monitor_->contracts()) {
    out += (out.empty() ? "" : "\n") + render_contract(c);
  }
  return out;
}

HttpResponse Gateway::handle(const HttpRequest& request)
{
  const std::string path = request.path();
  if (request.method == "GET" && path == "/healthz") {
    nlohmann::json body = {{"status", log_->healthy() ? "ok" : "degraded"},
                           {"model_checksum", "fnv1a64:" + checksum_},
                           {"log_dropped", log_->dropped()},
                           {"log_healthy", log_->healthy()}};
    return json_response(200, body.dump());
  }
  if (request.method == "GET" && path == "/contracts") {
    HttpResponse r;
    r.headers.set("Content-Type", "text/plain; charset=utf-8");
    r.body = rendered_contracts();
    return r;
  }

  MonitorResult result = monitor_->handle(request);
  if (result.record) {
    log_->record(*result.record);
  }
  return std::move(result.response);
}

int Gateway::bind()
{
  auto [host, port] = parse_listen_address(cfg_.listen_address);
  server_ = std::make_unique<HttpServer>(
      [this](const HttpRequest& r) { return handle(r); });
  return server_->bind(host, port);
}

void Gateway::serve()
{
  if (!server_) {
    bind();
  }
  server_->serve();
}

void Gateway::start()
{
  if (!server_) {
    bind();
  }
  server_->start();
}

void Gateway::stop()
{
  if (server_) {
    server_->stop();
  }
}

} // namespace contractgate
