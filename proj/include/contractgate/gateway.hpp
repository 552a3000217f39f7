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

#ifndef CONTRACTGATE_GATEWAY_HPP
#define CONTRACTGATE_GATEWAY_HPP

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "contractgate/contract.hpp"
#include "contractgate/http_server.hpp"
#include "contractgate/monitor.hpp"
#include "contractgate/violation_log.hpp"

namespace contractgate {

struct GatewayConfig
{
  std::string listen_address = "127.0.0.1:8080";
  std::string upstream_base_url;
  std::filesystem::path model_path;
  std::filesystem::path log_path;
  std::chrono::milliseconds probe_timeout{2000};
  std::chrono::milliseconds upstream_timeout{10000};
  bool paper_status = false;
  bool audit_get = false;
  ExpiresReading expires_reading = ExpiresReading::corrected;
  // Defaults to the system clock.
  std::function<Timestamp()> clock;
};

// Problems that prevent startup; empty when the config is usable.
std::vector<std::string> check_config(const GatewayConfig& cfg);

// FNV-1a, 64 bit, as 16 hex digits.
std::string fnv1a_hex(std::string_view data);


class Gateway
{
public:
  // Loads and validates the model; throws ModelError or
  // std::invalid_argument on a bad config. Requests go to
  // cfg.upstream_base_url.
  explicit Gateway(GatewayConfig cfg);

  // Same, with requests going to `upstream` instead.
  Gateway(GatewayConfig cfg, Upstream& upstream);

  ~Gateway();

  // Routes, operational endpoints, then the monitor. Violations are
  // queued on the log.
  HttpResponse handle(const HttpRequest& request);

  // Binds cfg.listen_address (port 0 picks one) and returns the port.
  int bind();
  void serve();
  void start();
  void stop();

  ViolationLog& log() { return *log_; }
  const Monitor& monitor() const { return *monitor_; }
  const std::string& model_checksum() const { return checksum_; }
  std::string rendered_contracts() const;

private:
  void init(Upstream& upstream);

  GatewayConfig cfg_;
  std::unique_ptr<Upstream> owned_upstream_;
  std::unique_ptr<Monitor> monitor_;
  std::unique_ptr<ViolationLog> log_;
  std::unique_ptr<HttpServer> server_;
  std::string checksum_;
};

} // namespace contractgate

#endif // CONTRACTGATE_GATEWAY_HPP
