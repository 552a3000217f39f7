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

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "contractgate/contract.hpp"
#include "contractgate/gateway.hpp"
#include "contractgate/mock_keystone.hpp"

using namespace contractgate;

namespace {

constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

std::optional<std::string> read_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in) {
    return std::nullopt;
  }
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Must run before any thread starts so that every thread inherits the
// mask and only the waiter sees SIGINT/SIGTERM.
sigset_t block_stop_signals()
{
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

void stop_on_signal(sigset_t set, std::function<void()> stop)
{
  std::thread([set, stop = std::move(stop)] {
    int sig = 0;
    sigwait(&set, &sig);
    stop();
  }).detach();
}

std::function<Timestamp()> fixed_clock(const std::string& iso)
{
  auto ts = parse_timestamp(iso);
  if (!ts) {
    throw CLI::ValidationError("--clock", "expected an ISO-8601 UTC time");
  }
  return [t = *ts] { return t; };
}

int validate(const std::string& path)
{
  auto text = read_file(path);
  if (!text) {
    std::cerr << "error: cannot read " << path << "\n";
    return kDomainError;
  }
  Model model;
  try {
    model = parse_model_document(*text);
  } catch (const ModelError& e) {
    std::cerr << path << ":" << e.line() << ":" << e.column() << ": "
              << e.what() << "\n";
    return kDomainError;
  }
  std::vector<Diagnostic> diags = validate_model(model);
  for (const Diagnostic& d : diags) {
    std::cout << path << ":" << to_string(d) << "\n";
  }
  RouteTable routes = derive_routes(model.resources, model.behavior);
  for (const std::string& a : routes.ambiguities) {
    std::cout << path << ": warning: " << a << "\n";
  }
  if (!diags.empty()) {
    return kDomainError;
  }
  std::cout << path << ": ok (" << model.resources.definitions.size()
            << " definitions, " << model.behavior.transitions.size()
            << " transitions, " << model.rules.size() << " rules)\n";
  return kOk;
}

int contracts(const std::string& path, const std::string& reading)
{
  auto text = read_file(path);
  if (!text) {
    std::cerr << "error: cannot read " << path << "\n";
    return kDomainError;
  }
  try {
    Model model = load_model(*text);
    bool first = true;
    for (const Contract& c :
         derive_contracts(model, *parse_expires_reading(reading))) {
      std::cout << (first ? "" : "\n") << render_contract(c);
      first = false;
    }
  } catch (const ModelError& e) {
    std::cerr << path << ":" << e.line() << ": " << e.what() << "\n";
    return kDomainError;
  }
  return kOk;
}

} // namespace


int main(int argc, char** argv)
{
  CLI::App app{"Contract-checking gateway for REST services"};
  app.require_subcommand(1);

  auto* validate_cmd = app.add_subcommand("validate", "Check a model file");
  std::string validate_path;
  validate_cmd->add_option("model", validate_path, "Model file")->required();

  auto* contracts_cmd =
      app.add_subcommand("contracts", "Print derived contracts");
  std::string contracts_path;
  std::string contracts_reading = "corrected";
  contracts_cmd->add_option("model", contracts_path, "Model file")->required();
  contracts_cmd
      ->add_option("--expires-reading", contracts_reading,
                   "Orientation of expires_at checks")
      ->check(CLI::IsMember({"paper", "corrected"}));

  auto* run_cmd = app.add_subcommand("run", "Start the gateway");
  GatewayConfig cfg;
  std::string model_path;
  std::string log_path;
  std::string reading = "corrected";
  std::string gateway_clock;
  long probe_ms = 2000;
  long upstream_ms = 10000;
  run_cmd->add_option("--listen", cfg.listen_address, "host:port")
      ->envname("CONTRACTGATE_LISTEN")
      ->capture_default_str();
  run_cmd->add_option("--upstream", cfg.upstream_base_url, "Upstream base URL")
      ->envname("CONTRACTGATE_UPSTREAM")
      ->required();
  run_cmd->add_option("--model", model_path, "Model file")
      ->envname("CONTRACTGATE_MODEL")
      ->required();
  run_cmd->add_option("--log", log_path, "Violation log (JSON lines)")
      ->envname("CONTRACTGATE_LOG");
  run_cmd->add_option("--probe-timeout-ms", probe_ms)
      ->envname("CONTRACTGATE_PROBE_TIMEOUT_MS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--upstream-timeout-ms", upstream_ms)
      ->envname("CONTRACTGATE_UPSTREAM_TIMEOUT_MS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_flag("--paper-status", cfg.paper_status,
                    "Answer every violation with 404")
      ->envname("CONTRACTGATE_PAPER_STATUS");
  run_cmd->add_flag("--audit-get", cfg.audit_get,
                    "Check state invariants after GET requests")
      ->envname("CONTRACTGATE_AUDIT_GET");
  run_cmd->add_option("--expires-reading", reading)
      ->envname("CONTRACTGATE_EXPIRES_READING")
      ->check(CLI::IsMember({"paper", "corrected"}))
      ->capture_default_str();
  run_cmd->add_option("--clock", gateway_clock, "Fixed current time (tests)")
      ->envname("CONTRACTGATE_CLOCK");

  auto* mock_cmd = app.add_subcommand("mock", "Start the mock identity service");
  std::string mock_listen = "127.0.0.1:5001";
  std::string seed_path;
  std::vector<std::string> faults;
  long ttl = 3600;
  std::string mock_clock;
  mock_cmd->add_option("--listen", mock_listen)->capture_default_str();
  mock_cmd->add_option("--seed", seed_path, "Seed file (JSON)")->required();
  mock_cmd->add_option("--fault", faults, "Fault to inject (repeatable)")
      ->check(CLI::IsMember({"omit-catalog", "allow-nonadmin-delete",
                             "issue-expired", "wrong-status"}));
  mock_cmd->add_option("--ttl", ttl, "Token lifetime in seconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  mock_cmd->add_option("--clock", mock_clock, "Fixed current time");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  if (*validate_cmd) {
    return validate(validate_path);
  }
  if (*contracts_cmd) {
    return contracts(contracts_path, contracts_reading);
  }

  sigset_t stop_signals = block_stop_signals();
  try {
    if (*run_cmd) {
      cfg.model_path = model_path;
      cfg.log_path = log_path;
      cfg.probe_timeout = std::chrono::milliseconds(probe_ms);
      cfg.upstream_timeout = std::chrono::milliseconds(upstream_ms);
      cfg.expires_reading = *parse_expires_reading(reading);
      if (!gateway_clock.empty()) {
        cfg.clock = fixed_clock(gateway_clock);
      }
      Gateway gateway(cfg);
      int port = gateway.bind();
      std::cerr << "contractgate: listening on port " << port
                << ", upstream " << cfg.upstream_base_url << ", model checksum "
                << gateway.model_checksum() << "\n";
      stop_on_signal(stop_signals, [&gateway] { gateway.stop(); });
      gateway.serve();
      gateway.log().flush();
      return kOk;
    }

    MockKeystone::Options options;
    options.ttl = std::chrono::seconds(ttl);
    for (const std::string& f : faults) {
      enable_fault(options.faults, f);
    }
    if (!mock_clock.empty()) {
      options.clock = fixed_clock(mock_clock);
    }
    MockKeystone mock(IdentityStore::from_seed_file(seed_path), options);
    HttpServer server([&mock](const HttpRequest& r) { return mock.handle(r); });
    auto [host, port] = parse_listen_address(mock_listen);
    int bound = server.bind(host, port);
    std::cerr << "mock identity service: listening on port " << bound << "\n";
    stop_on_signal(stop_signals, [&server] { server.stop(); });
    server.serve();
    return kOk;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ModelError& e) {
    std::cerr << "error: model: " << e.what() << "\n";
    return kDomainError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainError;
  }
}
