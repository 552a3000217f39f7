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

#ifndef CONTRACTGATE_MOCK_KEYSTONE_HPP
#define CONTRACTGATE_MOCK_KEYSTONE_HPP

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "contractgate/http.hpp"
#include "contractgate/value.hpp"

namespace contractgate {

struct FaultProfile
{
  // Scoped tokens come back without a catalog.
  bool omit_catalog = false;
  // Non-admin bearers may delete users.
  bool allow_nonadmin_delete = false;
  // Tokens are issued already expired.
  bool issue_expired = false;
  // Successful token issuance answers 500 with the success body.
  bool wrong_status = false;
};

// "omit-catalog", "allow-nonadmin-delete", "issue-expired", "wrong-status".
bool enable_fault(FaultProfile& f, std::string_view name);


struct UserRecord
{
  std::string id;
  std::string name;
  std::string password;
  std::vector<std::string> roles;
  std::vector<std::string> projects;
};

struct TokenRecord
{
  std::string user_id;
  std::vector<std::string> methods;
  Timestamp issued_at;
  Timestamp expires_at;
  std::optional<std::string> project_id;
  std::optional<std::string> domain_id;
  bool catalog = false;
};

struct IdentityStore
{
  std::vector<UserRecord> users;
  std::map<std::string, TokenRecord> tokens;
  std::map<std::string, std::string> projects; // id -> name
  std::map<std::string, std::string> roles;    // id -> name
  std::uint64_t rng_seed = 1;

  static IdentityStore from_seed(const nlohmann::json& seed);
  static IdentityStore from_seed_file(const std::filesystem::path& seed);

  const UserRecord* find_user(std::string_view id_or_name) const;
};


class MockKeystone
{
public:
  struct Options
  {
    FaultProfile faults;
    std::chrono::seconds ttl{3600};
    // Defaults to the system clock.
    std::function<Timestamp()> clock;
  };

  struct LogEntry
  {
    std::string method;
    std::string target;
    std::string user_agent;
    int status = 0;
  };

  MockKeystone(IdentityStore store, Options options);

  HttpResponse handle(const HttpRequest& request);

  std::vector<LogEntry> log() const;
  void clear_log();

  // Requests received with the given method.
  std::size_t count(std::string_view method) const;
  // PUT, POST, DELETE and PATCH requests received.
  std::size_t side_effect_count() const;

  const Options& options() const { return options_; }

private:
  HttpResponse dispatch(const HttpRequest& request);
  HttpResponse post_tokens(const HttpRequest& request);
  HttpResponse get_token(const HttpRequest& request);
  HttpResponse users(const HttpRequest& request,
                     const std::vector<std::string>& parts);
  HttpResponse delete_user(const HttpRequest& request, const std::string& id);
  HttpResponse listing(const HttpRequest& request,
                       const std::map<std::string, std::string>& items,
                       const std::string& plural, const std::string& singular,
                       const std::vector<std::string>& parts);

  Timestamp now() const;
  std::string new_token_id();
  const TokenRecord* valid_token(const std::string& id) const;
  const UserRecord* authenticate(const HttpRequest& request) const;
  nlohmann::json token_body(const TokenRecord& t) const;
  nlohmann::json user_body(const UserRecord& u) const;

  mutable std::mutex mutex_;
  IdentityStore store_;
  Options options_;
  std::mt19937_64 rng_;
  std::vector<LogEntry> log_;
};

} // namespace contractgate

#endif // CONTRACTGATE_MOCK_KEYSTONE_HPP
