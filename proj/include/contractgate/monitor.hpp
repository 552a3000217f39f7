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

#ifndef CONTRACTGATE_MONITOR_HPP
#define CONTRACTGATE_MONITOR_HPP

#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "contractgate/contract.hpp"
#include "contractgate/evaluator.hpp"
#include "contractgate/http.hpp"
#include "contractgate/model.hpp"

namespace contractgate {

// User-Agent carried by every probe so upstream logs can tell them apart.
inline constexpr const char* kProbeAgent = "contractgate-probe/1";

struct RequestContext
{
  HttpMethod method = HttpMethod::GET;
  // Concrete path, query removed.
  std::string uri;
  std::map<std::string, std::string> path_params;
  Headers headers;
  // Empty object when the body is missing or does not parse.
  nlohmann::json body = nlohmann::json::object();
  Timestamp arrival_time;
};

RequestContext make_context(HttpMethod method, const HttpRequest& request,
                            const RouteMatch& route, Timestamp arrival);


struct Snapshot
{
  std::map<std::string, Value> bindings; // keyed by Path::key()
  Timestamp captured_at;

  std::optional<Value> get(const Path& p) const;
};


enum class Outcome {
  pass,
  pre_violation,
  post_violation,
  unmodeled_method,
  // GET responses checked against the state invariants (--audit-get).
  audit_violation,
};

std::string_view to_string(Outcome o);

struct FailedAtom
{
  std::string expr;
  TriBool value = TriBool::Unknown;
  // "conjunct", "antecedent" or "consequent".
  std::string role = "conjunct";
};

struct Timing
{
  double probe_ms = 0;
  double upstream_ms = 0;
  double total_ms = 0;
};

struct Verdict
{
  Outcome outcome = Outcome::pass;
  std::vector<FailedAtom> failed_atoms;
  std::string contract_id;
  Timing timing;
};

struct ViolationRecord
{
  Timestamp ts;
  Verdict verdict;
  std::string method;
  std::string uri;
  std::optional<std::string> requester;
  std::optional<int> upstream_status;

  // "pre", "post" or "audit".
  std::string phase() const;
  nlohmann::json to_json() const;
};


/**
 * Resolves paths for one request. Resource paths are answered by GET
 * probes against the upstream:
 *
 *  - members keyed by an id attribute use the matching `{x_id}` path
 *    parameter of the live request;
 *  - `user.role` and `user.credential` always describe the requester
 *    (password credentials are checked with a Basic-auth GET of the user,
 *    a token with a GET of its owner);
 *  - header-addressed members (tokens) are probed with the presented
 *    token as X-Subject-Token;
 *  - collections resolve to the Count of their listing.
 *
 * 200 means present, 404 absent, anything else Invalid. Probe results
 * are cached per phase for the lifetime of the resolver.
 */
class ProbeResolver
{
public:
  ProbeResolver(const RequestContext& ctx, const ResourceModel& rm,
                const RouteTable& routes, Upstream& upstream,
                std::chrono::milliseconds probe_timeout);

  Value pre(const Path& p);

  // The definition behind `uri_template` is read from the response
  // itself when it carries a representation.
  Value post(const Path& p, const HttpResponse& response,
             const std::string& uri_template);

  void set_processing(bool v) { processing_ = v; }

  // Name or id of the requester when it could be established.
  std::optional<std::string> requester() const { return requester_; }

  double probe_ms() const { return probe_ms_; }
  std::size_t probe_count() const { return probe_count_; }

private:
  struct Probe
  {
    int status = 0; // 0: transport failure
    nlohmann::json body;
  };

  struct Auth
  {
    std::optional<std::string> token;
    std::optional<std::pair<std::string, std::string>> password;
  };

  Value resolve(const Path& p, Phase phase);
  Value request_value(const Path& p) const;
  Value resource(const Path& p, Phase phase);
  Value token_value(const std::string& attr, Phase phase);
  Value principal_value(const std::string& attr, Phase phase);
  Value member_value(const ResourceDefinition& def, const std::string& attr,
                     Phase phase);
  Value collection_value(const ResourceDefinition& def, Phase phase);

  Probe probe(const std::string& uri, const Headers& extra, Phase phase);
  Probe token_probe(const std::string& token, Phase phase);
  Headers auth_headers(Phase phase) const;
  std::optional<nlohmann::json> principal(Phase phase);

  const Auth& auth(Phase phase) const
  {
    return phase == Phase::pre ? pre_auth_ : post_auth_;
  }

  const RequestContext& ctx_;
  const ResourceModel& rm_;
  const RouteTable& routes_;
  Upstream& upstream_;
  std::chrono::milliseconds timeout_;

  Auth pre_auth_;
  Auth post_auth_;
  bool processing_ = false;

  // Post-phase state taken from the upstream response.
  const HttpResponse* response_ = nullptr;
  std::string acted_on_;
  std::optional<nlohmann::json> response_body_;

  std::map<std::pair<std::string, Phase>, Probe> cache_;
  std::map<Phase, std::optional<nlohmann::json>> principal_;
  std::optional<std::string> requester_;
  double probe_ms_ = 0;
  std::size_t probe_count_ = 0;
};


// Environment in the pre phase plus the frozen snapshot of every path in
// the contract's snapshot set.
std::pair<Environment, Snapshot> resolve_pre_env(const RequestContext& ctx,
                                                 const Contract& c,
                                                 ProbeResolver& resolver);

// Pre-phase lookups (implication antecedents) read the snapshot; the
// rest resolve against the response and fresh probes.
Environment resolve_post_env(const RequestContext& ctx, const Contract& c,
                             const HttpResponse& response,
                             const Snapshot& snapshot, ProbeResolver& resolver,
                             Timestamp completed_at);

Verdict check_precondition(const Contract& c, Environment& env);
Verdict check_postcondition(const Contract& c, Environment& env);


/**
 * Per-URI processing flags. A side-effect request holds the flag for its
 * concrete URI from the pre check until the upstream answers; a second
 * request on the same URI waits up to `wait` and then sees
 * `self.processing=True`.
 */
class ProcessingRegistry
{
public:
  class Lease
  {
  public:
    Lease() = default;
    Lease(ProcessingRegistry* owner, std::string key)
      : owner_(owner), key_(std::move(key))
    {}
    Lease(Lease&& o) noexcept : owner_(o.owner_), key_(std::move(o.key_))
    {
      o.owner_ = nullptr;
    }
    Lease& operator=(Lease&&) = delete;
    ~Lease();

    bool held() const { return owner_ != nullptr; }

  private:
    ProcessingRegistry* owner_ = nullptr;
    std::string key_;
  };

  Lease acquire(const std::string& key, std::chrono::milliseconds wait);
  bool busy(const std::string& key) const;

private:
  void release(const std::string& key);

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::set<std::string> active_;
};


struct MonitorOptions
{
  std::chrono::milliseconds probe_timeout{2000};
  std::chrono::milliseconds upstream_timeout{10000};
  std::chrono::milliseconds processing_wait{2000};
  // Map every violation status to 404.
  bool paper_status = false;
  bool audit_get = false;
  std::function<Timestamp()> clock;
};

struct MonitorResult
{
  HttpResponse response;
  Verdict verdict;
  std::optional<ViolationRecord> record;
};


class Monitor
{
public:
  Monitor(Model model, std::vector<Contract> contracts, Upstream& upstream,
          MonitorOptions options = {});

  MonitorResult handle(const HttpRequest& request);

  const RouteTable& routes() const { return routes_; }
  const std::vector<Contract>& contracts() const { return contracts_; }
  const Model& model() const { return model_; }

private:
  Timestamp now() const;
  MonitorResult forward_get(const HttpRequest& request, HttpMethod method,
                            const RouteMatch& route, Timestamp arrival);
  MonitorResult violation(int status, const HttpRequest& request,
                          Verdict verdict, Timestamp arrival,
                          std::optional<std::string> requester,
                          std::optional<int> upstream_status);

  Model model_;
  std::vector<Contract> contracts_;
  RouteTable routes_;
  Upstream& upstream_;
  MonitorOptions options_;
  ProcessingRegistry processing_;
};

// Drops hop-by-hop headers and the request's Host before forwarding.
HttpRequest upstream_request(const HttpRequest& request);

std::string violation_body(const Verdict& v, std::string_view phase,
                           const std::string& method, const std::string& uri);

} // namespace contractgate

#endif // CONTRACTGATE_MONITOR_HPP
