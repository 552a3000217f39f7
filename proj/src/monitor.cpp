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

#include "contractgate/monitor.hpp"

#include <algorithm>
#include <cctype>

namespace contractgate {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start)
{
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

std::string lower(std::string_view s)
{
  std::string out(s);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

bool is_2xx(int status) { return status >= 200 && status < 300; }

const json* member(const json& j, std::string_view key)
{
  if (!j.is_object()) {
    return nullptr;
  }
  auto it = j.find(std::string(key));
  return it == j.end() ? nullptr : &*it;
}

const json* descend(const json& j, const std::vector<std::string>& keys)
{
  const json* cur = &j;
  for (const std::string& k : keys) {
    cur = member(*cur, k);
    if (cur == nullptr) {
      return nullptr;
    }
  }
  return cur;
}

Value from_json(const json* j, const Attribute* attr = nullptr)
{
  if (j == nullptr || j->is_null()) {
    return Value(Absent{});
  }
  if (j->is_string()) {
    const std::string& s = j->get_ref<const std::string&>();
    if (attr != nullptr && attr->type == AttributeType::timestamp) {
      auto ts = parse_timestamp(s);
      return ts ? Value(*ts) : Value(Invalid{});
    }
    return Value(s);
  }
  if (j->is_boolean()) {
    return Value(j->get<bool>());
  }
  if (j->is_number_integer() || j->is_number_unsigned()) {
    return Value(j->get<std::int64_t>());
  }
  if (j->is_number_float()) {
    return Value(static_cast<std::int64_t>(j->get<double>()));
  }
  return Value(j->dump());
}

// The representation of `def` inside a response body: `{"user": {...}}`
// style envelopes are unwrapped.
const json* representation(const json& body, const std::string& def)
{
  if (const json* inner = member(body, def)) {
    if (inner->is_object()) {
      return inner;
    }
  }
  return body.is_object() ? &body : nullptr;
}

std::size_t listing_size(const json& body)
{
  if (body.is_array()) {
    return body.size();
  }
  if (body.is_object()) {
    for (const auto& [key, value] : body.items()) {
      if (value.is_array()) {
        return value.size();
      }
    }
  }
  return 0;
}

// Members without an id attribute that carry an attribute named after
// themselves (token.token) are addressed by a subject header, not a URI.
bool is_header_addressed(const ResourceDefinition& d)
{
  return d.kind == DefinitionKind::normal && !d.id_attribute &&
         d.attribute(d.name) != nullptr;
}

const ResourceDefinition* header_addressed(const ResourceModel& rm)
{
  for (const ResourceDefinition& d : rm.definitions) {
    if (is_header_addressed(d)) {
      return &d;
    }
  }
  return nullptr;
}

std::vector<std::string> tail_segments(const Path& p)
{
  return {p.segments().begin() + 1, p.segments().end()};
}

} // namespace


RequestContext make_context(HttpMethod method, const HttpRequest& request,
                            const RouteMatch& route, Timestamp arrival)
{
  RequestContext ctx;
  ctx.method = method;
  ctx.uri = request.path();
  ctx.path_params = route.params;
  ctx.headers = request.headers;
  ctx.arrival_time = arrival;
  if (!request.body.empty()) {
    json parsed = json::parse(request.body, nullptr, false);
    if (!parsed.is_discarded()) {
      ctx.body = std::move(parsed);
    }
  }
  return ctx;
}

std::optional<Value> Snapshot::get(const Path& p) const
{
  auto it = bindings.find(p.key());
  if (it == bindings.end()) {
    return std::nullopt;
  }
  return it->second;
}


std::string_view to_string(Outcome o)
{
  switch (o) {
    case Outcome::pass: return "pass";
    case Outcome::pre_violation: return "pre_violation";
    case Outcome::post_violation: return "post_violation";
    case Outcome::unmodeled_method: return "unmodeled_method";
    case Outcome::audit_violation: return "audit_violation";
  }
  return "?";
}

std::string ViolationRecord::phase() const
{
  switch (verdict.outcome) {
    case Outcome::pre_violation: return "pre";
    case Outcome::post_violation: return "post";
    case Outcome::audit_violation: return "audit";
    default: return "route";
  }
}

json ViolationRecord::to_json() const
{
  json failed = json::array();
  for (const FailedAtom& a : verdict.failed_atoms) {
    failed.push_back({{"expr", a.expr},
                      {"value", std::string(to_string(a.value))},
                      {"role", a.role}});
  }
  json j = {{"ts", format_timestamp(ts)},
            {"phase", phase()},
            {"method", method},
            {"uri", uri},
            {"contract", verdict.contract_id},
            {"failed", failed},
            {"upstream_status", nullptr},
            {"latency_ms", verdict.timing.total_ms}};
  if (upstream_status) {
    j["upstream_status"] = *upstream_status;
  }
  if (requester) {
    j["requester"] = *requester;
  }
  return j;
}

std::string violation_body(const Verdict& v, std::string_view phase,
                           const std::string& method, const std::string& uri)
{
  json failed = json::array();
  for (const FailedAtom& a : v.failed_atoms) {
    failed.push_back(
        {{"expr", a.expr}, {"value", std::string(to_string(a.value))}});
  }
  json body = {{"phase", std::string(phase)},
               {"contract", v.contract_id},
               {"failed", failed},
               {"request", {{"method", method}, {"uri", uri}}}};
  return body.dump();
}


ProbeResolver::ProbeResolver(const RequestContext& ctx,
                             const ResourceModel& rm, const RouteTable& routes,
                             Upstream& upstream,
                             std::chrono::milliseconds probe_timeout)
  : ctx_(ctx),
    rm_(rm),
    routes_(routes),
    upstream_(upstream),
    timeout_(probe_timeout)
{
  const json* identity = descend(ctx.body, {"auth", "identity"});
  if (identity != nullptr) {
    if (const json* id = descend(*identity, {"token", "id"});
        id != nullptr && id->is_string()) {
      pre_auth_.token = id->get<std::string>();
    }
    if (const json* user = descend(*identity, {"password", "user"})) {
      const json* name = member(*user, "name");
      if (name == nullptr || !name->is_string()) {
        name = member(*user, "id");
      }
      const json* password = member(*user, "password");
      if (name != nullptr && name->is_string() && password != nullptr &&
          password->is_string()) {
        pre_auth_.password = {name->get<std::string>(),
                              password->get<std::string>()};
      }
    }
  }
  if (!pre_auth_.token && !pre_auth_.password) {
    pre_auth_.token = ctx.headers.get("X-Auth-Token");
  }
  post_auth_ = pre_auth_;
}

Value ProbeResolver::pre(const Path& p)
{
  return resolve(p, Phase::pre);
}

Value ProbeResolver::post(const Path& p, const HttpResponse& response,
                          const std::string& uri_template)
{
  if (response_ != &response) {
    response_ = &response;
    const RouteEntry* route = routes_.find(uri_template);
    acted_on_ = route ? lower(route->definition) : std::string();
    response_body_.reset();
    json parsed = json::parse(response.body, nullptr, false);
    if (!parsed.is_discarded()) {
      response_body_ = std::move(parsed);
    }
    // A freshly issued token becomes the caller's identity afterwards.
    post_auth_ = pre_auth_;
    auto subject = response.headers.get("X-Subject-Token");
    if (is_2xx(response.status) && subject) {
      const ResourceDefinition* def = rm_.find(acted_on_);
      if (def != nullptr && is_header_addressed(*def)) {
        post_auth_.token = *subject;
        post_auth_.password.reset();
      }
    }
  }
  return resolve(p, Phase::post);
}

Value ProbeResolver::resolve(const Path& p, Phase phase)
{
  switch (p.ns()) {
    case Namespace::request:
      return request_value(p);
    case Namespace::self_ns:
      if (p.segments().size() == 2 && p.segments()[1] == "processing") {
        return Value(phase == Phase::pre ? processing_ : false);
      }
      return Value(Absent{});
    case Namespace::response:
      if (phase == Phase::post && response_ != nullptr &&
          p.segments().size() == 2 && p.segments()[1] == "status") {
        return Value(static_cast<std::int64_t>(response_->status));
      }
      return Value(Absent{});
    case Namespace::resource:
      return resource(p, phase);
  }
  return Value(Absent{});
}

Value ProbeResolver::request_value(const Path& p) const
{
  std::vector<std::string> keys = tail_segments(p);
  if (keys.size() == 1 && keys[0] == "scope") {
    const json* scope = descend(ctx_.body, {"auth", "scope"});
    if (scope == nullptr || scope->is_null()) {
      return Value(Absent{});
    }
    if (scope->is_string()) {
      return Value(scope->get<std::string>());
    }
    for (const char* kind : {"project", "domain"}) {
      const json* target = member(*scope, kind);
      if (target == nullptr) {
        continue;
      }
      for (const char* field : {"id", "name"}) {
        const json* v = member(*target, field);
        if (v != nullptr && v->is_string()) {
          return Value(v->get<std::string>());
        }
      }
    }
    return Value(Invalid{});
  }

  std::vector<std::string> under_auth{"auth"};
  under_auth.insert(under_auth.end(), keys.begin(), keys.end());
  if (const json* j = descend(ctx_.body, under_auth)) {
    return from_json(j);
  }
  return from_json(descend(ctx_.body, keys));
}

Value ProbeResolver::resource(const Path& p, Phase phase)
{
  const ResourceDefinition* def = rm_.find(p.segments().front());
  if (def == nullptr) {
    return Value(Invalid{});
  }
  if (def->kind == DefinitionKind::collection) {
    return collection_value(*def, phase);
  }
  std::string attr = p.segments().size() > 1 ? p.segments()[1] : "";

  if (is_header_addressed(*def)) {
    return token_value(attr, phase);
  }
  const std::string key = lower(def->name) + "_id";
  bool addressed = ctx_.path_params.count(key) != 0;
  bool principal_attr = attr == "role" || attr == "credential";
  if (lower(def->name) == "user" && (principal_attr || !addressed)) {
    return principal_value(attr, phase);
  }
  return member_value(*def, attr, phase);
}

ProbeResolver::Probe ProbeResolver::probe(const std::string& uri,
                                          const Headers& extra, Phase phase)
{
  std::string cache_key = uri;
  for (const auto& [name, value] : extra) {
    cache_key += "\n" + lower(name) + ":" + value;
  }
  auto it = cache_.find({cache_key, phase});
  if (it != cache_.end()) {
    return it->second;
  }

  HttpRequest req;
  req.method = "GET";
  req.target = uri;
  req.headers = extra;
  req.headers.set("User-Agent", kProbeAgent);
  req.headers.set("Accept", "application/json");

  Probe result;
  auto start = Clock::now();
  try {
    HttpResponse resp = upstream_.send(req, timeout_);
    result.status = resp.status;
    result.body = json::parse(resp.body, nullptr, false);
    if (result.body.is_discarded()) {
      result.body = json();
      if (resp.status == 200) {
        result.status = -1; // unreadable representation
      }
    }
  } catch (const TransportError&) {
    result.status = 0;
  }
  probe_ms_ += ms_since(start);
  ++probe_count_;
  cache_.emplace(std::make_pair(cache_key, phase), result);
  return result;
}

Headers ProbeResolver::auth_headers(Phase phase) const
{
  const Auth& a = auth(phase);
  Headers h;
  if (a.token) {
    h.set("X-Auth-Token", *a.token);
  } else if (a.password) {
    h.set("Authorization",
          basic_auth_header(a.password->first, a.password->second));
  }
  return h;
}

ProbeResolver::Probe ProbeResolver::token_probe(const std::string& token,
                                                Phase phase)
{
  const ResourceDefinition* def = header_addressed(rm_);
  const RouteEntry* route = def ? routes_.for_definition(def->name) : nullptr;
  if (route == nullptr) {
    return Probe{0, json()};
  }
  Headers h{{"X-Auth-Token", token}, {"X-Subject-Token", token}};
  return probe(route->uri_template, h, phase);
}

Value ProbeResolver::token_value(const std::string& attr, Phase phase)
{
  const ResourceDefinition* def = header_addressed(rm_);
  const std::string name = lower(def->name);
  const Attribute* a = attr.empty() ? nullptr : def->attribute(attr);

  if (phase == Phase::post && response_ != nullptr && acted_on_ == name) {
    if (!is_2xx(response_->status)) {
      return Value(Invalid{});
    }
    auto subject = response_->headers.get("X-Subject-Token");
    const json* rep =
        response_body_ ? member(*response_body_, name) : nullptr;
    if (subject && rep != nullptr) {
      if (attr.empty()) {
        return Value(Count{1});
      }
      if (attr == def->name) {
        return Value(*subject);
      }
      return from_json(member(*rep, attr), a);
    }
  }

  const std::optional<std::string>& token = auth(phase).token;
  if (!token) {
    return Value(Absent{});
  }
  Probe pr = token_probe(*token, phase);
  if (pr.status == 404) {
    return Value(Absent{});
  }
  if (pr.status != 200) {
    return Value(Invalid{});
  }
  if (attr.empty()) {
    return Value(Count{1});
  }
  if (attr == def->name) {
    return Value(*token);
  }
  const json* rep = member(pr.body, name);
  return from_json(rep ? member(*rep, attr) : nullptr, a);
}

std::optional<json> ProbeResolver::principal(Phase phase)
{
  auto cached = principal_.find(phase);
  if (cached != principal_.end()) {
    return cached->second;
  }

  // nullopt: no principal; a null json: the probe failed.
  std::optional<json> result;
  const RouteEntry* users = routes_.for_definition("user");
  const Auth& a = auth(phase);
  if (users != nullptr && a.token) {
    Probe tp = token_probe(*a.token, phase);
    const json* uid = descend(tp.body, {"token", "user", "id"});
    if (tp.status == 200 && uid != nullptr && uid->is_string()) {
      std::string uri = expand_template(users->uri_template,
                                        {{"user_id", uid->get<std::string>()}});
      Probe up = probe(uri, auth_headers(phase), phase);
      if (up.status == 200) {
        const json* rep = representation(up.body, "user");
        result = rep ? *rep : json();
      } else if (up.status != 404) {
        result = json();
      }
    } else if (tp.status != 404) {
      result = json();
    }
  } else if (users != nullptr && a.password) {
    std::string uri = expand_template(users->uri_template,
                                      {{"user_id", a.password->first}});
    Probe up = probe(uri, auth_headers(phase), phase);
    if (up.status == 200) {
      const json* rep = representation(up.body, "user");
      result = rep ? *rep : json();
    } else if (up.status != 404 && up.status != 401) {
      result = json();
    }
  }

  if (result && result->is_object() && !requester_) {
    const json* name = member(*result, "name");
    if (name != nullptr && name->is_string()) {
      requester_ = name->get<std::string>();
    }
  }
  principal_[phase] = result;
  return result;
}

Value ProbeResolver::principal_value(const std::string& attr, Phase phase)
{
  std::optional<json> p = principal(phase);
  if (!p) {
    return Value(Absent{});
  }
  if (!p->is_object()) {
    return Value(Invalid{});
  }
  if (attr.empty()) {
    return Value(Count{1});
  }
  if (attr == "credential") {
    const Auth& a = auth(phase);
    return a.password && !a.token ? Value(std::string("password"))
                                  : Value(Absent{});
  }
  const ResourceDefinition* def = rm_.find("user");
  const Attribute* a = def ? def->attribute(attr) : nullptr;
  return from_json(member(*p, attr), a);
}

Value ProbeResolver::member_value(const ResourceDefinition& def,
                                  const std::string& attr, Phase phase)
{
  const std::string name = lower(def.name);
  const Attribute* a = attr.empty() ? nullptr : def.attribute(attr);

  if (phase == Phase::post && response_ != nullptr && acted_on_ == name) {
    if (!is_2xx(response_->status)) {
      return Value(Invalid{});
    }
    const json* rep =
        response_body_ ? member(*response_body_, name) : nullptr;
    if (rep != nullptr && rep->is_object()) {
      return attr.empty() ? Value(Count{1}) : from_json(member(*rep, attr), a);
    }
  }

  const RouteEntry* route = routes_.for_definition(def.name);
  if (route == nullptr) {
    return Value(Absent{});
  }
  std::string uri = expand_template(route->uri_template, ctx_.path_params);
  if (uri.find('{') != std::string::npos) {
    // Identity not determinable from the request.
    return Value(Absent{});
  }
  Probe pr = probe(uri, auth_headers(phase), phase);
  if (pr.status == 404) {
    return Value(Absent{});
  }
  if (pr.status != 200) {
    return Value(Invalid{});
  }
  if (attr.empty()) {
    return Value(Count{1});
  }
  const json* rep = representation(pr.body, name);
  return from_json(rep ? member(*rep, attr) : nullptr, a);
}

Value ProbeResolver::collection_value(const ResourceDefinition& def,
                                      Phase phase)
{
  const RouteEntry* route = routes_.for_definition(def.name);
  if (route == nullptr) {
    return Value(Absent{});
  }
  std::string uri = expand_template(route->uri_template, ctx_.path_params);
  if (uri.find('{') != std::string::npos) {
    return Value(Absent{});
  }
  Probe pr = probe(uri, auth_headers(phase), phase);
  if (pr.status == 404) {
    return Value(Absent{});
  }
  if (pr.status != 200) {
    return Value(Invalid{});
  }
  return Value(Count{listing_size(pr.body)});
}


std::pair<Environment, Snapshot> resolve_pre_env(const RequestContext& ctx,
                                                 const Contract& c,
                                                 ProbeResolver& resolver)
{
  Environment env([&resolver](const Path& p, Phase) { return resolver.pre(p); },
                  ctx.arrival_time, Phase::pre);
  Snapshot snap;
  snap.captured_at = ctx.arrival_time;
  for (const Path& p : c.snapshot_paths) {
    snap.bindings[p.key()] = env.lookup(p, Phase::pre);
  }
  return {std::move(env), std::move(snap)};
}

Environment resolve_post_env(const RequestContext&, const Contract& c,
                             const HttpResponse& response,
                             const Snapshot& snapshot, ProbeResolver& resolver,
                             Timestamp completed_at)
{
  auto fn = [&snapshot, &resolver, &response,
             tmpl = c.uri_template](const Path& p, Phase phase) {
    if (phase == Phase::pre) {
      return snapshot.get(p).value_or(Value(Absent{}));
    }
    return resolver.post(p, response, tmpl);
  };
  return Environment(fn, snapshot.captured_at, completed_at, Phase::post);
}


Verdict check_precondition(const Contract& c, Environment& env)
{
  Verdict v;
  v.contract_id = c.id();
  if (evaluate(c.pre, env) == TriBool::True) {
    return v;
  }
  v.outcome = Outcome::pre_violation;
  for (const Expression& part : conjuncts(c.pre)) {
    TriBool t = evaluate(part, env);
    if (t != TriBool::True) {
      v.failed_atoms.push_back({part.to_string(), t, "conjunct"});
    }
  }
  return v;
}

Verdict check_postcondition(const Contract& c, Environment& env)
{
  Verdict v;
  v.contract_id = c.id();
  if (evaluate(c.post, env) == TriBool::True) {
    return v;
  }
  v.outcome = Outcome::post_violation;
  for (const Expression& part : conjuncts(c.post)) {
    if (part.kind() != ExprKind::implies) {
      TriBool t = evaluate(part, env);
      if (t != TriBool::True) {
        v.failed_atoms.push_back({part.to_string(), t, "conjunct"});
      }
      continue;
    }
    TriBool a = evaluate_in_phase(part.lhs(), env, Phase::pre);
    TriBool r = evaluate(part.rhs(), env);
    if (implies(a, r) == TriBool::True) {
      continue;
    }
    v.failed_atoms.push_back({part.lhs().to_string(), a, "antecedent"});
    for (const Expression& q : conjuncts(part.rhs())) {
      TriBool t = evaluate(q, env);
      if (t != TriBool::True) {
        v.failed_atoms.push_back({q.to_string(), t, "consequent"});
      }
    }
  }
  return v;
}


ProcessingRegistry::Lease::~Lease()
{
  if (owner_ != nullptr) {
    owner_->release(key_);
  }
}

ProcessingRegistry::Lease ProcessingRegistry::acquire(
    const std::string& key, std::chrono::milliseconds wait)
{
  std::unique_lock<std::mutex> lock(mutex_);
  bool free = cv_.wait_for(lock, wait, [&] { return active_.count(key) == 0; });
  if (!free) {
    return Lease();
  }
  active_.insert(key);
  return Lease(this, key);
}

bool ProcessingRegistry::busy(const std::string& key) const
{
  std::lock_guard<std::mutex> lock(mutex_);
  return active_.count(key) != 0;
}

void ProcessingRegistry::release(const std::string& key)
{
  {
    std::lock_guard<std::mutex> lock(mutex_);
    active_.erase(key);
  }
  cv_.notify_all();
}


HttpRequest upstream_request(const HttpRequest& request)
{
  HttpRequest out;
  out.method = request.method;
  out.target = request.target;
  out.body = request.body;
  out.headers = strip_hop_by_hop(request.headers);
  out.headers.remove("Host");
  out.headers.remove("Content-Length");
  return out;
}


Monitor::Monitor(Model model, std::vector<Contract> contracts,
                 Upstream& upstream, MonitorOptions options)
  : model_(std::move(model)),
    contracts_(std::move(contracts)),
    routes_(derive_routes(model_.resources, model_.behavior)),
    upstream_(upstream),
    options_(std::move(options))
{}

Timestamp Monitor::now() const
{
  if (options_.clock) {
    return options_.clock();
  }
  return std::chrono::time_point_cast<std::chrono::microseconds>(
      std::chrono::system_clock::now());
}

MonitorResult Monitor::violation(int status, const HttpRequest& request,
                                 Verdict verdict, Timestamp arrival,
                                 std::optional<std::string> requester,
                                 std::optional<int> upstream_status)
{
  MonitorResult r;
  ViolationRecord rec;
  rec.ts = arrival;
  rec.method = request.method;
  rec.uri = request.path();
  rec.requester = std::move(requester);
  rec.upstream_status = upstream_status;
  rec.verdict = verdict;

  if (options_.paper_status) {
    status = 404;
  }
  r.response = json_response(
      status, violation_body(verdict, rec.phase(), rec.method, rec.uri));
  r.verdict = std::move(verdict);
  r.record = std::move(rec);
  return r;
}

MonitorResult Monitor::forward_get(const HttpRequest& request,
                                   HttpMethod method, const RouteMatch& route,
                                   Timestamp arrival)
{
  auto start = Clock::now();
  MonitorResult r;
  try {
    HttpResponse resp =
        upstream_.send(upstream_request(request), options_.upstream_timeout);
    resp.headers = strip_hop_by_hop(resp.headers);
    r.response = std::move(resp);
  } catch (const TransportError& e) {
    Verdict v;
    v.outcome = Outcome::post_violation;
    v.contract_id = std::string(to_string(method)) + " " +
                    route.entry->uri_template;
    v.failed_atoms.push_back(
        {std::string("upstream transport: ") + e.what(), TriBool::Unknown});
    v.timing.total_ms = ms_since(start);
    return violation(504, request, std::move(v), arrival, std::nullopt,
                     std::nullopt);
  }
  r.verdict.timing.upstream_ms = ms_since(start);

  if (options_.audit_get) {
    RequestContext ctx = make_context(method, request, route, arrival);
    ProbeResolver resolver(ctx, model_.resources, routes_, upstream_,
                           options_.probe_timeout);
    Environment env([&resolver](const Path& p,
                                Phase) { return resolver.pre(p); },
                    now(), Phase::pre);
    std::vector<Expression> invariants;
    for (const State& s : model_.behavior.states) {
      invariants.push_back(s.invariant);
    }
    if (!invariants.empty() &&
        evaluate(disjoin(invariants), env) != TriBool::True) {
      Verdict v;
      v.outcome = Outcome::audit_violation;
      v.contract_id = "states";
      for (const State& s : model_.behavior.states) {
        v.failed_atoms.push_back(
            {s.name + ": " + s.invariant.to_string(), evaluate(s.invariant, env)});
      }
      v.timing.probe_ms = resolver.probe_ms();
      v.timing.total_ms = ms_since(start);
      ViolationRecord rec;
      rec.ts = arrival;
      rec.method = request.method;
      rec.uri = request.path();
      rec.requester = resolver.requester();
      rec.upstream_status = r.response.status;
      rec.verdict = v;
      r.verdict = std::move(v);
      r.record = std::move(rec);
    }
  }
  r.verdict.timing.total_ms = ms_since(start);
  return r;
}

MonitorResult Monitor::handle(const HttpRequest& request)
{
  auto start = Clock::now();
  const Timestamp arrival = now();
  const std::string path = request.path();

  std::optional<RouteMatch> route = routes_.match(path);
  if (!route) {
    Verdict v;
    v.outcome = Outcome::unmodeled_method;
    v.contract_id = request.method + " " + path;
    v.failed_atoms.push_back({"no route for " + path, TriBool::False});
    MonitorResult r = violation(404, request, std::move(v), arrival,
                                std::nullopt, std::nullopt);
    r.response.status = 404;
    return r;
  }

  std::optional<HttpMethod> method = parse_method(request.method);
  const auto& allowed = route->entry->allowed_methods;
  if (!method || allowed.count(*method) == 0) {
    std::string allow;
    for (HttpMethod m : allowed) {
      allow += (allow.empty() ? "" : ", ") + std::string(to_string(m));
    }
    Verdict v;
    v.outcome = Outcome::unmodeled_method;
    v.contract_id = request.method + " " + route->entry->uri_template;
    v.failed_atoms.push_back(
        {request.method + " not in {" + allow + "}", TriBool::False});
    MonitorResult r = violation(405, request, std::move(v), arrival,
                                std::nullopt, std::nullopt);
    r.response.status = 405;
    r.response.headers.set("Allow", allow);
    return r;
  }

  if (!is_side_effect(*method)) {
    return forward_get(request, *method, *route, arrival);
  }

  const Contract* contract =
      find_contract(contracts_, *method, route->entry->uri_template);
  if (contract == nullptr) {
    Verdict v;
    v.outcome = Outcome::unmodeled_method;
    v.contract_id = request.method + " " + route->entry->uri_template;
    MonitorResult r = violation(405, request, std::move(v), arrival,
                                std::nullopt, std::nullopt);
    r.response.status = 405;
    return r;
  }

  RequestContext ctx = make_context(*method, request, *route, arrival);
  ProcessingRegistry::Lease lease =
      processing_.acquire(ctx.uri, options_.processing_wait);
  ProbeResolver resolver(ctx, model_.resources, routes_, upstream_,
                         options_.probe_timeout);
  resolver.set_processing(!lease.held());

  auto [pre_env, snapshot] = resolve_pre_env(ctx, *contract, resolver);
  Verdict pre = check_precondition(*contract, pre_env);
  if (pre.outcome != Outcome::pass) {
    pre.timing.probe_ms = resolver.probe_ms();
    pre.timing.total_ms = ms_since(start);
    return violation(412, request, std::move(pre), arrival,
                     resolver.requester(), std::nullopt);
  }

  auto sent = Clock::now();
  HttpResponse upstream_response;
  try {
    upstream_response =
        upstream_.send(upstream_request(request), options_.upstream_timeout);
  } catch (const TransportError& e) {
    Verdict v;
    v.outcome = Outcome::post_violation;
    v.contract_id = contract->id();
    v.failed_atoms.push_back(
        {std::string("upstream transport: ") + e.what(), TriBool::Unknown});
    v.timing.probe_ms = resolver.probe_ms();
    v.timing.upstream_ms = ms_since(sent);
    v.timing.total_ms = ms_since(start);
    return violation(504, request, std::move(v), arrival,
                     resolver.requester(), std::nullopt);
  }
  double upstream_ms = ms_since(sent);

  Environment post_env =
      resolve_post_env(ctx, *contract, upstream_response, snapshot, resolver,
                       now());
  Verdict post = check_postcondition(*contract, post_env);
  post.timing.probe_ms = resolver.probe_ms();
  post.timing.upstream_ms = upstream_ms;
  post.timing.total_ms = ms_since(start);
  if (post.outcome != Outcome::pass) {
    return violation(502, request, std::move(post), arrival,
                     resolver.requester(), upstream_response.status);
  }

  MonitorResult r;
  upstream_response.headers = strip_hop_by_hop(upstream_response.headers);
  r.response = std::move(upstream_response);
  r.verdict = std::move(post);
  return r;
}

} // namespace contractgate
