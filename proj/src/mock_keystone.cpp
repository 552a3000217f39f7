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

#include "contractgate/mock_keystone.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>


namespace contractgate {

using nlohmann::json;

namespace {

const std::string kDefaultDomain = "default";

std::vector<std::string> split_path(std::string_view path)
{
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < path.size()) {
    std::size_t next = path.find('/', pos);
    if (next == std::string_view::npos) {
      next = path.size();
    }
    if (next > pos) {
      out.emplace_back(path.substr(pos, next - pos));
    }
    pos = next + 1;
  }
  return out;
}

HttpResponse error(int status, const std::string& title,
                   const std::string& message)
{
  json body = {{"error",
                {{"code", status}, {"title", title}, {"message", message}}}};
  return json_response(status, body.dump());
}

HttpResponse unauthorized()
{
  HttpResponse r = error(401, "Unauthorized",
                         "The request you have made requires authentication.");
  r.headers.set("WWW-Authenticate", "Keystone uri=\"/v3\"");
  return r;
}

HttpResponse not_found(const std::string& what)
{
  return error(404, "Not Found", "Could not find " + what + ".");
}

HttpResponse not_allowed(const std::string& allow)
{
  HttpResponse r = error(405, "Method Not Allowed",
                         "The method is not allowed for this resource.");
  r.headers.set("Allow", allow);
  return r;
}

const json* member(const json& j, const char* key)
{
  if (!j.is_object()) {
    return nullptr;
  }
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

std::optional<std::string> string_at(const json& j, const char* key)
{
  const json* v = member(j, key);
  if (v == nullptr || !v->is_string()) {
    return std::nullopt;
  }
  return v->get<std::string>();
}

std::vector<std::string> strings(const json* j)
{
  std::vector<std::string> out;
  if (j != nullptr && j->is_array()) {
    for (const json& v : *j) {
      if (v.is_string()) {
        out.push_back(v.get<std::string>());
      }
    }
  }
  return out;
}

json catalog()
{
  return json::array(
      {{{"type", "identity"},
        {"name", "keystone"},
        {"endpoints",
         json::array({{{"interface", "public"},
                       {"region", "RegionOne"},
                       {"url", "http://localhost:5000/v3"}}})}}});
}

} // namespace


bool enable_fault(FaultProfile& f, std::string_view name)
{
  if (name == "omit-catalog") {
    f.omit_catalog = true;
  } else if (name == "allow-nonadmin-delete") {
    f.allow_nonadmin_delete = true;
  } else if (name == "issue-expired") {
    f.issue_expired = true;
  } else if (name == "wrong-status") {
    f.wrong_status = true;
  } else {
    return false;
  }
  return true;
}


IdentityStore IdentityStore::from_seed(const json& seed)
{
  IdentityStore s;
  if (const json* rs = member(seed, "rng_seed");
      rs != nullptr && rs->is_number_unsigned()) {
    s.rng_seed = rs->get<std::uint64_t>();
  }
  if (const json* users = member(seed, "users")) {
    for (const json& u : *users) {
      UserRecord r;
      r.id = string_at(u, "id").value_or("");
      r.name = string_at(u, "name").value_or(r.id);
      r.password = string_at(u, "password").value_or("");
      r.roles = strings(member(u, "roles"));
      r.projects = strings(member(u, "projects"));
      if (r.id.empty()) {
        throw std::runtime_error("seed user without an id");
      }
      s.users.push_back(std::move(r));
    }
  }
  for (const char* kind : {"projects", "roles"}) {
    const json* items = member(seed, kind);
    if (items == nullptr) {
      continue;
    }
    auto& target = std::string_view(kind) == "projects" ? s.projects : s.roles;
    for (const json& item : *items) {
      std::string id = string_at(item, "id").value_or("");
      target[id] = string_at(item, "name").value_or(id);
    }
  }
  return s;
}

const UserRecord* IdentityStore::find_user(std::string_view id_or_name) const
{
  for (const UserRecord& u : users) {
    if (u.id == id_or_name) {
      return &u;
    }
  }
  for (const UserRecord& u : users) {
    if (u.name == id_or_name) {
      return &u;
    }
  }
  return nullptr;
}


MockKeystone::MockKeystone(IdentityStore store, Options options)
  : store_(std::move(store)), options_(std::move(options)), rng_(store_.rng_seed)
{}

IdentityStore IdentityStore::from_seed_file(const std::filesystem::path& seed)
{
  std::ifstream in(seed);
  if (!in) {
    throw std::runtime_error("cannot read seed file " + seed.string());
  }
  return from_seed(json::parse(in));
}

Timestamp MockKeystone::now() const
{
  if (options_.clock) {
    return options_.clock();
  }
  return std::chrono::time_point_cast<std::chrono::microseconds>(
      std::chrono::system_clock::now());
}

std::string MockKeystone::new_token_id()
{
  for (;;) {
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx",
                  static_cast<unsigned long long>(rng_()),
                  static_cast<unsigned long long>(rng_()));
    if (store_.tokens.count(buf) == 0) {
      return buf;
    }
  }
}

const TokenRecord* MockKeystone::valid_token(const std::string& id) const
{
  auto it = store_.tokens.find(id);
  if (it == store_.tokens.end() || now() >= it->second.expires_at ||
      store_.find_user(it->second.user_id) == nullptr) {
    return nullptr;
  }
  return &it->second;
}

const UserRecord* MockKeystone::authenticate(const HttpRequest& request) const
{
  if (auto token = request.headers.get("X-Auth-Token")) {
    const TokenRecord* t = valid_token(*token);
    return t ? store_.find_user(t->user_id) : nullptr;
  }
  if (auto header = request.headers.get("Authorization")) {
    auto creds = parse_basic_auth(*header);
    if (!creds) {
      return nullptr;
    }
    const UserRecord* u = store_.find_user(creds->first);
    return u != nullptr && u->password == creds->second ? u : nullptr;
  }
  return nullptr;
}

json MockKeystone::user_body(const UserRecord& u) const
{
  return {{"id", u.id},
          {"name", u.name},
          {"domain_id", kDefaultDomain},
          {"enabled", true},
          {"role", u.roles.empty() ? "" : u.roles.front()},
          {"roles", u.roles},
          {"links", {{"self", "/v3/users/" + u.id}}}};
}

json MockKeystone::token_body(const TokenRecord& t) const
{
  const UserRecord* u = store_.find_user(t.user_id);
  json token = {{"methods", t.methods},
                {"user",
                 {{"id", t.user_id},
                  {"name", u ? u->name : ""},
                  {"domain", {{"id", kDefaultDomain}}}}},
                {"issued_at", format_timestamp(t.issued_at)},
                {"expires_at", format_timestamp(t.expires_at)}};
  if (t.project_id) {
    token["project"] = {{"id", *t.project_id},
                        {"name", store_.projects.at(*t.project_id)},
                        {"domain", {{"id", kDefaultDomain}}}};
  }
  if (t.domain_id) {
    token["domain"] = {{"id", *t.domain_id}, {"name", *t.domain_id}};
  }
  if (t.project_id || t.domain_id) {
    json roles = json::array();
    if (u != nullptr) {
      for (const std::string& r : u->roles) {
        roles.push_back({{"name", r}});
      }
    }
    token["roles"] = roles;
  }
  if (t.catalog) {
    token["catalog"] = catalog();
  }
  return {{"token", token}};
}


HttpResponse MockKeystone::handle(const HttpRequest& request)
{
  std::lock_guard<std::mutex> lock(mutex_);
  HttpResponse r = dispatch(request);
  log_.push_back({request.method, request.target,
                  request.headers.get("User-Agent").value_or(""), r.status});
  return r;
}

HttpResponse MockKeystone::dispatch(const HttpRequest& request)
{
  std::vector<std::string> parts = split_path(request.path());
  if (parts.empty() || parts[0] != "v3") {
    return not_found("the requested resource");
  }
  if (parts.size() == 1) {
    if (request.method != "GET") {
      return not_allowed("GET");
    }
    json body = {{"version",
                  {{"id", "v3.14"},
                   {"status", "stable"},
                   {"links", {{{"rel", "self"}, {"href", "/v3/"}}}}}}};
    return json_response(200, body.dump());
  }

  const std::string& collection = parts[1];
  if (collection == "auth" && parts.size() == 3 && parts[2] == "tokens") {
    if (request.method == "POST") {
      return post_tokens(request);
    }
    if (request.method == "GET") {
      return get_token(request);
    }
    return not_allowed("GET, POST");
  }
  if (collection == "users") {
    return users(request, parts);
  }
  if (collection == "projects") {
    return listing(request, store_.projects, "projects", "project", parts);
  }
  if (collection == "roles") {
    return listing(request, store_.roles, "roles", "role", parts);
  }
  return not_found("the requested resource");
}

HttpResponse MockKeystone::post_tokens(const HttpRequest& request)
{
  json body = json::parse(request.body, nullptr, false);
  const json* auth = body.is_discarded() ? nullptr : member(body, "auth");
  const json* identity = auth ? member(*auth, "identity") : nullptr;
  std::vector<std::string> methods =
      strings(identity ? member(*identity, "methods") : nullptr);
  if (identity == nullptr || methods.empty()) {
    return error(400, "Bad Request",
                 "Expecting to find identity methods in auth.");
  }

  const UserRecord* user = nullptr;
  if (methods.front() == "password") {
    const json* password = member(*identity, "password");
    const json* u = password ? member(*password, "user") : nullptr;
    if (u == nullptr) {
      return error(400, "Bad Request", "Expecting to find user in password.");
    }
    auto key = string_at(*u, "name");
    if (!key) {
      key = string_at(*u, "id");
    }
    auto secret = string_at(*u, "password");
    const UserRecord* found = key ? store_.find_user(*key) : nullptr;
    if (found != nullptr && secret && found->password == *secret) {
      user = found;
    }
  } else if (methods.front() == "token") {
    const json* token = member(*identity, "token");
    auto id = token ? string_at(*token, "id") : std::nullopt;
    if (!id) {
      return error(400, "Bad Request", "Expecting to find id in token.");
    }
    if (const TokenRecord* t = valid_token(*id)) {
      user = store_.find_user(t->user_id);
    }
  }
  if (user == nullptr) {
    return unauthorized();
  }

  TokenRecord t;
  t.user_id = user->id;
  t.methods = {methods.front()};
  const json* scope = member(*auth, "scope");
  if (scope != nullptr && !scope->is_null()) {
    if (scope->is_string()) {
      const std::string& s = scope->get_ref<const std::string&>();
      if (s != "unscope" && s != "unscoped") {
        return unauthorized();
      }
    } else if (const json* project = member(*scope, "project")) {
      auto pid = string_at(*project, "id");
      if (!pid) {
        if (auto pname = string_at(*project, "name")) {
          for (const auto& [id, name] : store_.projects) {
            if (name == *pname) {
              pid = id;
            }
          }
        }
      }
      bool member_of =
          pid && std::find(user->projects.begin(), user->projects.end(),
                           *pid) != user->projects.end();
      if (!pid || store_.projects.count(*pid) == 0 || !member_of) {
        return unauthorized();
      }
      t.project_id = *pid;
    } else if (const json* domain = member(*scope, "domain")) {
      auto did = string_at(*domain, "id");
      if (!did) {
        did = string_at(*domain, "name");
      }
      if (!did || *did != kDefaultDomain) {
        return unauthorized();
      }
      t.domain_id = *did;
    } else {
      return unauthorized();
    }
  }
  t.catalog = (t.project_id || t.domain_id) && !options_.faults.omit_catalog;

  t.issued_at = now();
  t.expires_at = t.issued_at + options_.ttl;
  if (options_.faults.issue_expired) {
    t.expires_at = t.issued_at - std::chrono::seconds(1);
    t.issued_at = t.expires_at - options_.ttl;
  }

  std::string id = new_token_id();
  store_.tokens[id] = t;
  HttpResponse r =
      json_response(options_.faults.wrong_status ? 500 : 201,
                    token_body(t).dump());
  r.headers.set("X-Subject-Token", id);
  return r;
}

HttpResponse MockKeystone::get_token(const HttpRequest& request)
{
  auto auth = request.headers.get("X-Auth-Token");
  auto subject = request.headers.get("X-Subject-Token");
  if (!auth) {
    return unauthorized();
  }
  if (!subject) {
    return error(400, "Bad Request", "X-Subject-Token is required.");
  }
  if (valid_token(*auth) == nullptr && *auth != *subject) {
    return unauthorized();
  }
  const TokenRecord* t = valid_token(*subject);
  if (t == nullptr) {
    return not_found("token");
  }
  HttpResponse r = json_response(200, token_body(*t).dump());
  r.headers.set("X-Subject-Token", *subject);
  return r;
}

HttpResponse MockKeystone::users(const HttpRequest& request,
                                 const std::vector<std::string>& parts)
{
  if (parts.size() > 3) {
    return not_found("the requested resource");
  }
  if (parts.size() == 3 && request.method == "DELETE") {
    return delete_user(request, parts[2]);
  }
  if (request.method != "GET") {
    return not_allowed(parts.size() == 3 ? "GET, DELETE" : "GET");
  }
  if (authenticate(request) == nullptr) {
    return unauthorized();
  }
  if (parts.size() == 2) {
    json list = json::array();
    for (const UserRecord& u : store_.users) {
      list.push_back(user_body(u));
    }
    return json_response(200, json{{"users", list}}.dump());
  }
  const UserRecord* u = store_.find_user(parts[2]);
  if (u == nullptr) {
    return not_found("user: " + parts[2]);
  }
  return json_response(200, json{{"user", user_body(*u)}}.dump());
}

HttpResponse MockKeystone::delete_user(const HttpRequest& request,
                                       const std::string& id)
{
  auto token = request.headers.get("X-Auth-Token");
  const TokenRecord* t = token ? valid_token(*token) : nullptr;
  if (t == nullptr) {
    return unauthorized();
  }
  const UserRecord* bearer = store_.find_user(t->user_id);
  bool admin = std::find(bearer->roles.begin(), bearer->roles.end(),
                         "admin") != bearer->roles.end();
  if (!admin && !options_.faults.allow_nonadmin_delete) {
    return error(403, "Forbidden",
                 "You are not authorized to perform the requested action.");
  }
  auto it = std::find_if(store_.users.begin(), store_.users.end(),
                         [&](const UserRecord& u) { return u.id == id; });
  if (it == store_.users.end()) {
    return not_found("user: " + id);
  }
  store_.users.erase(it);
  HttpResponse r;
  r.status = 204;
  return r;
}

HttpResponse MockKeystone::listing(const HttpRequest& request,
                                   const std::map<std::string, std::string>& items,
                                   const std::string& plural,
                                   const std::string& singular,
                                   const std::vector<std::string>& parts)
{
  if (parts.size() > 3) {
    return not_found("the requested resource");
  }
  if (request.method != "GET") {
    return not_allowed("GET");
  }
  if (authenticate(request) == nullptr) {
    return unauthorized();
  }
  auto repr = [&](const std::string& id, const std::string& name) {
    return json{{"id", id},
                {"name", name},
                {"links", {{"self", "/v3/" + plural + "/" + id}}}};
  };
  if (parts.size() == 2) {
    json list = json::array();
    for (const auto& [id, name] : items) {
      list.push_back(repr(id, name));
    }
    return json_response(200, json{{plural, list}}.dump());
  }
  auto it = items.find(parts[2]);
  if (it == items.end()) {
    return not_found(singular + ": " + parts[2]);
  }
  return json_response(200, json{{singular, repr(it->first, it->second)}}.dump());
}


std::vector<MockKeystone::LogEntry> MockKeystone::log() const
{
  std::lock_guard<std::mutex> lock(mutex_);
  return log_;
}

void MockKeystone::clear_log()
{
  std::lock_guard<std::mutex> lock(mutex_);
  log_.clear();
}

std::size_t MockKeystone::count(std::string_view method) const
{
  std::lock_guard<std::mutex> lock(mutex_);
  return static_cast<std::size_t>(
      std::count_if(log_.begin(), log_.end(),
                    [&](const LogEntry& e) { return e.method == method; }));
}

std::size_t MockKeystone::side_effect_count() const
{
  std::lock_guard<std::mutex> lock(mutex_);
  return static_cast<std::size_t>(
      std::count_if(log_.begin(), log_.end(), [](const LogEntry& e) {
        return e.method == "POST" || e.method == "PUT" ||
               e.method == "DELETE" || e.method == "PATCH";
      }));
}

} // namespace contractgate
