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

#include <gtest/gtest.h>

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "support.hpp"

extern char** environ;

using namespace contractgate;
using namespace cgtest;

namespace {

struct CliResult
{
  int status = -1;
  std::string output;
};

// Runs the CLI through the shell, capturing stdout and stderr together.
CliResult cli(const std::string& args)
{
  std::string cmd = std::string(CG_CLI_PATH) + " " + args + " 2>&1";
  CliResult r;
  FILE* p = ::popen(cmd.c_str(), "r");
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) {
    r.output.append(buf, n);
  }
  int st = ::pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

// A long-running subcommand. The listening port is read from stderr.
class Server
{
public:
  explicit Server(std::vector<std::string> args)
  {
    int fds[2];
    if (::pipe(fds) != 0) throw std::runtime_error("pipe");
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, fds[1], 2);
    posix_spawn_file_actions_addclose(&actions, fds[0]);
    args.insert(args.begin(), CG_CLI_PATH);
    std::vector<char*> argv;
    for (std::string& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    int rc = ::posix_spawn(&pid_, CG_CLI_PATH, &actions, nullptr, argv.data(),
                           environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(fds[1]);
    if (rc != 0) throw std::runtime_error("spawn failed");
    err_ = ::fdopen(fds[0], "r");
    char line[512];
    while (std::fgets(line, sizeof line, err_) != nullptr) {
      std::string s = line;
      auto at = s.find("listening on port ");
      if (at != std::string::npos) {
        port_ = std::stoi(s.substr(at + 18));
        break;
      }
    }
  }

  ~Server()
  {
    if (pid_ > 0) stop();
    if (err_) std::fclose(err_);
  }

  int port() const { return port_; }

  // SIGTERM and wait; returns the exit status.
  int stop()
  {
    ::kill(pid_, SIGTERM);
    int st = 0;
    ::waitpid(pid_, &st, 0);
    pid_ = -1;
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  }

private:
  pid_t pid_ = -1;
  FILE* err_ = nullptr;
  int port_ = 0;
};

std::string temp_file(const std::string& name)
{
  auto p = std::filesystem::temp_directory_path() /
           ("contractgate-cli-" + std::to_string(::getpid()) + "-" + name);
  std::filesystem::remove(p);
  return p.string();
}

} // namespace


TEST(Validate, FixtureIsClean)
{
  CliResult r = cli("validate " + fixture("keystone.model"));
  EXPECT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("ok (9 definitions, 2 transitions, 2 rules)"),
            std::string::npos)
      << r.output;
}

TEST(Validate, Failures)
{
  EXPECT_EQ(cli("validate /nonexistent.model").status, 1);

  std::string bad = temp_file("bad.model");
  std::ofstream(bad) << "root Api\nresource Api\n  attr v string\n";
  CliResult syntax = cli("validate " + bad);
  EXPECT_EQ(syntax.status, 1);
  EXPECT_NE(syntax.output.find(":3:10:"), std::string::npos) << syntax.output;

  std::string get_trigger = temp_file("get.model");
  std::ofstream(get_trigger) << "root Api at /api\nresource Api\n  attr v: string\n"
                                "state S: self.processing=False\ninitial S\n"
                                "transition t: S -> S on GET /api\n";
  CliResult diag = cli("validate " + get_trigger);
  EXPECT_EQ(diag.status, 1);
  EXPECT_NE(diag.output.find("non-side-effect-trigger"), std::string::npos)
      << diag.output;
}

TEST(Usage, Errors)
{
  EXPECT_EQ(cli("").status, 2);
  EXPECT_EQ(cli("frobnicate").status, 2);
  EXPECT_EQ(cli("run --model " + fixture("keystone.model")).status, 2);
  EXPECT_EQ(cli("mock --seed " + fixture("keystone_seed.json") +
                " --fault explode")
                .status,
            2);
  EXPECT_EQ(cli("contracts --expires-reading sideways " +
                fixture("keystone.model"))
                .status,
            2);
  EXPECT_EQ(cli("--help").status, 0);
}

TEST(Contracts, MatchesLibraryRendering)
{
  CliResult r = cli("contracts " + fixture("keystone.model"));
  EXPECT_EQ(r.status, 0);
  auto cs = derive_contracts(keystone_model());
  EXPECT_EQ(r.output, render_contract(cs[0]) + "\n" + render_contract(cs[1]));
  CliResult paper = cli("contracts --expires-reading paper " + fixture("keystone.model"));
  EXPECT_NE(paper.output.find("token.expires_at<=clockTime"), std::string::npos);
}

TEST(Serve, EndToEnd)
{
  Server mock({"mock", "--listen", "127.0.0.1:0", "--seed",
               fixture("keystone_seed.json"), "--clock",
               "2026-01-01T00:00:00Z"});
  ASSERT_GT(mock.port(), 0);
  std::string log = temp_file("violations.jsonl");
  Server gw({"run", "--listen", "127.0.0.1:0", "--upstream",
             "http://127.0.0.1:" + std::to_string(mock.port()), "--model",
             fixture("keystone.model"), "--log", log, "--clock",
             "2026-01-01T00:00:00Z"});
  ASSERT_GT(gw.port(), 0);

  HttpRequest ok;
  ok.method = "POST";
  ok.target = "/v3/auth/tokens";
  ok.headers.set("Content-Type", "application/json");
  ok.body = password_auth("alice", "alice-secret", project_scope()).dump();
  HttpResponse issued = send_to(gw.port(), ok);
  EXPECT_EQ(issued.status, 201);
  EXPECT_TRUE(json::parse(issued.body)["token"].contains("catalog"));

  HttpRequest bad = ok;
  bad.body = password_auth("alice", "nope").dump();
  EXPECT_EQ(send_to(gw.port(), bad).status, 412);

  EXPECT_EQ(gw.stop(), 0);
  EXPECT_EQ(mock.stop(), 0);
  std::ifstream in(log);
  std::string line;
  std::vector<json> records;
  while (std::getline(in, line)) {
    records.push_back(json::parse(line));
  }
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0]["phase"], "pre");
}

TEST(Serve, EnvironmentVariables)
{
  CliResult r = cli("run --upstream http://127.0.0.1:1 --model /nonexistent.model");
  EXPECT_EQ(r.status, 1) << r.output;
  std::string cmd = "CONTRACTGATE_UPSTREAM=http://127.0.0.1:1 "
                    "CONTRACTGATE_MODEL=/nonexistent.model " +
                    std::string(CG_CLI_PATH) + " run 2>&1";
  int st = std::system(cmd.c_str());
  EXPECT_EQ(WEXITSTATUS(st), 1);
}
