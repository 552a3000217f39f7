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

#ifndef CONTRACTGATE_CONTRACT_HPP
#define CONTRACTGATE_CONTRACT_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "contractgate/expression.hpp"
#include "contractgate/model.hpp"

namespace contractgate {

struct Contract
{
  HttpMethod method = HttpMethod::POST;
  std::string uri_template;
  Expression pre;
  // Conjunction of implications plus unconditional conjuncts.
  Expression post;
  // Values that must be captured before forwarding.
  PathSet snapshot_paths;

  // "POST /v3/auth/tokens"
  std::string id() const;

  bool operator==(const Contract& o) const
  {
    return method == o.method && uri_template == o.uri_template &&
           pre == o.pre && post == o.post;
  }
};


class UnmodeledMethod : public std::runtime_error
{
public:
  UnmodeledMethod(HttpMethod method, const std::string& uri);
};


// Which way round a token expiry comparison against clockTime is read.
// `corrected` treats `clockTime<=x.expires_at` as "still valid".
enum class ExpiresReading { paper, corrected };

std::string_view to_string(ExpiresReading r);
std::optional<ExpiresReading> parse_expires_reading(std::string_view text);

// Rewrites every `<=` between clockTime and an `*.expires_at` path into
// the requested orientation.
Expression apply_expires_reading(const Expression& e, ExpiresReading reading);


PathSet compute_snapshot_paths(const Expression& pre, const Expression& post);

/**
 * pre  = OR over matching transitions of (inv(src) and guard [and actor])
 * post = AND over matching transitions of
 *          (inv(src) and guard [and actor]) ==> (inv(tgt) and effect [and actor])
 *
 * `actor: r` lowers to `user.role='r'`. Throws UnmodeledMethod when no
 * transition is triggered by (method, uri).
 */
Contract derive_functional_contract(HttpMethod method, std::string_view uri,
                                    const BehavioralModel& bm);

// Rules that do not apply to the contract's trigger are ignored.
Contract merge_security_rules(Contract c,
                              const std::vector<SecurityRule>& rules);

// Derived and merged contracts for every trigger in the model, in order of
// first appearance. The expires reading is applied last.
std::vector<Contract> derive_contracts(
    const Model& m, ExpiresReading reading = ExpiresReading::corrected);

const Contract* find_contract(const std::vector<Contract>& contracts,
                              HttpMethod method, std::string_view uri_template);

/**
 * PreCondition(POST /v3/auth/tokens):
 *   a and
 *   b
 * PostCondition(POST /v3/auth/tokens):
 *   ...
 *
 * One top-level conjunct per line; the indented block under each heading
 * parses back to the original expression.
 */
std::string render_contract(const Contract& c);

} // namespace contractgate

#endif // CONTRACTGATE_CONTRACT_HPP
