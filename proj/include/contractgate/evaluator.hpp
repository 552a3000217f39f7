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

#ifndef CONTRACTGATE_EVALUATOR_HPP
#define CONTRACTGATE_EVALUATOR_HPP

#include <functional>
#include <map>
#include <string>
#include <utility>

#include "contractgate/expression.hpp"
#include "contractgate/value.hpp"

namespace contractgate {

/**
 * Value bindings for one evaluation. Lookups are tagged with the phase
 * they observe: implication antecedents read the pre-state, everything
 * else reads the environment's own phase. Each (path, phase) pair is
 * resolved at most once; later lookups hit the cache.
 */
class Environment
{
public:
  using Resolver = std::function<Value(const Path&, Phase)>;

  Environment(Resolver resolver, Timestamp now, Phase phase);
  Environment(Resolver resolver, Timestamp pre_now, Timestamp post_now,
              Phase phase);

  Value lookup(const Path& path, Phase phase);

  Timestamp clock(Phase phase) const
  {
    return phase == Phase::pre ? pre_now_ : post_now_;
  }

  Phase phase() const { return phase_; }

  std::size_t resolver_calls() const { return resolver_calls_; }

private:
  Resolver resolver_;
  Timestamp pre_now_;
  Timestamp post_now_;
  Phase phase_;
  std::map<std::pair<std::string, Phase>, Value> cache_;
  std::size_t resolver_calls_ = 0;
};


TriBool evaluate(const Expression& e, Environment& env);

// Evaluates as though the environment were in `phase`; implication
// antecedents still read the pre-state.
TriBool evaluate_in_phase(const Expression& e, Environment& env, Phase phase);

} // namespace contractgate

#endif // CONTRACTGATE_EVALUATOR_HPP
