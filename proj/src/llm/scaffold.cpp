#include "policypad/llm/scaffold.hpp"

namespace ppad::llm {

std::string build_policy_scaffold(const policy::PolicyText& policy, const ScaffoldConfig& scaffold) {
  return scaffold.preamble + policy.raw + scaffold.postamble;
}

}  // namespace ppad::llm
