#pragma once

#include <string>

#include "policypad/llm/config.hpp"
#include "policypad/policy/policy_text.hpp"

namespace ppad::llm {

// preamble + policy raw text + postamble, byte-deterministic.
std::string build_policy_scaffold(const policy::PolicyText& policy,
                                  const ScaffoldConfig& scaffold = ScaffoldConfig::defaults());

}  // namespace ppad::llm
