#pragma once

// Built-in oracle suite: closed forms and algebraic identities that a healthy
// build must reproduce.

#include <iosfwd>
#include <string>
#include <vector>

#include "alqr/control_math.hpp"

namespace alqr {

struct OracleCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  DareOptions dare;
};

std::vector<OracleCheck> run_oracle_suite(const VerifyOptions& options = {});

/// Fixed-width pass/fail table; returns true iff every check passed.
bool print_oracle_table(std::ostream& os, const std::vector<OracleCheck>& checks);

}  // namespace alqr
