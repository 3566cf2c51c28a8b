#pragma once

// Catch2 helpers for the unit tests on top of the shared oracles.

#include "sonicctl/core.hpp"
#include "sonicctl/models.hpp"

#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <string>

namespace sonicctl::testing {

class ErrorKindIs : public Catch::Matchers::MatcherBase<Error> {
 public:
  explicit ErrorKindIs(ErrorKind kind) : kind_(kind) {}
  bool match(const Error& e) const override { return e.kind() == kind_; }
  std::string describe() const override { return "has kind " + std::string(to_string(kind_)); }

 private:
  ErrorKind kind_;
};

}  // namespace sonicctl::testing
