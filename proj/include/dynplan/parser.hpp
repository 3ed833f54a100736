#pragma once

// Loader for the bundled problem description format (see
// docs/domain-format.md). Parameterised fluents and actions are grounded over
// the declared objects; quantifiers expand to finite conjunctions and
// disjunctions at load time.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "dynplan/domain.hpp"

namespace dynplan {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& message);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

DomainTheory parse_domain(std::string_view text, const ValidationOptions& options = {});

/// Reads and parses a file. I/O failures are reported as DomainError.
DomainTheory load_domain(const std::filesystem::path& path, const ValidationOptions& options = {});

}  // namespace dynplan
