#pragma once

// Lossless reader/writer for textual SASS listings.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sassopt/ir.hpp"

namespace sassopt {

struct ParseDiagnostic {
  enum class Severity { Error, Warning };
  int line = 0;  // 1-based
  Severity severity = Severity::Error;
  std::string message;

  std::string str() const;
};

struct ParseResult {
  std::optional<Kernel> kernel;  // absent when any error was reported
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const { return kernel.has_value(); }
};

/// Parses a listing. Instruction lines look like
///
///   [B------:R-:W2:-:S02] @P0 LDG.E R0, [R2.64] ;
///
/// optionally preceded by `/*addr*/` comments and followed by trailing
/// comments; the control block is optional. Every other line (labels,
/// directives, comments, blanks) is kept verbatim in the gap where it sits.
/// CRLF is normalized to LF.
ParseResult parse_kernel(std::string_view text, std::string name = {});

/// Inverse of parse_kernel. For an unmodified kernel the output equals the
/// LF-normalized input byte for byte.
std::string serialize_kernel(const Kernel& k);

std::string normalize_newlines(std::string_view text);

}  // namespace sassopt
