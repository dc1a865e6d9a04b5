#pragma once

#include <string>

#include "mbx/ast.hpp"

namespace mbx {

struct ParseOptions {
  /// Permit receive binders and definition parameters without type
  /// annotations (pattern-inference front end). The checker refuses holes.
  bool allow_holes = false;
};

/// Parses a complete program. Throws ParseError with positioned diagnostics.
/// Bound names are renamed apart afterwards, invocation arities are checked
/// and every name occurrence in a definition body must be bound.
Program parse_program(const std::string& text, ParseOptions opts = {});

/// Stand-alone entry points for the pattern / type surface grammar.
PatId parse_pattern(const std::string& text, TypeTable& table);
TypeId parse_type(const std::string& text, TypeTable& table);

}  // namespace mbx
