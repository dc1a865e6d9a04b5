#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mbx {

struct SourceSpan {
  int line = 0;
  int col = 0;

  bool valid() const { return line > 0; }
  std::string str() const {
    if (!valid()) return "<builtin>";
    return std::to_string(line) + ":" + std::to_string(col);
  }
};

/// A positioned report produced by the parser, the checker or one of the
/// analysis passes. `code` is a stable machine-readable slug such as
/// "cycle", "nf-violation" or "combination-undefined".
struct Diagnostic {
  std::string code;
  std::string message;
  SourceSpan span;
  std::string witness;  // optional: configuration, cycle, counterexample

  std::string str() const {
    std::string s = span.valid() ? span.str() + ": " : "";
    s += "[" + code + "] " + message;
    if (!witness.empty()) s += " (witness: " + witness + ")";
    return s;
  }
};

struct ParseError : std::runtime_error {
  std::vector<Diagnostic> diags;
  explicit ParseError(std::vector<Diagnostic> d)
      : std::runtime_error(d.empty() ? "parse error" : d.front().str()),
        diags(std::move(d)) {}
};

/// Thrown when a decision procedure exceeds its work budget. Callers must
/// surface this as an "undecided" outcome, never as a silent verdict.
struct BudgetExceeded : std::runtime_error {
  explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

/// Shared work meter for the pattern/type decision procedures.
class WorkMeter {
 public:
  explicit WorkMeter(std::uint64_t limit = 50'000'000) : limit_(limit) {}

  void tick(std::uint64_t n = 1) {
    used_ += n;
    if (used_ > limit_)
      throw BudgetExceeded("work budget exceeded (" + std::to_string(limit_) +
                           "); result undecided");
  }
  void reset() { used_ = 0; }
  std::uint64_t used() const { return used_; }
  std::uint64_t limit() const { return limit_; }
  void set_limit(std::uint64_t l) { limit_ = l; }

 private:
  std::uint64_t used_ = 0;
  std::uint64_t limit_;
};

}  // namespace mbx
