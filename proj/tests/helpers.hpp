#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mbx/parser.hpp"
#include "mbx/pattern_ops.hpp"
#include "mbx/proc_ops.hpp"
#include "mbx/types_ops.hpp"

#ifndef MBX_CORPUS_DIR
#define MBX_CORPUS_DIR "corpus"
#endif

namespace mbxtest {

inline std::string corpus_path(const std::string& name) {
  return std::string(MBX_CORPUS_DIR) + "/" + name;
}

inline std::string read_corpus(const std::string& name) {
  std::ifstream in(corpus_path(name));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline mbx::Program parse_corpus(const std::string& name) {
  return mbx::parse_program(read_corpus(name));
}

/// Seeded generator of small commutative regular expressions over a fixed
/// atom alphabet, used by the algebraic property suites.
class PatternGen {
 public:
  PatternGen(mbx::TypeTable& tt, std::uint64_t seed) : tt_(tt), rng_(seed) {}

  mbx::PatId gen(int depth = 3) {
    std::uniform_int_distribution<int> d(0, depth <= 0 ? 2 : 9);
    switch (d(rng_)) {
      case 0:
        return tt_.zero();
      case 1:
        return tt_.one();
      case 2:
      case 3:
      case 4:
        return atom();
      case 5:
      case 6:
        return tt_.sum(gen(depth - 1), gen(depth - 1));
      case 7:
      case 8:
        return tt_.prod(gen(depth - 1), gen(depth - 1));
      default:
        return tt_.star(gen(depth - 1));
    }
  }

  mbx::PatId atom() {
    static const char* tags[] = {"A", "B", "C"};
    std::uniform_int_distribution<int> d(0, 2);
    return tt_.atom(tags[d(rng_)]);
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  mbx::TypeTable& tt_;
  std::mt19937_64 rng_;
};

/// Brute-force matching of one configuration against a bounded enumeration
/// of another pattern's configurations: used to validate subpattern against
/// the direct semantics.
inline bool oracle_matches(const mbx::TypeTable& tt, const mbx::Config& x,
                           mbx::PatId f, const mbx::TypeRel& rel) {
  auto confs = mbx::configurations_up_to(tt, f, mbx::config_size(x));
  for (const auto& y : confs) {
    if (mbx::config_size(y) != mbx::config_size(x)) continue;
    // bipartite matching between the multisets, tags equal and arguments
    // pointwise related
    std::vector<mbx::AtomId> xs, ys;
    for (const auto& [a, k] : x)
      for (int i = 0; i < k; ++i) xs.push_back(a);
    for (const auto& [a, k] : y)
      for (int i = 0; i < k; ++i) ys.push_back(a);
    std::vector<bool> used(ys.size(), false);
    std::function<bool(std::size_t)> assign = [&](std::size_t i) -> bool {
      if (i == xs.size()) return true;
      const mbx::AtomInfo& ia = mbx::atom_info(tt, xs[i]);
      for (std::size_t j = 0; j < ys.size(); ++j) {
        if (used[j]) continue;
        const mbx::AtomInfo& ib = mbx::atom_info(tt, ys[j]);
        if (ia.tag != ib.tag || ia.args.size() != ib.args.size()) continue;
        bool ok = true;
        for (std::size_t k = 0; k < ia.args.size(); ++k)
          if (!rel(ia.args[k], ib.args[k])) ok = false;
        if (!ok) continue;
        used[j] = true;
        if (assign(i + 1)) return true;
        used[j] = false;
      }
      return false;
    };
    if (assign(0)) return true;
  }
  return false;
}

/// Reference check of pattern inclusion by bounded enumeration.
inline bool oracle_included(const mbx::TypeTable& tt, mbx::PatId e, mbx::PatId f,
                            int n, const mbx::TypeRel& rel) {
  for (const auto& x : mbx::configurations_up_to(tt, e, n))
    if (!oracle_matches(tt, x, f, rel)) return false;
  return true;
}

}  // namespace mbxtest
