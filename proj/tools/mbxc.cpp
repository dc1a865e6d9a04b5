#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mbx/checker.hpp"
#include "mbx/constraints.hpp"
#include "mbx/parser.hpp"
#include "mbx/pattern_ops.hpp"
#include "mbx/proc_ops.hpp"
#include "mbx/runtime.hpp"
#include "mbx/session.hpp"
#include "mbx/types_ops.hpp"

using json = nlohmann::json;
using namespace mbx;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "mbxc: cannot read '" << path << "'\n";
    std::exit(2);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void apply_budget(TypeTable& tt) {
  if (const char* env = std::getenv("MBXC_WORK_BUDGET")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0' && v > 0) tt.meter().set_limit(v);
  }
}

json diag_json(const Diagnostic& d) {
  json j{{"code", d.code}, {"message", d.message}};
  if (d.span.valid()) {
    j["line"] = d.span.line;
    j["col"] = d.span.col;
  }
  if (!d.witness.empty()) j["witness"] = d.witness;
  return j;
}

int cmd_check(const std::string& path, bool mixed, bool as_json) {
  Program prog = parse_program(read_file(path));
  apply_budget(*prog.table);
  CheckOptions opts;
  opts.mixed_guards = mixed;
  Report rep = check_program(prog, opts);

  if (as_json) {
    json out;
    out["ok"] = rep.ok;
    json defs = json::array();
    for (const auto& d : rep.defs) {
      json dj{{"name", d.name},
              {"verdict", d.ok ? "ok" : "rejected"},
              {"env", d.env_str},
              {"graph", d.graph_str}};
      json ds = json::array();
      for (const auto& g : d.diags) ds.push_back(diag_json(g));
      dj["diagnostics"] = ds;
      defs.push_back(dj);
    }
    out["definitions"] = defs;
    json mj{{"verdict", rep.main_ok ? "ok" : "rejected"},
            {"closed", rep.main_closed}};
    json ms = json::array();
    for (const auto& g : rep.main_diags) ms.push_back(diag_json(g));
    mj["diagnostics"] = ms;
    out["main"] = mj;
    json gs = json::array();
    for (const auto& g : rep.global_diags) gs.push_back(diag_json(g));
    out["global"] = gs;
    std::cout << out.dump(2) << "\n";
    return rep.ok ? 0 : 1;
  }

  for (const auto& g : rep.global_diags) std::cerr << path << ":" << g.str() << "\n";
  for (const auto& d : rep.defs) {
    std::cout << d.name << ": " << (d.ok ? "ok" : "rejected") << "\n";
    if (d.ok) {
      std::cout << "  env: " << d.env_str << "\n";
      std::cout << "  graph: " << d.graph_str << "\n";
    }
    for (const auto& g : d.diags) std::cerr << path << ":" << g.str() << "\n";
  }
  std::cout << "main: " << (rep.main_ok ? "ok" : "rejected") << "\n";
  for (const auto& g : rep.main_diags) std::cerr << path << ":" << g.str() << "\n";
  return rep.ok ? 0 : 1;
}

int cmd_explore(const std::string& path, int max_states, int max_depth,
                bool as_json) {
  Program prog = parse_program(read_file(path));
  apply_budget(*prog.table);
  if (!prog.has_main) {
    std::cerr << "mbxc: '" << path << "' has no main process\n";
    return 2;
  }
  StateGraph g = explore(prog, max_states, max_depth);
  int edges = 0;
  for (const auto& e : g.edges) edges += static_cast<int>(e.size());
  bool fail_found = g.fail_path.has_value();

  if (as_json) {
    json out{{"states", g.states.size()},
             {"edges", edges},
             {"complete", g.complete},
             {"doneStates", g.done_states},
             {"deadlockStates", g.deadlock_states},
             {"failWitness", fail_found}};
    if (g.fairly_terminating)
      out["fairlyTerminating"] = *g.fairly_terminating;
    else
      out["fairlyTerminating"] = nullptr;
    if (fail_found) {
      json pth = json::array();
      for (int idx : *g.fail_path) pth.push_back(g.states[idx].key);
      out["failPath"] = pth;
    }
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "states: " << g.states.size() << " (" << edges
              << " transitions), "
              << (g.complete ? "complete" : "truncated") << "\n";
    std::cout << "done states: " << g.done_states
              << ", deadlock states: " << g.deadlock_states << "\n";
    std::cout << "unguarded fail reachable: " << (fail_found ? "yes" : "no")
              << "\n";
    std::cout << "fairly terminating: "
              << (g.fairly_terminating ? (*g.fairly_terminating ? "yes" : "no")
                                       : "unknown (truncated)")
              << "\n";
    if (fail_found) {
      std::cout << "fail witness path:\n";
      for (int idx : *g.fail_path)
        std::cout << "  " << g.states[idx].key << "\n";
    }
  }
  bool bad = fail_found || g.deadlock_states > 0;
  return bad ? 1 : 0;
}

int cmd_run(const std::string& path, std::uint64_t seed, int max_steps) {
  Program prog = parse_program(read_file(path));
  apply_budget(*prog.table);
  if (!prog.has_main) {
    std::cerr << "mbxc: '" << path << "' has no main process\n";
    return 2;
  }
  Trace tr = run(prog, seed, max_steps);
  std::cout << "initial: " << print_process(tr.initial, *prog.table) << "\n";
  for (const auto& s : tr.steps)
    std::cout << "  --" << s.rule << " " << s.desc << "--> "
              << print_process(s.state, *prog.table) << "\n";
  ProcPtr last = tr.steps.empty() ? tr.initial : tr.steps.back().state;
  if (tr.truncated) {
    std::cout << "truncated after " << tr.steps.size() << " steps\n";
    return 0;
  }
  bool done = last->kind == ProcKind::Done;
  std::cout << (done ? "terminated: done" : "stuck: not done") << "\n";
  return done ? 0 : 1;
}

int cmd_pat(const std::string& sub, const std::vector<std::string>& args) {
  TypeTable tt;
  apply_budget(tt);
  TypeRel rel = subtype_rel(tt);
  if (sub == "include") {
    PatId e = parse_pattern(args.at(0), tt);
    PatId f = parse_pattern(args.at(1), tt);
    auto r = subpattern(tt, e, f, rel);
    if (r.holds) {
      std::cout << "yes (searched up to size " << r.size_bound << ")\n";
      return 0;
    }
    std::cout << "no, witness " << config_str(tt, *r.witness) << "\n";
    return 1;
  }
  if (sub == "equiv") {
    PatId e = parse_pattern(args.at(0), tt);
    PatId f = parse_pattern(args.at(1), tt);
    bool r = pattern_equiv(tt, e, f, rel);
    std::cout << (r ? "yes" : "no") << "\n";
    return r ? 0 : 1;
  }
  if (sub == "residual") {
    PatId e = parse_pattern(args.at(0), tt);
    PatId m = parse_pattern(args.at(1), tt);
    if (tt.pat(m).kind != PatKind::Atom) {
      std::cerr << "mbxc: second argument must be a single message atom\n";
      return 2;
    }
    auto r = residual(tt, e, tt.pat(m).tag, tt.pat(m).args, rel);
    if (!r) {
      std::cout << "undefined\n";
      return 1;
    }
    std::cout << tt.pattern_str(*r) << "\n";
    return 0;
  }
  if (sub == "nf") {
    PatId e = parse_pattern(args.at(0), tt);
    bool r = is_normal_form(tt, e, rel);
    std::cout << (r ? "yes" : "no") << "\n";
    return r ? 0 : 1;
  }
  if (sub == "quotient") {
    PatId g = parse_pattern(args.at(0), tt);
    PatId e = parse_pattern(args.at(1), tt);
    auto r = pattern_quotient(tt, g, e, rel);
    if (!r) {
      std::cout << "not found\n";
      return 1;
    }
    std::cout << tt.pattern_str(*r) << "\n";
    return 0;
  }
  std::cerr << "mbxc: unknown pat subcommand '" << sub << "'\n";
  return 2;
}

int cmd_ty(const std::string& sub, const std::vector<std::string>& args) {
  TypeTable tt;
  apply_budget(tt);
  if (sub == "sub") {
    TypeId a = parse_type(args.at(0), tt);
    TypeId b = parse_type(args.at(1), tt);
    bool r = subtype(tt, a, b);
    std::cout << (r ? "yes" : "no") << "\n";
    return r ? 0 : 1;
  }
  if (sub == "classify") {
    TypeId a = parse_type(args.at(0), tt);
    Classification c = classify(tt, a);
    std::cout << (c.relevant ? "relevant" : "irrelevant") << ", "
              << (c.reliable ? "reliable" : "unreliable") << ", "
              << (c.usable ? "usable" : "unusable") << "\n";
    return 0;
  }
  std::cerr << "mbxc: unknown ty subcommand '" << sub << "'\n";
  return 2;
}

int cmd_encode(const std::string& path, const std::string& out_path) {
  SessionFile file = parse_session_file(read_file(path));
  Program prog = encode_session_program(file);
  std::string text = print_program(prog);
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "mbxc: cannot write '" << out_path << "'\n";
      return 2;
    }
    out << text;
  }
  return 0;
}

int cmd_constraints(const std::string& path, bool as_json) {
  Program prog = parse_program(read_file(path), ParseOptions{true});
  apply_budget(*prog.table);
  ConstraintSet cs = generate_constraints(prog);
  if (as_json) {
    json vars = json::array();
    for (const auto& v : cs.vars) {
      std::string cap = v.cap == CapKind::In    ? "?"
                        : v.cap == CapKind::Out ? "!"
                        : v.cap == CapKind::Int ? "int"
                                                : "unknown";
      vars.push_back({{"label", v.label}, {"capability", cap}});
    }
    json con = json::array();
    for (const auto& c : cs.constraints)
      con.push_back(constraint_str(*prog.table, cs, c));
    json notes = json::array();
    for (const auto& n : cs.notes) notes.push_back(diag_json(n));
    std::cout << json{{"variables", vars},
                      {"constraints", con},
                      {"notes", notes}}
                     .dump(2)
              << "\n";
  } else {
    std::cout << "variables:\n";
    for (const auto& v : cs.vars) {
      std::string cap = v.cap == CapKind::In    ? "?"
                        : v.cap == CapKind::Out ? "!"
                        : v.cap == CapKind::Int ? "int"
                                                : "unknown-cap";
      std::cout << "  " << cap << " " << v.label << "\n";
    }
    std::cout << "constraints:\n";
    for (const auto& c : cs.constraints)
      std::cout << "  " << constraint_str(*prog.table, cs, c) << "\n";
    for (const auto& n : cs.notes) std::cerr << n.str() << "\n";
  }
  return 0;
}

int cmd_fmt(const std::string& path) {
  Program prog = parse_program(read_file(path));
  std::cout << print_program(prog);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mbxc - mailbox calculus checker and interpreter"};
  app.require_subcommand(1);

  std::string path, out_path, arg1, arg2;
  bool mixed = false, as_json = false;
  int max_states = 50000, max_depth = 100000, max_steps = 10000;
  std::uint64_t seed = 0;

  auto* check = app.add_subcommand("check", "type-check a program");
  check->add_option("file", path)->required();
  check->add_flag("--mixed-guards", mixed, "enable the relaxed guard rules");
  check->add_flag("--json", as_json);

  auto* explore_cmd =
      app.add_subcommand("explore", "exhaustive bounded state search");
  explore_cmd->add_option("file", path)->required();
  explore_cmd->add_option("--max-states", max_states);
  explore_cmd->add_option("--max-depth", max_depth);
  explore_cmd->add_flag("--json", as_json);

  auto* run_cmd = app.add_subcommand("run", "one random reduction sequence");
  run_cmd->add_option("file", path)->required();
  run_cmd->add_option("--seed", seed);
  run_cmd->add_option("--max-steps", max_steps);

  auto* pat = app.add_subcommand("pat", "pattern algebra probes");
  std::string pat_sub;
  std::vector<std::string> pat_args;
  pat->add_option("op", pat_sub, "include|equiv|residual|nf|quotient")
      ->required();
  pat->add_option("args", pat_args);

  auto* ty = app.add_subcommand("ty", "type probes");
  std::string ty_sub;
  std::vector<std::string> ty_args;
  ty->add_option("op", ty_sub, "sub|classify")->required();
  ty->add_option("args", ty_args);

  auto* enc = app.add_subcommand("encode-session",
                                 "translate session types into mailbox defs");
  enc->add_option("file", path)->required();
  enc->add_option("-o,--output", out_path);

  auto* cons = app.add_subcommand("constraints",
                                  "pattern-inference constraint generation");
  cons->add_option("file", path)->required();
  cons->add_flag("--json", as_json);

  auto* fmt = app.add_subcommand("fmt", "canonical reprint");
  fmt->add_option("file", path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) return cmd_check(path, mixed, as_json);
    if (explore_cmd->parsed())
      return cmd_explore(path, max_states, max_depth, as_json);
    if (run_cmd->parsed()) return cmd_run(path, seed, max_steps);
    if (pat->parsed()) return cmd_pat(pat_sub, pat_args);
    if (ty->parsed()) return cmd_ty(ty_sub, ty_args);
    if (enc->parsed()) return cmd_encode(path, out_path);
    if (cons->parsed()) return cmd_constraints(path, as_json);
    if (fmt->parsed()) return cmd_fmt(path);
  } catch (const ParseError& e) {
    for (const auto& d : e.diags) std::cerr << path << ":" << d.str() << "\n";
    return 2;
  } catch (const BudgetExceeded& e) {
    std::cerr << "mbxc: undecided: " << e.what() << "\n";
    return 1;
  } catch (const std::out_of_range&) {
    std::cerr << "mbxc: missing argument\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "mbxc: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
