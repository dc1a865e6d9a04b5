#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mbx/checker.hpp"
#include "mbx/constraints.hpp"
#include "mbx/parser.hpp"
#include "mbx/pattern_ops.hpp"
#include "mbx/proc_ops.hpp"
#include "mbx/runtime.hpp"
#include "mbx/session.hpp"
#include "mbx/types_ops.hpp"

namespace py = pybind11;
using namespace mbx;

namespace {

struct PyProgram {
  Program prog;
};

struct PyPatternCtx {
  std::shared_ptr<TypeTable> table = std::make_shared<TypeTable>();
};

py::dict diag_dict(const Diagnostic& d) {
  py::dict out;
  out["code"] = d.code;
  out["message"] = d.message;
  out["line"] = d.span.line;
  out["col"] = d.span.col;
  out["witness"] = d.witness;
  return out;
}

}  // namespace

PYBIND11_MODULE(_mbx, m) {
  m.doc() = "mailbox calculus checker and interpreter";

  py::class_<PyProgram>(m, "Program")
      .def_property_readonly("definitions",
                             [](const PyProgram& p) {
                               std::vector<std::string> names;
                               for (const auto& d : p.prog.defs)
                                 names.push_back(d.name);
                               return names;
                             })
      .def_property_readonly("has_main",
                             [](const PyProgram& p) { return p.prog.has_main; })
      .def("__str__",
           [](const PyProgram& p) { return print_program(p.prog); });

  m.def(
      "parse",
      [](const std::string& text, bool allow_holes) {
        ParseOptions opts;
        opts.allow_holes = allow_holes;
        return PyProgram{parse_program(text, opts)};
      },
      py::arg("text"), py::arg("allow_holes") = false,
      "Parse a mailbox program from source text.");

  m.def(
      "check",
      [](const PyProgram& p, bool mixed_guards) {
        CheckOptions opts;
        opts.mixed_guards = mixed_guards;
        Report rep = check_program(p.prog, opts);
        py::dict out;
        out["ok"] = rep.ok;
        py::list defs;
        for (const auto& d : rep.defs) {
          py::dict dj;
          dj["name"] = d.name;
          dj["ok"] = d.ok;
          dj["env"] = d.env_str;
          dj["graph"] = d.graph_str;
          py::list diags;
          for (const auto& g : d.diags) diags.append(diag_dict(g));
          dj["diagnostics"] = diags;
          defs.append(dj);
        }
        out["definitions"] = defs;
        out["main_ok"] = rep.main_ok;
        out["main_closed"] = rep.main_closed;
        py::list mdiags;
        for (const auto& g : rep.main_diags) mdiags.append(diag_dict(g));
        out["main_diagnostics"] = mdiags;
        return out;
      },
      py::arg("program"), py::arg("mixed_guards") = false,
      "Type-check every definition and the main process.");

  m.def(
      "explore",
      [](const PyProgram& p, int max_states, int max_depth) {
        StateGraph g = explore(p.prog, max_states, max_depth);
        py::dict out;
        out["states"] = g.states.size();
        out["complete"] = g.complete;
        out["done_states"] = g.done_states;
        out["deadlock_states"] = g.deadlock_states;
        out["fail_reachable"] = g.fail_path.has_value();
        if (g.fairly_terminating)
          out["fairly_terminating"] = *g.fairly_terminating;
        else
          out["fairly_terminating"] = py::none();
        py::list keys;
        for (const auto& st : g.states) keys.append(st.key);
        out["state_keys"] = keys;
        return out;
      },
      py::arg("program"), py::arg("max_states") = 50000,
      py::arg("max_depth") = 100000,
      "Bounded exhaustive exploration of the reachable states.");

  m.def(
      "run",
      [](const PyProgram& p, std::uint64_t seed, int max_steps) {
        Trace tr = run(p.prog, seed, max_steps);
        py::dict out;
        out["seed"] = tr.seed;
        out["truncated"] = tr.truncated;
        py::list steps;
        for (const auto& s : tr.steps) {
          py::dict sd;
          sd["rule"] = s.rule;
          sd["desc"] = s.desc;
          sd["state"] = print_process(s.state, *p.prog.table);
          steps.append(sd);
        }
        out["steps"] = steps;
        ProcPtr last = tr.steps.empty()
                           ? congruence_normal_form(p.prog.main, *p.prog.table)
                           : tr.steps.back().state;
        out["done"] = last->kind == ProcKind::Done;
        return out;
      },
      py::arg("program"), py::arg("seed") = 0, py::arg("max_steps") = 10000,
      "One reproducible random reduction sequence.");

  py::class_<PyPatternCtx>(m, "PatternContext")
      .def(py::init<>())
      .def("include",
           [](PyPatternCtx& ctx, const std::string& e, const std::string& f) {
             PatId pe = parse_pattern(e, *ctx.table);
             PatId pf = parse_pattern(f, *ctx.table);
             auto r = subpattern(*ctx.table, pe, pf, subtype_rel(*ctx.table));
             py::dict out;
             out["holds"] = r.holds;
             out["witness"] = r.witness
                                  ? py::object(py::str(
                                        config_str(*ctx.table, *r.witness)))
                                  : py::object(py::none());
             out["size_bound"] = r.size_bound;
             return out;
           })
      .def("equiv",
           [](PyPatternCtx& ctx, const std::string& e, const std::string& f) {
             PatId pe = parse_pattern(e, *ctx.table);
             PatId pf = parse_pattern(f, *ctx.table);
             return pattern_equiv(*ctx.table, pe, pf, subtype_rel(*ctx.table));
           })
      .def("residual",
           [](PyPatternCtx& ctx, const std::string& e,
              const std::string& atom) -> py::object {
             PatId pe = parse_pattern(e, *ctx.table);
             PatId pm = parse_pattern(atom, *ctx.table);
             const PatNode& n = ctx.table->pat(pm);
             if (n.kind != PatKind::Atom)
               throw std::invalid_argument("second argument must be an atom");
             auto r = residual(*ctx.table, pe, n.tag, n.args,
                               subtype_rel(*ctx.table));
             if (!r) return py::none();
             return py::str(ctx.table->pattern_str(*r));
           })
      .def("normal_form",
           [](PyPatternCtx& ctx, const std::string& e) {
             PatId pe = parse_pattern(e, *ctx.table);
             return is_normal_form(*ctx.table, pe, subtype_rel(*ctx.table));
           })
      .def("quotient",
           [](PyPatternCtx& ctx, const std::string& g,
              const std::string& e) -> py::object {
             PatId pg = parse_pattern(g, *ctx.table);
             PatId pe = parse_pattern(e, *ctx.table);
             auto r = pattern_quotient(*ctx.table, pg, pe,
                                       subtype_rel(*ctx.table));
             if (!r) return py::none();
             return py::str(ctx.table->pattern_str(*r));
           })
      .def("subtype",
           [](PyPatternCtx& ctx, const std::string& a, const std::string& b) {
             TypeId ta = parse_type(a, *ctx.table);
             TypeId tb = parse_type(b, *ctx.table);
             return subtype(*ctx.table, ta, tb);
           })
      .def("classify", [](PyPatternCtx& ctx, const std::string& a) {
        TypeId ta = parse_type(a, *ctx.table);
        Classification c = classify(*ctx.table, ta);
        py::dict out;
        out["relevant"] = c.relevant;
        out["reliable"] = c.reliable;
        out["usable"] = c.usable;
        return out;
      });

  m.def(
      "encode_session",
      [](const std::string& text) {
        SessionFile f = parse_session_file(text);
        return print_program(encode_session_program(f));
      },
      py::arg("text"),
      "Translate session type declarations into mailbox definitions.");

  m.def(
      "generate_constraints",
      [](const PyProgram& p) {
        ConstraintSet cs = generate_constraints(p.prog);
        py::dict out;
        py::list vars;
        for (const auto& v : cs.vars) {
          py::dict vd;
          vd["label"] = v.label;
          vd["capability"] = v.cap == CapKind::In    ? "?"
                             : v.cap == CapKind::Out ? "!"
                             : v.cap == CapKind::Int ? "int"
                                                     : "unknown";
          vars.append(vd);
        }
        out["variables"] = vars;
        py::list cons;
        for (const auto& c : cs.constraints)
          cons.append(constraint_str(*p.prog.table, cs, c));
        out["constraints"] = cons;
        return out;
      },
      py::arg("program"));

  m.attr("__version__") = "0.1.0";
}
