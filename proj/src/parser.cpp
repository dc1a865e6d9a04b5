#include "mbx/parser.hpp"

#include <cctype>
#include <functional>
#include <map>
#include <set>

#include "mbx/proc_ops.hpp"
#include "mbx/session.hpp"

namespace mbx {

namespace {

enum class Tok {
  Ident, Int, LParen, RParen, LBrace, RBrace, LBracket, RBracket,
  Comma, Dot, Plus, Minus, Bar, Question, Bang, Star, Colon, Assign,
  EqEq, NotEq, Lt, Le, Gt, Ge, Amp, Semi, End
};

struct Token {
  Tok kind;
  std::string text;
  long value = 0;
  SourceSpan span;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == '\n') {
        ++line_;
        col_ = 1;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++col_;
        ++pos_;
      } else {
        break;
      }
    }
    tok_.span = {line_, col_};
    if (pos_ >= src_.size()) {
      tok_.kind = Tok::End;
      tok_.text = "<eof>";
      return;
    }
    char c = src_[pos_];
    auto punct = [&](Tok k, int len, const char* txt) {
      tok_.kind = k;
      tok_.text = txt;
      pos_ += len;
      col_ += len;
    };
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_' || src_[pos_] == '\''))
        ++pos_;
      tok_.kind = Tok::Ident;
      tok_.text = src_.substr(start, pos_ - start);
      col_ += static_cast<int>(pos_ - start);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_])))
        ++pos_;
      tok_.kind = Tok::Int;
      tok_.text = src_.substr(start, pos_ - start);
      tok_.value = std::stol(tok_.text);
      col_ += static_cast<int>(pos_ - start);
      return;
    }
    switch (c) {
      case '(': punct(Tok::LParen, 1, "("); return;
      case ')': punct(Tok::RParen, 1, ")"); return;
      case '{': punct(Tok::LBrace, 1, "{"); return;
      case '}': punct(Tok::RBrace, 1, "}"); return;
      case '[': punct(Tok::LBracket, 1, "["); return;
      case ']': punct(Tok::RBracket, 1, "]"); return;
      case ',': punct(Tok::Comma, 1, ","); return;
      case '.': punct(Tok::Dot, 1, "."); return;
      case '+': punct(Tok::Plus, 1, "+"); return;
      case '-': punct(Tok::Minus, 1, "-"); return;
      case '|': punct(Tok::Bar, 1, "|"); return;
      case '?': punct(Tok::Question, 1, "?"); return;
      case '*': punct(Tok::Star, 1, "*"); return;
      case ':': punct(Tok::Colon, 1, ":"); return;
      case '&': punct(Tok::Amp, 1, "&"); return;
      case ';': punct(Tok::Semi, 1, ";"); return;
      case '!':
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
          punct(Tok::NotEq, 2, "!=");
        } else {
          punct(Tok::Bang, 1, "!");
        }
        return;
      case '=':
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
          punct(Tok::EqEq, 2, "==");
        } else {
          punct(Tok::Assign, 1, "=");
        }
        return;
      case '<':
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
          punct(Tok::Le, 2, "<=");
        } else {
          punct(Tok::Lt, 1, "<");
        }
        return;
      case '>':
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
          punct(Tok::Ge, 2, ">=");
        } else {
          punct(Tok::Gt, 1, ">");
        }
        return;
      default: {
        std::vector<Diagnostic> d{{"syntax",
                                   std::string("unexpected character '") + c +
                                       "'",
                                   {line_, col_},
                                   ""}};
        throw ParseError(std::move(d));
      }
    }
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

const std::set<std::string> kKeywords = {
    "type", "def",  "main", "done",   "new", "in",
    "free", "fail", "if",   "then",   "else", "either",
    "or",   "int"};

class Parser {
 public:
  Parser(const std::string& text, ParseOptions opts)
      : lex_(text), opts_(opts) {
    prog_.table = std::make_shared<TypeTable>();
  }

  Program run() {
    while (lex_.peek().kind != Tok::End) parse_item();
    finish();
    return std::move(prog_);
  }

  PatId run_pattern() {
    PatId p = parse_pattern_sum();
    expect(Tok::End, "end of pattern");
    return p;
  }
  TypeId run_type() {
    TypeId t = parse_type_expr();
    expect(Tok::End, "end of type");
    return t;
  }
  void set_table(std::shared_ptr<TypeTable> t) { prog_.table = std::move(t); }

  SessionFile run_session_file() {
    SessionFile out;
    out.table = prog_.table;
    std::map<Name, SessPtr> named;
    std::vector<std::pair<Name, SessPtr>> pending;
    while (lex_.peek().kind != Tok::End) {
      Token kw = expect(Tok::Ident, "'session'");
      if (kw.text != "session") fail("expected 'session'", kw.span);
      Token name = expect_ident();
      if (named.count(name.text))
        fail("session '" + name.text + "' defined twice", name.span);
      auto placeholder = std::make_shared<SessionType>();
      named.emplace(name.text, placeholder);
      expect(Tok::Assign, "'='");
      SessPtr body = parse_session_type(named);
      *placeholder = *body;  // patch forward references
      out.sessions.push_back({name.text, placeholder});
    }
    if (out.sessions.empty()) fail("no session definitions", {});
    std::string missing;
    if (!prog_.table->fully_defined(&missing))
      fail("type '" + missing + "' referenced but never defined", {});
    return out;
  }

  SessPtr parse_session_type(std::map<Name, SessPtr>& named) {
    SessPtr t = parse_session_prim(named);
    for (;;) {
      if (lex_.peek().kind == Tok::Amp) {
        lex_.next();
        auto n = std::make_shared<SessionType>();
        n->kind = SessionType::ExtChoice;
        n->left = t;
        n->right = parse_session_prim(named);
        t = n;
      } else if (lex_.peek().kind == Tok::LParen) {
        // "(+)" internal choice needs three-token lookahead; a parenthesized
        // session type cannot follow another one, so this is unambiguous
        Token open = lex_.next();
        if (lex_.peek().kind != Tok::Plus)
          fail("expected '(+)'", open.span);
        lex_.next();
        expect(Tok::RParen, "')'");
        auto n = std::make_shared<SessionType>();
        n->kind = SessionType::IntChoice;
        n->left = t;
        n->right = parse_session_prim(named);
        t = n;
      } else {
        return t;
      }
    }
  }

  SessPtr parse_session_prim(std::map<Name, SessPtr>& named) {
    const Token& tok = lex_.peek();
    auto node = std::make_shared<SessionType>();
    if (tok.kind == Tok::Ident && tok.text == "end") {
      lex_.next();
      node->kind = SessionType::End;
      return node;
    }
    if (tok.kind == Tok::Ident && (tok.text == "join" || tok.text == "fork")) {
      Token kw = lex_.next();
      node->kind = kw.text == "join" ? SessionType::Join : SessionType::Fork;
      expect(Tok::LBrace, "'{'");
      if (lex_.peek().kind != Tok::RBrace) {
        do {
          Token tag = expect_ident();
          TypeId ty = kNoType;
          if (accept(Tok::LParen)) {
            ty = parse_type_expr();
            expect(Tok::RParen, "')'");
          }
          node->items.push_back({tag.text, ty});
        } while (accept(Tok::Comma));
      }
      expect(Tok::RBrace, "'}'");
      expect(Tok::Semi, "';'");
      node->cont = parse_session_prim(named);
      return node;
    }
    if (tok.kind == Tok::Question || tok.kind == Tok::Bang) {
      bool input = tok.kind == Tok::Question;
      lex_.next();
      node->kind = input ? SessionType::In : SessionType::Out;
      node->payload = parse_type_expr();
      expect(Tok::Dot, "'.'");
      node->cont = parse_session_prim(named);
      return node;
    }
    if (tok.kind == Tok::LParen) {
      lex_.next();
      SessPtr inner = parse_session_type(named);
      expect(Tok::RParen, "')'");
      return inner;
    }
    if (tok.kind == Tok::Ident && !kKeywords.count(tok.text)) {
      Token name = lex_.next();
      auto it = named.find(name.text);
      if (it == named.end())
        fail("unknown session '" + name.text + "'", name.span);
      return it->second;
    }
    fail("expected a session type", tok.span);
  }

 private:
  [[noreturn]] void fail(const std::string& msg, SourceSpan sp) {
    std::vector<Diagnostic> d{{"syntax", msg, sp, ""}};
    throw ParseError(std::move(d));
  }

  Token expect(Tok k, const std::string& what) {
    if (lex_.peek().kind != k)
      fail("expected " + what + ", found '" + lex_.peek().text + "'",
           lex_.peek().span);
    return lex_.next();
  }

  bool accept(Tok k) {
    if (lex_.peek().kind == k) {
      lex_.next();
      return true;
    }
    return false;
  }

  bool peek_ident(const char* kw) const {
    return lex_.peek().kind == Tok::Ident && lex_.peek().text == kw;
  }

  Token expect_ident() {
    Token t = expect(Tok::Ident, "identifier");
    if (kKeywords.count(t.text))
      fail("keyword '" + t.text + "' cannot be used as a name", t.span);
    return t;
  }

  void parse_item() {
    Token t = expect(Tok::Ident, "'type', 'def' or 'main'");
    if (t.text == "type") {
      Token name = expect_ident();
      expect(Tok::Assign, "'='");
      TypeId id = prog_.table->declare_named(name.text);
      if (prog_.table->type(id).pattern != kNoPat)
        fail("type '" + name.text + "' defined twice", name.span);
      Cap cap;
      if (accept(Tok::Question)) {
        cap = Cap::In;
      } else if (accept(Tok::Bang)) {
        cap = Cap::Out;
      } else {
        fail("named type must start with '?' or '!'", lex_.peek().span);
      }
      PatId pat = parse_pattern_atomish();
      prog_.table->define_named(id, cap, pat);
    } else if (t.text == "def") {
      Definition d;
      Token name = expect_ident();
      d.name = name.text;
      d.span = name.span;
      for (const auto& prev : prog_.defs)
        if (prev.name == d.name)
          fail("definition '" + d.name + "' repeated", name.span);
      expect(Tok::LParen, "'('");
      if (lex_.peek().kind != Tok::RParen) {
        do {
          Binder b;
          Token pn = expect_ident();
          b.name = pn.text;
          b.span = pn.span;
          for (const auto& other : d.params)
            if (other.name == b.name)
              fail("parameter '" + b.name + "' repeated", pn.span);
          if (accept(Tok::Colon)) {
            b.type = parse_type_expr();
          } else if (!opts_.allow_holes) {
            fail("parameter '" + b.name + "' needs a type annotation",
                 pn.span);
          }
          d.params.push_back(std::move(b));
        } while (accept(Tok::Comma));
      }
      expect(Tok::RParen, "')'");
      d.declared_graph = DepGraph::empty();
      if (accept(Tok::Colon)) {
        expect(Tok::LBracket, "'['");
        DepGraphPtr g = DepGraph::empty();
        if (lex_.peek().kind != Tok::RBracket) {
          do {
            Token a = expect_ident();
            expect(Tok::Minus, "'-'");
            Token b = expect_ident();
            g = DepGraph::unite(g, DepGraph::edge(a.text, b.text));
          } while (accept(Tok::Comma));
        }
        expect(Tok::RBracket, "']'");
        d.declared_graph = g;
      }
      expect(Tok::Assign, "'='");
      d.body = parse_process();
      prog_.defs.push_back(std::move(d));
    } else if (t.text == "main") {
      if (prog_.has_main) fail("'main' defined twice", t.span);
      expect(Tok::Assign, "'='");
      prog_.main = parse_process();
      prog_.has_main = true;
    } else {
      fail("expected 'type', 'def' or 'main', found '" + t.text + "'", t.span);
    }
  }

  // -- patterns / types --

  PatId parse_pattern_sum() {
    PatId p = parse_pattern_prod();
    while (accept(Tok::Plus)) p = prog_.table->sum(p, parse_pattern_prod());
    return p;
  }
  PatId parse_pattern_prod() {
    PatId p = parse_pattern_atomish();
    while (accept(Tok::Dot)) p = prog_.table->prod(p, parse_pattern_atomish());
    return p;
  }
  PatId parse_pattern_atomish() {
    PatId p = parse_pattern_primary();
    while (accept(Tok::Star)) p = prog_.table->star(p);
    return p;
  }
  PatId parse_pattern_primary() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Int && t.text == "0") {
      lex_.next();
      return prog_.table->zero();
    }
    if (t.kind == Tok::Int && t.text == "1") {
      lex_.next();
      return prog_.table->one();
    }
    if (t.kind == Tok::LParen) {
      lex_.next();
      PatId p = parse_pattern_sum();
      expect(Tok::RParen, "')'");
      return p;
    }
    if (t.kind == Tok::Ident && !kKeywords.count(t.text)) {
      Token tag = lex_.next();
      std::vector<TypeId> args;
      if (accept(Tok::LParen)) {
        if (lex_.peek().kind != Tok::RParen) {
          do {
            args.push_back(parse_type_expr());
          } while (accept(Tok::Comma));
        }
        expect(Tok::RParen, "')'");
      }
      return prog_.table->atom(tag.text, std::move(args));
    }
    fail("expected a pattern", t.span);
  }

  TypeId parse_type_expr() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Ident && t.text == "int") {
      lex_.next();
      return prog_.table->int_type();
    }
    if (accept(Tok::Question))
      return prog_.table->mailbox(Cap::In, parse_pattern_atomish());
    if (accept(Tok::Bang))
      return prog_.table->mailbox(Cap::Out, parse_pattern_atomish());
    if (t.kind == Tok::Ident && !kKeywords.count(t.text)) {
      Token name = lex_.next();
      return prog_.table->declare_named(name.text);
    }
    fail("expected a type", t.span);
  }

  // -- processes --

  ProcPtr parse_process() {
    if (peek_ident("new")) {
      Token t = lex_.next();
      Token name = expect_ident();
      Token in = expect(Tok::Ident, "'in'");
      if (in.text != "in") fail("expected 'in'", in.span);
      return Process::make_new(name.text, parse_process(), t.span);
    }
    return parse_par();
  }

  ProcPtr parse_par() {
    ProcPtr p = parse_alt();
    while (lex_.peek().kind == Tok::Bar) {
      Token t = lex_.next();
      ProcPtr q = parse_alt();
      p = Process::par(p, q, t.span);
    }
    return p;
  }

  struct Alt {
    bool is_branch;
    GuardBranch branch;
    ProcPtr proc;
  };

  ProcPtr parse_alt() {
    SourceSpan sp = lex_.peek().span;
    Alt first = parse_branch_or_basic();
    if (lex_.peek().kind != Tok::Plus) {
      if (first.is_branch)
        return Process::guard({std::move(first.branch)}, sp);
      return first.proc;
    }
    std::vector<GuardBranch> branches;
    if (!first.is_branch)
      fail("only receive/free/fail actions can be composed with '+'", sp);
    branches.push_back(std::move(first.branch));
    while (accept(Tok::Plus)) {
      SourceSpan s2 = lex_.peek().span;
      Alt next = parse_branch_or_basic();
      if (!next.is_branch)
        fail("only receive/free/fail actions can be composed with '+'", s2);
      branches.push_back(std::move(next.branch));
    }
    return Process::guard(std::move(branches), sp);
  }

  Alt parse_branch_or_basic() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Ident && t.text == "fail") {
      Token kw = lex_.next();
      Token name = expect_ident();
      GuardBranch b;
      b.kind = BranchKind::Fail;
      b.mailbox = name.text;
      b.span = kw.span;
      return {true, std::move(b), nullptr};
    }
    if (t.kind == Tok::Ident && t.text == "free") {
      Token kw = lex_.next();
      Token name = expect_ident();
      expect(Tok::Dot, "'.'");
      GuardBranch b;
      b.kind = BranchKind::Free;
      b.mailbox = name.text;
      b.cont = parse_basic();
      b.span = kw.span;
      return {true, std::move(b), nullptr};
    }
    if (t.kind == Tok::Ident && !kKeywords.count(t.text)) {
      // lookahead: receive?
      Token head = lex_.next();
      if (lex_.peek().kind == Tok::Question) {
        lex_.next();
        Token tag = expect_ident();
        expect(Tok::LParen, "'('");
        GuardBranch b;
        b.kind = BranchKind::Receive;
        b.mailbox = head.text;
        b.tag = tag.text;
        b.span = head.span;
        if (lex_.peek().kind != Tok::RParen) {
          do {
            Binder bind;
            Token bn = expect_ident();
            bind.name = bn.text;
            bind.span = bn.span;
            if (accept(Tok::Colon)) {
              bind.type = parse_type_expr();
            } else if (!opts_.allow_holes) {
              fail("receive binder '" + bind.name +
                       "' needs a type annotation",
                   bn.span);
            }
            b.binders.push_back(std::move(bind));
          } while (accept(Tok::Comma));
        }
        expect(Tok::RParen, "')'");
        expect(Tok::Dot, "'.'");
        b.cont = parse_basic();
        return {true, std::move(b), nullptr};
      }
      return {false, {}, parse_basic_after_ident(head)};
    }
    return {false, {}, parse_basic()};
  }

  ProcPtr parse_basic() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Ident && t.text == "done") {
      Token kw = lex_.next();
      return Process::done(kw.span);
    }
    if (t.kind == Tok::Ident && t.text == "if") return parse_if();
    if (t.kind == Tok::Ident && t.text == "either") return parse_either();
    if (t.kind == Tok::Ident && t.text == "free") {
      // allow a free action as a bare continuation
      Token kw = lex_.next();
      Token name = expect_ident();
      expect(Tok::Dot, "'.'");
      GuardBranch b;
      b.kind = BranchKind::Free;
      b.mailbox = name.text;
      b.cont = parse_basic();
      b.span = kw.span;
      std::vector<GuardBranch> bs{std::move(b)};
      return Process::guard(std::move(bs), kw.span);
    }
    if (t.kind == Tok::Ident && t.text == "fail") {
      Token kw = lex_.next();
      Token name = expect_ident();
      GuardBranch b;
      b.kind = BranchKind::Fail;
      b.mailbox = name.text;
      b.span = kw.span;
      std::vector<GuardBranch> bs{std::move(b)};
      return Process::guard(std::move(bs), kw.span);
    }
    if (t.kind == Tok::LParen) {
      lex_.next();
      ProcPtr p = parse_process();
      expect(Tok::RParen, "')'");
      return p;
    }
    if (t.kind == Tok::Ident && !kKeywords.count(t.text)) {
      Token head = lex_.next();
      if (lex_.peek().kind == Tok::Question) {
        // nested receive used directly as a continuation
        lex_.next();
        Token tag = expect_ident();
        expect(Tok::LParen, "'('");
        GuardBranch b;
        b.kind = BranchKind::Receive;
        b.mailbox = head.text;
        b.tag = tag.text;
        b.span = head.span;
        if (lex_.peek().kind != Tok::RParen) {
          do {
            Binder bind;
            Token bn = expect_ident();
            bind.name = bn.text;
            bind.span = bn.span;
            if (accept(Tok::Colon)) {
              bind.type = parse_type_expr();
            } else if (!opts_.allow_holes) {
              fail("receive binder '" + bind.name +
                       "' needs a type annotation",
                   bn.span);
            }
            b.binders.push_back(std::move(bind));
          } while (accept(Tok::Comma));
        }
        expect(Tok::RParen, "')'");
        expect(Tok::Dot, "'.'");
        b.cont = parse_basic();
        std::vector<GuardBranch> bs{std::move(b)};
        return Process::guard(std::move(bs), head.span);
      }
      return parse_basic_after_ident(head);
    }
    fail("expected a process", t.span);
  }

  ProcPtr parse_basic_after_ident(const Token& head) {
    if (accept(Tok::Bang)) {
      Token tag = expect_ident();
      expect(Tok::LParen, "'('");
      std::vector<IntExprPtr> args;
      if (lex_.peek().kind != Tok::RParen) {
        do {
          args.push_back(parse_expr());
        } while (accept(Tok::Comma));
      }
      expect(Tok::RParen, "')'");
      return Process::send(head.text, tag.text, std::move(args), head.span);
    }
    if (lex_.peek().kind == Tok::LParen) {
      lex_.next();
      std::vector<IntExprPtr> args;
      if (lex_.peek().kind != Tok::RParen) {
        do {
          args.push_back(parse_expr());
        } while (accept(Tok::Comma));
      }
      expect(Tok::RParen, "')'");
      return Process::invoke(head.text, std::move(args), head.span);
    }
    fail("expected '!', '?' or '(' after '" + head.text + "'",
         lex_.peek().span);
  }

  ProcPtr parse_if() {
    Token kw = lex_.next();  // if
    IntExprPtr l = parse_expr();
    IntRel rel;
    switch (lex_.peek().kind) {
      case Tok::EqEq: rel = IntRel::Eq; break;
      case Tok::NotEq: rel = IntRel::Ne; break;
      case Tok::Lt: rel = IntRel::Lt; break;
      case Tok::Le: rel = IntRel::Le; break;
      case Tok::Gt: rel = IntRel::Gt; break;
      case Tok::Ge: rel = IntRel::Ge; break;
      default:
        fail("expected a comparison operator", lex_.peek().span);
    }
    lex_.next();
    IntExprPtr r = parse_expr();
    Token then_kw = expect(Tok::Ident, "'then'");
    if (then_kw.text != "then") fail("expected 'then'", then_kw.span);
    ProcPtr tp = parse_basic();
    Token else_kw = expect(Tok::Ident, "'else'");
    if (else_kw.text != "else") fail("expected 'else'", else_kw.span);
    ProcPtr ep = parse_basic();
    return Process::cond(l, rel, r, tp, ep, kw.span);
  }

  ProcPtr parse_either() {
    Token kw = lex_.next();  // either
    expect(Tok::LBrace, "'{'");
    ProcPtr p = parse_process();
    expect(Tok::RBrace, "'}'");
    Token or_kw = expect(Tok::Ident, "'or'");
    if (or_kw.text != "or") fail("expected 'or'", or_kw.span);
    expect(Tok::LBrace, "'{'");
    ProcPtr q = parse_process();
    expect(Tok::RBrace, "'}'");
    // expands to the one-message internal choice
    Name c = "choice_" + std::to_string(++either_counter_);
    ProcPtr msg = Process::send(c, "pick", {}, kw.span);
    GuardBranch b1;
    b1.kind = BranchKind::Receive;
    b1.mailbox = c;
    b1.tag = "pick";
    b1.span = kw.span;
    GuardBranch f1;
    f1.kind = BranchKind::Free;
    f1.mailbox = c;
    f1.cont = p;
    f1.span = kw.span;
    b1.cont = Process::guard({std::move(f1)}, kw.span);
    GuardBranch b2;
    b2.kind = BranchKind::Receive;
    b2.mailbox = c;
    b2.tag = "pick";
    b2.span = kw.span;
    GuardBranch f2;
    f2.kind = BranchKind::Free;
    f2.mailbox = c;
    f2.cont = q;
    f2.span = kw.span;
    b2.cont = Process::guard({std::move(f2)}, kw.span);
    ProcPtr guard = Process::guard({std::move(b1), std::move(b2)}, kw.span);
    return Process::make_new(c, Process::par(msg, guard, kw.span), kw.span);
  }

  IntExprPtr parse_expr() {
    IntExprPtr e = parse_prim();
    while (lex_.peek().kind == Tok::Plus) {
      Token t = lex_.next();
      e = IntExpr::add(e, parse_prim(), t.span);
    }
    return e;
  }
  IntExprPtr parse_prim() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Int) {
      Token v = lex_.next();
      return IntExpr::literal(v.value, v.span);
    }
    if (t.kind == Tok::Minus) {
      Token m = lex_.next();
      Token v = expect(Tok::Int, "integer literal");
      return IntExpr::literal(-v.value, m.span);
    }
    if (t.kind == Tok::LParen) {
      lex_.next();
      IntExprPtr e = parse_expr();
      expect(Tok::RParen, "')'");
      return e;
    }
    if (t.kind == Tok::Ident && !kKeywords.count(t.text)) {
      Token v = lex_.next();
      return IntExpr::ref(v.text, v.span);
    }
    fail("expected an argument", t.span);
  }

  void finish() {
    std::string missing;
    if (!prog_.table->fully_defined(&missing))
      fail("type '" + missing + "' referenced but never defined", {});
    validate_names();
    rename_bound_apart(prog_);
  }

  void validate_names() {
    for (const auto& d : prog_.defs) {
      std::set<Name> scope;
      for (const auto& p : d.params) scope.insert(p.name);
      validate_proc(d.body, scope, true);
      // declared graph mentions only parameters
      for (const Name& n : flatten(d.declared_graph).free_names())
        if (!scope.count(n))
          fail("declared graph of '" + d.name + "' mentions non-parameter '" +
                   n + "'",
               d.span);
    }
    if (prog_.has_main) {
      std::set<Name> scope;  // free names of main are tolerated here
      validate_proc(prog_.main, scope, false);
    }
  }

  void validate_proc(const ProcPtr& p, std::set<Name> scope, bool closed) {
    switch (p->kind) {
      case ProcKind::Done:
        return;
      case ProcKind::Invoke: {
        const Definition* d = prog_.find_def(p->head);
        if (!d)
          fail("unbound process variable '" + p->head + "'", p->span);
        if (d->params.size() != p->args.size())
          fail("arity mismatch: '" + p->head + "' takes " +
                   std::to_string(d->params.size()) + " arguments, got " +
                   std::to_string(p->args.size()),
               p->span);
        for (const auto& a : p->args) validate_expr(a, scope, closed);
        return;
      }
      case ProcKind::Send: {
        check_name(p->head, scope, closed, p->span);
        for (const auto& a : p->args) validate_expr(a, scope, closed);
        return;
      }
      case ProcKind::Guard: {
        for (const auto& b : p->branches) {
          check_name(b.mailbox, scope, closed, b.span);
          if (b.kind == BranchKind::Receive) {
            std::set<Name> inner = scope;
            for (const auto& bind : b.binders) inner.insert(bind.name);
            validate_proc(b.cont, inner, closed);
          } else if (b.kind == BranchKind::Free) {
            validate_proc(b.cont, scope, closed);
          }
        }
        return;
      }
      case ProcKind::Par:
        validate_proc(p->left, scope, closed);
        validate_proc(p->right, scope, closed);
        return;
      case ProcKind::New: {
        scope.insert(p->bound);
        validate_proc(p->body, scope, closed);
        return;
      }
      case ProcKind::If:
        validate_expr(p->cond_l, scope, closed);
        validate_expr(p->cond_r, scope, closed);
        validate_proc(p->then_p, scope, closed);
        validate_proc(p->else_p, scope, closed);
        return;
    }
  }

  void validate_expr(const IntExprPtr& e, const std::set<Name>& scope,
                     bool closed) {
    if (e->kind == IntExpr::Ref) {
      check_name(e->name, scope, closed, e->span);
    } else if (e->kind == IntExpr::Add) {
      validate_expr(e->l, scope, closed);
      validate_expr(e->r, scope, closed);
    }
  }

  void check_name(const Name& n, const std::set<Name>& scope, bool closed,
                  SourceSpan sp) {
    if (closed && !scope.count(n))
      fail("unbound identifier '" + n + "'", sp);
  }

  Lexer lex_;
  ParseOptions opts_;
  Program prog_;
  int either_counter_ = 0;
};

}  // namespace

Program parse_program(const std::string& text, ParseOptions opts) {
  Parser p(text, opts);
  return p.run();
}

PatId parse_pattern(const std::string& text, TypeTable& table) {
  Parser p(text, {});
  p.set_table(std::shared_ptr<TypeTable>(&table, [](TypeTable*) {}));
  PatId r = p.run_pattern();
  std::string missing;
  if (!table.fully_defined(&missing)) {
    std::vector<Diagnostic> d{
        {"syntax", "type '" + missing + "' referenced but never defined",
         {}, ""}};
    throw ParseError(std::move(d));
  }
  return r;
}

SessionFile parse_session_file(const std::string& text) {
  Parser p(text, {});
  return p.run_session_file();
}

TypeId parse_type(const std::string& text, TypeTable& table) {
  Parser p(text, {});
  p.set_table(std::shared_ptr<TypeTable>(&table, [](TypeTable*) {}));
  TypeId t = p.run_type();
  std::string missing;
  if (!table.fully_defined(&missing)) {
    std::vector<Diagnostic> d{
        {"syntax", "type '" + missing + "' referenced but never defined",
         {}, ""}};
    throw ParseError(std::move(d));
  }
  return t;
}

}  // namespace mbx
