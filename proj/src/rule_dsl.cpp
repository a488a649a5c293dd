#include "mframe/rule_dsl.hpp"

#include <cmath>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mframe/error.hpp"

namespace mframe {

std::string_view name_of(RuleKind kind) {
  switch (kind) {
    case RuleKind::WeightedScored: return "scored";
    case RuleKind::WeightedScalar: return "scalar";
    case RuleKind::Hard: return "hard";
    case RuleKind::PolarityCoupling: return "polarity-coupling";
  }
  return "?";
}

const RuleTemplate* Program::find_rule(std::string_view name) const {
  for (const auto& r : rules)
    if (r.name == name) return &r;
  return nullptr;
}

const PredicateDecl* Program::find_decl(std::string_view name) const {
  for (const auto& d : decls)
    if (d.name == name) return &d;
  return nullptr;
}

namespace {

enum class Tok { Ident, Number, String, Symbol, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  SourcePos pos;
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n = 1) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
      continue;
    }
    if (c == '#' || (c == '/' && i + 1 < src.size() && src[i + 1] == '/')) {
      while (i < src.size() && src[i] != '\n') advance();
      continue;
    }
    Token t;
    t.pos = {line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               ((c == '-' || c == '+') && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i + 1;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      // A '.' belongs to the number only when a digit follows; otherwise it ends the rule.
      if (j + 1 < src.size() && src[j] == '.' && std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '-' || src[k] == '+')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          while (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) ++k;
          j = k;
        }
      }
      t.kind = Tok::Number;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (c == '"') {
      std::size_t j = i + 1;
      while (j < src.size() && src[j] != '"' && src[j] != '\n') ++j;
      if (j >= src.size() || src[j] != '"') throw ParseError("unterminated string", line, col);
      t.kind = Tok::String;
      t.text = std::string(src.substr(i + 1, j - i - 1));
      advance(j - i + 1);
    } else if (c == '=' && i + 1 < src.size() && src[i + 1] == '>') {
      t.kind = Tok::Symbol;
      t.text = "=>";
      advance(2);
    } else if (std::string_view(":.&~(),/=^").find(c) != std::string_view::npos) {
      t.kind = Tok::Symbol;
      t.text = std::string(1, c);
      advance();
    } else {
      throw ParseError(std::string("unexpected character '") + c + "'", line, col);
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::End;
  end.pos = {line, col};
  out.push_back(end);
  return out;
}

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::End: return "end of input";
    case Tok::String: return "\"" + t.text + "\"";
    default: return "'" + t.text + "'";
  }
}

bool is_builtin(std::string_view name) { return name == "MF_Role" || name == "SamePolarity"; }

class Parser {
 public:
  Parser(std::string_view source, const Schema& schema) : toks_(lex(source)), schema_(schema) {}

  Program run() {
    Program program;
    while (peek().kind != Tok::End) {
      if (peek().kind == Tok::Ident && peek().text == "pred" && peek(1).kind == Tok::Ident) {
        program.decls.push_back(parse_decl(program));
      } else {
        auto rule = parse_rule(program);
        if (rule.name.empty()) rule.name = "rule" + std::to_string(program.rules.size() + 1);
        if (program.find_rule(rule.name))
          throw ParseError("duplicate rule name '" + rule.name + "'", rule.pos.line, rule.pos.column);
        program.rules.push_back(std::move(rule));
      }
    }
    return program;
  }

 private:
  std::vector<Token> toks_;
  std::size_t at_ = 0;
  const Schema& schema_;

  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(at_ + ahead, toks_.size() - 1)]; }
  const Token& next() { return toks_[std::min(at_++, toks_.size() - 1)]; }

  [[noreturn]] void error(const Token& t, const std::string& what) const {
    throw ParseError(what + ", found " + describe(t), t.pos.line, t.pos.column);
  }

  bool at_symbol(std::string_view s, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Symbol && peek(ahead).text == s;
  }

  void expect_symbol(std::string_view s) {
    if (!at_symbol(s)) error(peek(), "expected '" + std::string(s) + "'");
    next();
  }

  const Token& expect_ident(const char* what) {
    if (peek().kind != Tok::Ident) error(peek(), std::string("expected ") + what);
    return next();
  }

  double expect_number(const char* what) {
    if (peek().kind != Tok::Number) error(peek(), std::string("expected ") + what);
    const auto& t = next();
    try {
      return std::stod(t.text);
    } catch (const std::exception&) {
      error(t, std::string("invalid ") + what);
    }
  }

  PredicateDecl parse_decl(const Program& program) {
    const auto& kw = next();
    PredicateDecl d;
    d.pos = kw.pos;
    const auto& name = expect_ident("predicate name");
    d.name = name.text;
    expect_symbol("/");
    if (peek().kind != Tok::Number) error(peek(), "expected arity");
    const auto& ar = next();
    int arity = 0;
    auto [p, ec] = std::from_chars(ar.text.data(), ar.text.data() + ar.text.size(), arity);
    if (ec != std::errc() || p != ar.text.data() + ar.text.size() || arity < 1) error(ar, "expected positive integer arity");
    d.arity = arity;
    const auto& mode = expect_ident("'closed' or 'open'");
    if (mode.text == "closed") {
      d.closed = true;
    } else if (mode.text == "open") {
      d.closed = false;
    } else {
      error(mode, "expected 'closed' or 'open'");
    }
    if (at_symbol(".")) next();
    if (program.find_decl(d.name) || is_builtin(d.name))
      throw ParseError("predicate '" + d.name + "' declared twice", name.pos.line, name.pos.column);
    return d;
  }

  bool at_tag() const {
    const auto& t = peek();
    if (t.kind == Tok::Number) return true;
    if (t.kind != Tok::Ident) return false;
    if (t.text == "hard") return at_symbol(":", 1) || at_symbol("^", 1);
    if (t.text == "scored") return at_symbol("(", 1);
    if (t.text == "weight") return at_symbol("=", 1);
    return false;
  }

  RuleTemplate parse_rule(const Program& program) {
    RuleTemplate rule;
    rule.pos = peek().pos;
    if (peek().kind == Tok::Ident && at_symbol(":", 1)) {
      // "hard:" is a bare tag; "c1: hard:" carries a label.
      at_ += 2;
      const bool labelled = at_tag();
      at_ -= 2;
      if (labelled) {
        rule.name = next().text;
        next();
      }
    }
    parse_tag(rule);
    if (at_symbol("^")) {
      next();
      const auto& t = peek();
      const double e = expect_number("hinge exponent");
      if (e != 1.0 && e != 2.0) error(t, "hinge exponent must be 1 or 2");
      rule.exponent = static_cast<int>(e);
    }
    expect_symbol(":");
    rule.body.push_back(parse_literal(program, /*allow_negation=*/false));
    while (at_symbol("&")) {
      next();
      rule.body.push_back(parse_literal(program, false));
    }
    expect_symbol("=>");
    rule.head = parse_literal(program, true);
    expect_symbol(".");
    check_safety(rule);
    return rule;
  }

  void parse_tag(RuleTemplate& rule) {
    const auto& t = peek();
    if (t.kind == Tok::Number) {
      rule.kind = RuleKind::WeightedScalar;
      rule.weight = expect_number("weight");
    } else if (t.kind == Tok::Ident && t.text == "hard") {
      next();
      rule.kind = RuleKind::Hard;
    } else if (t.kind == Tok::Ident && t.text == "scored") {
      next();
      expect_symbol("(");
      rule.kind = RuleKind::WeightedScored;
      rule.scorer = expect_ident("scorer name").text;
      expect_symbol(")");
    } else if (t.kind == Tok::Ident && t.text == "weight") {
      next();
      expect_symbol("=");
      rule.kind = RuleKind::WeightedScalar;
      rule.weight = expect_number("weight");
    } else {
      error(t, "expected rule tag (hard, scored(NAME), or a weight)");
    }
  }

  Literal parse_literal(const Program& program, bool allow_negation) {
    Literal lit;
    lit.pos = peek().pos;
    if (at_symbol("~")) {
      if (!allow_negation) error(peek(), "negation is only permitted on the head literal");
      next();
      lit.negated = true;
    }
    const auto& name = expect_ident("predicate name");
    lit.predicate = name.text;
    expect_symbol("(");
    lit.args.push_back(parse_term());
    while (at_symbol(",")) {
      next();
      lit.args.push_back(parse_term());
    }
    expect_symbol(")");

    int arity = 0;
    if (const auto* d = program.find_decl(lit.predicate)) {
      arity = d->arity;
    } else if (is_builtin(lit.predicate)) {
      arity = 2;
    } else {
      throw ParseError("undeclared predicate '" + lit.predicate + "'", name.pos.line, name.pos.column);
    }
    if (static_cast<int>(lit.args.size()) != arity)
      throw ParseError("arity mismatch for '" + lit.predicate + "': declared " + std::to_string(arity) + ", used with " +
                           std::to_string(lit.args.size()),
                       name.pos.line, name.pos.column);
    return lit;
  }

  Term parse_term() {
    const auto& t = peek();
    Term term;
    if (t.kind == Tok::Ident) {
      next();
      term.text = t.text;
      term.is_variable = std::islower(static_cast<unsigned char>(t.text[0])) != 0;
    } else if (t.kind == Tok::String || t.kind == Tok::Number) {
      next();
      term.text = t.text;
      term.is_variable = false;
    } else {
      error(t, "expected a variable or constant");
    }
    return term;
  }

  void check_safety(const RuleTemplate& rule) const {
    std::set<std::string> bound;
    for (const auto& lit : rule.body)
      for (const auto& a : lit.args)
        if (a.is_variable) bound.insert(a.text);
    const auto* ps = schema_.find(rule.head.predicate);
    for (std::size_t i = 0; i < rule.head.args.size(); ++i) {
      const auto& a = rule.head.args[i];
      if (!a.is_variable || bound.contains(a.text)) continue;
      const bool label = ps && i < ps->sorts.size() && is_label_sort(ps->sorts[i]);
      if (!label)
        throw ParseError("unsafe variable '" + a.text + "': it does not occur in the body and is not a label",
                         rule.head.pos.line, rule.head.pos.column);
    }
  }
};

[[noreturn]] void invalid(const SourcePos& pos, const std::string& what) {
  throw ParseError(what, pos.line, pos.column);
}

bool is_known_constant(Sort sort, const std::string& c) {
  const auto& dom = label_domain(sort);
  if (dom.empty()) return true;
  return std::find(dom.begin(), dom.end(), c) != dom.end();
}

// c3 shape: [SameIdeo(t1,t2)] & [SameTopic(t1,t2)] & Ent(t1,e) & Ent(t2,e) &
// Role(t1,e,r1) & Role(t2,e,r2) => SamePolarity(r1,r2).
bool rewrite_polarity_coupling(RuleTemplate& rule) {
  const auto& h = rule.head;
  if (h.predicate != "SamePolarity" || h.negated || !h.args[0].is_variable || !h.args[1].is_variable) return false;
  const std::string& r1 = h.args[0].text;
  const std::string& r2 = h.args[1].text;
  const Literal* role1 = nullptr;
  const Literal* role2 = nullptr;
  for (const auto& lit : rule.body) {
    if (lit.predicate != "Role") continue;
    if (lit.args[2].text == r1 && lit.args[2].is_variable) role1 = &lit;
    if (lit.args[2].text == r2 && lit.args[2].is_variable) role2 = &lit;
  }
  if (!role1 || !role2 || role1 == role2) return false;
  for (const auto* l : {role1, role2})
    if (!l->args[0].is_variable || !l->args[1].is_variable) return false;
  const auto& t1 = role1->args[0].text;
  const auto& t2 = role2->args[0].text;
  if (t1 == t2 || role1->args[1].text != role2->args[1].text) return false;
  bool same_ideo = false;
  bool same_topic = false;
  for (const auto& lit : rule.body) {
    if (&lit == role1 || &lit == role2) continue;
    const bool pair = lit.args.size() == 2 && lit.args[0].is_variable && lit.args[1].is_variable &&
                      ((lit.args[0].text == t1 && lit.args[1].text == t2) ||
                       (lit.args[0].text == t2 && lit.args[1].text == t1));
    if (lit.predicate == "SameIdeo" && pair) {
      same_ideo = true;
    } else if (lit.predicate == "SameTopic" && pair) {
      same_topic = true;
    } else if (lit.predicate == "Ent") {
      continue;
    } else {
      return false;
    }
  }
  rule.kind = RuleKind::PolarityCoupling;
  rule.require_same_ideology = same_ideo;
  rule.require_same_topic = same_topic;
  return true;
}

}  // namespace

Program parse_program(std::string_view source, const Schema& schema) { return Parser(source, schema).run(); }

Program validate(Program program, const Schema& schema) {
  for (const auto& d : program.decls) {
    const auto* ps = schema.find(d.name);
    if (!ps) invalid(d.pos, "predicate '" + d.name + "' is not part of the schema");
    if (static_cast<int>(ps->arity()) != d.arity)
      invalid(d.pos, "predicate '" + d.name + "' has arity " + std::to_string(ps->arity()) + " in the schema");
    if (ps->closed != d.closed)
      invalid(d.pos, "predicate '" + d.name + "' is " + (ps->closed ? "closed" : "open") + " in the schema");
  }

  for (auto& rule : program.rules) {
    std::map<std::string, Sort> var_sort;
    auto check_literal = [&](const Literal& lit) {
      const auto* ps = schema.find(lit.predicate);
      if (!ps) invalid(lit.pos, "predicate '" + lit.predicate + "' is not part of the schema");
      if (ps->arity() != lit.args.size()) invalid(lit.pos, "arity mismatch for '" + lit.predicate + "'");
      for (std::size_t i = 0; i < lit.args.size(); ++i) {
        const auto& a = lit.args[i];
        const Sort s = ps->sorts[i];
        if (a.is_variable) {
          auto [it, fresh] = var_sort.emplace(a.text, s);
          if (!fresh && it->second != s)
            invalid(lit.pos, "variable '" + a.text + "' used as both " + std::string(name_of(it->second)) + " and " +
                                 std::string(name_of(s)));
        } else if (!is_known_constant(s, a.text)) {
          invalid(lit.pos, "'" + a.text + "' is not a " + std::string(name_of(s)) + " constant");
        }
      }
      return ps;
    };
    bool open_body = false;
    for (const auto& lit : rule.body)
      if (!check_literal(lit)->closed) open_body = true;
    const auto* head = check_literal(rule.head);

    if (rewrite_polarity_coupling(rule)) continue;
    if (head->closed && rule.head.negated) invalid(rule.head.pos, "head negation on observed predicate '" + head->name + "'");
    if (head->closed) {
      if (rule.kind == RuleKind::Hard && rule.head.predicate == "SamePolarity")
        invalid(rule.head.pos, "SamePolarity heads must follow the cross-tweet polarity pattern");
      invalid(rule.head.pos, std::string(name_of(rule.kind)) + " rule has closed head '" + head->name + "'");
    }
    if (rule.kind == RuleKind::WeightedScored) {
      rule.scorer_kind = open_body ? ScorerKind::PerFoundation : ScorerKind::Linear;
      if (open_body) {
        // One scalar per foundation of the head's label argument.
        if (head->sorts.back() != Sort::RoleLabel && head->sorts.back() != Sort::MFLabel)
          invalid(rule.head.pos, "per-foundation scorer needs a label in the head");
      }
    }
    if (rule.kind == RuleKind::WeightedScalar && !std::isfinite(rule.weight))
      invalid(rule.pos, "non-finite rule weight");
  }

  // Templates sharing a scorer must agree on its kind and head predicate.
  std::map<std::string, const RuleTemplate*> scorers;
  for (const auto& rule : program.rules) {
    if (rule.kind != RuleKind::WeightedScored) continue;
    auto [it, fresh] = scorers.emplace(rule.scorer, &rule);
    if (!fresh && (it->second->scorer_kind != rule.scorer_kind || it->second->head.predicate != rule.head.predicate))
      invalid(rule.pos, "scorer '" + rule.scorer + "' is shared by incompatible templates");
  }
  return program;
}

Program compile_program(std::string_view source, const Schema& schema) {
  return validate(parse_program(source, schema), schema);
}

Program load_program(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open program " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return compile_program(ss.str(), schema);
  } catch (const ParseError& e) {
    throw ConfigError(path + ":" + e.what());
  }
}

std::string to_string(const Literal& literal) {
  std::string out = literal.negated ? "~" : "";
  out += literal.predicate + "(";
  for (std::size_t i = 0; i < literal.args.size(); ++i) {
    if (i) out += ", ";
    const auto& a = literal.args[i];
    const bool quote = !a.is_variable && !(std::isupper(static_cast<unsigned char>(a.text[0])) ||
                                           std::isdigit(static_cast<unsigned char>(a.text[0])));
    bool plain = true;
    for (char c : a.text)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') plain = false;
    out += (quote || (!a.is_variable && !plain)) ? "\"" + a.text + "\"" : a.text;
  }
  return out + ")";
}

std::string to_source(const Program& program) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& d : program.decls)
    out << "pred " << d.name << "/" << d.arity << (d.closed ? " closed" : " open") << "\n";
  if (!program.decls.empty() && !program.rules.empty()) out << "\n";
  for (const auto& r : program.rules) {
    out << r.name << ": ";
    switch (r.kind) {
      case RuleKind::WeightedScored: out << "scored(" << r.scorer << ")"; break;
      case RuleKind::WeightedScalar: {
        std::ostringstream w;
        w.precision(17);
        w << r.weight;
        auto s = w.str();
        out << (s.find_first_of(".e") == std::string::npos ? s + ".0" : s);
        break;
      }
      case RuleKind::Hard:
      case RuleKind::PolarityCoupling: out << "hard"; break;
    }
    if (r.exponent != 1) out << "^" << r.exponent;
    out << ": ";
    for (std::size_t i = 0; i < r.body.size(); ++i) {
      if (i) out << " & ";
      out << to_string(r.body[i]);
    }
    out << " => " << to_string(r.head) << ".\n";
  }
  return out.str();
}

}  // namespace mframe
