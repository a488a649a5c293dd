#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mframe/knowledge_base.hpp"

namespace mframe {

struct SourcePos {
  int line = 0;
  int column = 0;
  bool operator==(const SourcePos&) const = default;
};

struct Term {
  bool is_variable = true;
  std::string text;

  bool operator==(const Term&) const = default;
};

struct Literal {
  bool negated = false;
  std::string predicate;
  std::vector<Term> args;
  SourcePos pos;

  bool operator==(const Literal& o) const {
    return negated == o.negated && predicate == o.predicate && args == o.args;
  }
};

enum class RuleKind : std::uint8_t {
  WeightedScored,    // weight computed per grounding by a learned scorer
  WeightedScalar,    // one learned weight per template
  Hard,              // linear constraint
  PolarityCoupling,  // c3-style template, rewritten by validate()
};

// How a WeightedScored template's scorer is parameterized. Fully observed
// bodies use a linear classifier over features; bodies that contain open atoms
// use one scalar per moral foundation of the head label.
enum class ScorerKind : std::uint8_t { Linear, PerFoundation };

std::string_view name_of(RuleKind kind);

struct RuleTemplate {
  std::string name;
  RuleKind kind = RuleKind::Hard;
  std::string scorer;       // WeightedScored only
  double weight = 1.0;      // WeightedScalar seed
  int exponent = 1;         // hinge exponent, 1 or 2
  std::vector<Literal> body;
  Literal head;
  SourcePos pos;

  // Filled by validate().
  ScorerKind scorer_kind = ScorerKind::Linear;
  bool require_same_ideology = false;  // PolarityCoupling only
  bool require_same_topic = false;

  bool operator==(const RuleTemplate& o) const {
    return name == o.name && kind == o.kind && scorer == o.scorer && weight == o.weight &&
           exponent == o.exponent && body == o.body && head == o.head;
  }
};

struct PredicateDecl {
  std::string name;
  int arity = 0;
  bool closed = true;
  SourcePos pos;

  bool operator==(const PredicateDecl& o) const {
    return name == o.name && arity == o.arity && closed == o.closed;
  }
};

struct Program {
  std::vector<PredicateDecl> decls;
  std::vector<RuleTemplate> rules;

  const RuleTemplate* find_rule(std::string_view name) const;
  const PredicateDecl* find_decl(std::string_view name) const;

  bool operator==(const Program&) const = default;
};

// Grammar:
//   program := (decl | rule)*
//   decl    := "pred" NAME "/" INT ("closed" | "open") "."?
//   rule    := (NAME ":")? tag ("^" INT)? ":" clause "."
//   tag     := "hard" | "scored(" NAME ")" | FLOAT | "weight" "=" FLOAT
//   clause  := literal ("&" literal)* "=>" literal
//   literal := "~"? NAME "(" term ("," term)* ")"
//   term    := VARIABLE | CONSTANT
// Variables start with a lowercase letter; constants start with an uppercase
// letter or digit, or are double-quoted. '#' and '//' start comments.
// MF_Role and SamePolarity are implicitly declared.
Program parse_program(std::string_view source, const Schema& schema = Schema::morality());

// Resolves sorts against the schema and rewrites c3-style templates.
Program validate(Program program, const Schema& schema = Schema::morality());

Program compile_program(std::string_view source, const Schema& schema = Schema::morality());
Program load_program(const std::string& path, const Schema& schema = Schema::morality());

std::string to_source(const Program& program);
std::string to_string(const Literal& literal);

}  // namespace mframe
