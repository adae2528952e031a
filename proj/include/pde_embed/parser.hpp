#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace pde_embed {

// ASCII equation front end. Residual strings such as
//   "a * u * diff(u,x) - b * diff(u,x,3) - diff(u,t)"
// are tokenized and parsed into an immutable expression tree against a
// symbol context that declares primary variables, independent variables,
// and coefficients.

enum class TokKind { Ident, Number, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma };

struct Token {
  TokKind kind;
  std::string lexeme;
  size_t pos; // byte offset into the source string
};

struct ParseError : std::runtime_error {
  enum class Kind {
    UnknownCharacter,
    MalformedNumber,
    UnexpectedToken,
    UnbalancedParens,
    UndeclaredSymbol,
    BadDiffArgs,
    EmptyInput,
  };
  ParseError(Kind k, size_t p, const std::string& msg)
      : std::runtime_error(msg), kind(k), pos(p) {}
  Kind kind;
  size_t pos;
};

struct ExprAst;
using AstPtr = std::shared_ptr<const ExprAst>;

/// Immutable expression tree. Const values are non-negative by construction
/// (the lexer has no sign; negation is an explicit Neg node).
struct ExprAst {
  enum class Kind { Const, Symbol, Neg, Binary, Diff, Func };

  Kind kind;
  double value = 0;  // Const
  std::string name;  // Symbol name, Func name, Diff variable
  char op = 0;       // Binary: one of + - * / ^
  int order = 0;     // Diff
  AstPtr a, b;       // children

  static AstPtr constant(double v);
  static AstPtr symbol(std::string name);
  static AstPtr neg(AstPtr x);
  static AstPtr binary(char op, AstPtr lhs, AstPtr rhs);
  static AstPtr diff(AstPtr expr, std::string var, int order);
  static AstPtr func(std::string name, AstPtr arg);
};

bool structurally_equal(const ExprAst& a, const ExprAst& b);
int node_count(const ExprAst& a);

/// How a coefficient symbol is bound when lowering to a compute graph.
struct CoefficientDef {
  enum class Kind { Constant, FittedField, ClosedForm };
  Kind kind = Kind::Constant;
  double value = 0;               // Constant
  std::vector<std::string> args;  // FittedField: independent variables it depends on
  std::string source;             // ClosedForm: expression over the primary variable
};

struct SymbolContext {
  std::vector<std::string> primary_vars;
  std::vector<std::string> independent_vars;
  std::map<std::string, CoefficientDef> coefficients;

  /// Throws std::invalid_argument on duplicate/reserved names or fitted-field
  /// arguments that are not independent variables.
  void validate() const;
};

std::vector<Token> tokenize(const std::string& src);

AstPtr parse(const std::string& src, const SymbolContext& ctx);
AstPtr parse(const std::vector<Token>& tokens, const SymbolContext& ctx);

/// Depth-first postorder labels; a first-order Diff contributes
/// "child..., var, diff", matching the conventional drawing of such trees.
std::vector<std::string> postorder(const ExprAst& ast);

/// Canonical fully parenthesized form; parse(render(a)) is structurally
/// identical to a.
std::string render(const ExprAst& ast);

/// Replace every Symbol(name) by a copy of `replacement`.
AstPtr substitute(const AstPtr& ast, const std::string& name, const AstPtr& replacement);

} // namespace pde_embed
