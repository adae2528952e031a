#include "pde_embed/parser.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>

#include "pde_embed/util.hpp"

namespace pde_embed {

namespace {
const std::set<std::string> kFuncNames = {"exp", "sin", "cos", "log"};
bool is_reserved(const std::string& s) { return s == "diff" || kFuncNames.count(s) > 0; }
} // namespace

AstPtr ExprAst::constant(double v) {
  if (!(v >= 0) || !std::isfinite(v))
    throw std::invalid_argument("Const values are non-negative finite; use Neg for sign");
  auto n = std::make_shared<ExprAst>();
  n->kind = Kind::Const;
  n->value = v;
  return n;
}

AstPtr ExprAst::symbol(std::string name) {
  auto n = std::make_shared<ExprAst>();
  n->kind = Kind::Symbol;
  n->name = std::move(name);
  return n;
}

AstPtr ExprAst::neg(AstPtr x) {
  auto n = std::make_shared<ExprAst>();
  n->kind = Kind::Neg;
  n->a = std::move(x);
  return n;
}

AstPtr ExprAst::binary(char op, AstPtr lhs, AstPtr rhs) {
  if (std::string("+-*/^").find(op) == std::string::npos)
    throw std::invalid_argument("bad binary op");
  auto n = std::make_shared<ExprAst>();
  n->kind = Kind::Binary;
  n->op = op;
  n->a = std::move(lhs);
  n->b = std::move(rhs);
  return n;
}

AstPtr ExprAst::diff(AstPtr expr, std::string var, int order) {
  if (order < 1) throw std::invalid_argument("diff order must be >= 1");
  auto n = std::make_shared<ExprAst>();
  n->kind = Kind::Diff;
  n->name = std::move(var);
  n->order = order;
  n->a = std::move(expr);
  return n;
}

AstPtr ExprAst::func(std::string name, AstPtr arg) {
  if (!kFuncNames.count(name)) throw std::invalid_argument("unknown function: " + name);
  auto n = std::make_shared<ExprAst>();
  n->kind = Kind::Func;
  n->name = std::move(name);
  n->a = std::move(arg);
  return n;
}

bool structurally_equal(const ExprAst& a, const ExprAst& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExprAst::Kind::Const: return a.value == b.value;
    case ExprAst::Kind::Symbol: return a.name == b.name;
    case ExprAst::Kind::Neg: return structurally_equal(*a.a, *b.a);
    case ExprAst::Kind::Binary:
      return a.op == b.op && structurally_equal(*a.a, *b.a) && structurally_equal(*a.b, *b.b);
    case ExprAst::Kind::Diff:
      return a.name == b.name && a.order == b.order && structurally_equal(*a.a, *b.a);
    case ExprAst::Kind::Func: return a.name == b.name && structurally_equal(*a.a, *b.a);
  }
  return false;
}

int node_count(const ExprAst& a) {
  int n = 1;
  if (a.a) n += node_count(*a.a);
  if (a.b) n += node_count(*a.b);
  return n;
}

void SymbolContext::validate() const {
  std::set<std::string> seen;
  auto check = [&](const std::string& n, const char* role) {
    if (n.empty()) throw std::invalid_argument(std::string(role) + " name empty");
    if (is_reserved(n)) throw std::invalid_argument("name collides with builtin: " + n);
    if (!seen.insert(n).second) throw std::invalid_argument("duplicate symbol: " + n);
  };
  for (const auto& v : primary_vars) check(v, "primary variable");
  for (const auto& v : independent_vars) check(v, "independent variable");
  std::set<std::string> indep(independent_vars.begin(), independent_vars.end());
  for (const auto& [name, def] : coefficients) {
    check(name, "coefficient");
    if (def.kind == CoefficientDef::Kind::FittedField) {
      if (def.args.empty()) throw std::invalid_argument("fitted field needs arguments: " + name);
      for (const auto& a : def.args)
        if (!indep.count(a))
          throw std::invalid_argument("fitted field argument is not an independent variable: " + a);
    }
  }
}

std::vector<Token> tokenize(const std::string& src) {
  std::vector<Token> out;
  size_t i = 0;
  const size_t n = src.size();
  while (i < n) {
    char c = src[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
      continue;
    }
    size_t start = i;
    if (std::isalpha(uint8_t(c)) || c == '_') {
      while (i < n && (std::isalnum(uint8_t(src[i])) || src[i] == '_')) ++i;
      out.push_back({TokKind::Ident, src.substr(start, i - start), start});
      continue;
    }
    if (std::isdigit(uint8_t(c)) || c == '.') {
      bool any_digit = false;
      while (i < n && std::isdigit(uint8_t(src[i]))) { ++i; any_digit = true; }
      if (i < n && src[i] == '.') {
        ++i;
        while (i < n && std::isdigit(uint8_t(src[i]))) { ++i; any_digit = true; }
      }
      if (!any_digit)
        throw ParseError(ParseError::Kind::MalformedNumber, start, "malformed number at " + std::to_string(start));
      if (i < n && (src[i] == 'e' || src[i] == 'E')) {
        size_t esave = i;
        ++i;
        if (i < n && (src[i] == '+' || src[i] == '-')) ++i;
        if (i >= n || !std::isdigit(uint8_t(src[i]))) {
          (void)esave;
          throw ParseError(ParseError::Kind::MalformedNumber, start,
                           "malformed exponent at " + std::to_string(start));
        }
        while (i < n && std::isdigit(uint8_t(src[i]))) ++i;
      }
      if (i < n && src[i] == '.')
        throw ParseError(ParseError::Kind::MalformedNumber, i,
                         "malformed number: stray '.' at " + std::to_string(i));
      std::string lex = src.substr(start, i - start);
      double v = std::strtod(lex.c_str(), nullptr);
      if (!std::isfinite(v))
        throw ParseError(ParseError::Kind::MalformedNumber, start, "number overflows double: " + lex);
      out.push_back({TokKind::Number, lex, start});
      continue;
    }
    TokKind k;
    switch (c) {
      case '+': k = TokKind::Plus; break;
      case '-': k = TokKind::Minus; break;
      case '*': k = TokKind::Star; break;
      case '/': k = TokKind::Slash; break;
      case '^': k = TokKind::Caret; break;
      case '(': k = TokKind::LParen; break;
      case ')': k = TokKind::RParen; break;
      case ',': k = TokKind::Comma; break;
      default:
        throw ParseError(ParseError::Kind::UnknownCharacter, start,
                         std::string("unknown character '") + c + "' at " + std::to_string(start));
    }
    out.push_back({k, std::string(1, c), start});
    ++i;
  }
  return out;
}

namespace {

class Parser {
public:
  Parser(const std::vector<Token>& toks, const SymbolContext& ctx) : toks_(toks), ctx_(ctx) {}

  AstPtr run() {
    if (toks_.empty()) throw ParseError(ParseError::Kind::EmptyInput, 0, "empty expression");
    AstPtr e = expr();
    if (pos_ < toks_.size()) {
      // A leftover closing paren means the parens never balanced.
      if (cur().kind == TokKind::RParen)
        throw ParseError(ParseError::Kind::UnbalancedParens, cur().pos,
                         "unmatched ')'");
      throw ParseError(ParseError::Kind::UnexpectedToken, cur().pos,
                       "unexpected token '" + cur().lexeme + "'");
    }
    return e;
  }

private:
  const std::vector<Token>& toks_;
  const SymbolContext& ctx_;
  size_t pos_ = 0;

  const Token& cur() const { return toks_[pos_]; }
  bool at_end() const { return pos_ >= toks_.size(); }
  bool peek(TokKind k) const { return !at_end() && cur().kind == k; }
  Token take() { return toks_[pos_++]; }

  [[noreturn]] void fail_eof(const char* what) {
    size_t p = toks_.empty() ? 0 : toks_.back().pos + toks_.back().lexeme.size();
    throw ParseError(ParseError::Kind::UnexpectedToken, p, std::string("expected ") + what + " at end of input");
  }

  void expect(TokKind k, const char* what, ParseError::Kind ek = ParseError::Kind::UnexpectedToken) {
    if (at_end()) {
      if (k == TokKind::RParen) {
        size_t p = toks_.empty() ? 0 : toks_.back().pos + toks_.back().lexeme.size();
        throw ParseError(ParseError::Kind::UnbalancedParens, p, "missing ')'");
      }
      fail_eof(what);
    }
    if (cur().kind != k)
      throw ParseError(ek, cur().pos, std::string("expected ") + what + ", got '" + cur().lexeme + "'");
    ++pos_;
  }

  AstPtr expr() {
    AstPtr lhs = term();
    while (peek(TokKind::Plus) || peek(TokKind::Minus)) {
      char op = take().kind == TokKind::Plus ? '+' : '-';
      lhs = ExprAst::binary(op, lhs, term());
    }
    return lhs;
  }

  AstPtr term() {
    AstPtr lhs = unary();
    while (peek(TokKind::Star) || peek(TokKind::Slash)) {
      char op = take().kind == TokKind::Star ? '*' : '/';
      lhs = ExprAst::binary(op, lhs, unary());
    }
    return lhs;
  }

  AstPtr unary() {
    if (peek(TokKind::Minus)) {
      ++pos_;
      return ExprAst::neg(unary());
    }
    return power();
  }

  AstPtr power() {
    AstPtr base = atom();
    if (peek(TokKind::Caret)) {
      ++pos_;
      // Right-associative; the exponent may carry a unary sign.
      return ExprAst::binary('^', base, unary());
    }
    return base;
  }

  AstPtr atom() {
    if (at_end()) fail_eof("an operand");
    const Token& t = cur();
    switch (t.kind) {
      case TokKind::Number: {
        ++pos_;
        return ExprAst::constant(std::strtod(t.lexeme.c_str(), nullptr));
      }
      case TokKind::LParen: {
        ++pos_;
        AstPtr e = expr();
        expect(TokKind::RParen, "')'", ParseError::Kind::UnbalancedParens);
        return e;
      }
      case TokKind::Ident: {
        ++pos_;
        if (peek(TokKind::LParen)) return call(t);
        return resolved_symbol(t);
      }
      case TokKind::RParen:
        throw ParseError(ParseError::Kind::UnbalancedParens, t.pos, "unmatched ')'");
      default:
        throw ParseError(ParseError::Kind::UnexpectedToken, t.pos,
                         "unexpected token '" + t.lexeme + "'");
    }
  }

  AstPtr resolved_symbol(const Token& t) {
    const std::string& n = t.lexeme;
    auto has = [&](const std::vector<std::string>& v) {
      for (const auto& s : v)
        if (s == n) return true;
      return false;
    };
    if (has(ctx_.primary_vars) || has(ctx_.independent_vars) || ctx_.coefficients.count(n))
      return ExprAst::symbol(n);
    throw ParseError(ParseError::Kind::UndeclaredSymbol, t.pos, "undeclared symbol '" + n + "'");
  }

  AstPtr call(const Token& name) {
    expect(TokKind::LParen, "'('");
    if (name.lexeme == "diff") {
      AstPtr e = expr();
      expect(TokKind::Comma, "',' in diff", ParseError::Kind::BadDiffArgs);
      if (at_end() || cur().kind != TokKind::Ident)
        throw ParseError(ParseError::Kind::BadDiffArgs, at_end() ? name.pos : cur().pos,
                         "diff variable must be an identifier");
      Token var = take();
      bool indep = false;
      for (const auto& v : ctx_.independent_vars)
        if (v == var.lexeme) indep = true;
      if (!indep)
        throw ParseError(ParseError::Kind::BadDiffArgs, var.pos,
                         "diff variable must be an independent variable: '" + var.lexeme + "'");
      int order = 1;
      if (peek(TokKind::Comma)) {
        ++pos_;
        if (at_end() || cur().kind != TokKind::Number)
          throw ParseError(ParseError::Kind::BadDiffArgs, at_end() ? var.pos : cur().pos,
                           "diff order must be a positive integer literal");
        Token ord = take();
        double v = std::strtod(ord.lexeme.c_str(), nullptr);
        if (v < 1 || v != std::floor(v) || ord.lexeme.find_first_of(".eE") != std::string::npos)
          throw ParseError(ParseError::Kind::BadDiffArgs, ord.pos,
                           "diff order must be a positive integer literal, got '" + ord.lexeme + "'");
        order = int(v);
      }
      expect(TokKind::RParen, "')'", ParseError::Kind::UnbalancedParens);
      return ExprAst::diff(e, var.lexeme, order);
    }
    if (kFuncNames.count(name.lexeme)) {
      AstPtr arg = expr();
      expect(TokKind::RParen, "')'", ParseError::Kind::UnbalancedParens);
      return ExprAst::func(name.lexeme, arg);
    }
    throw ParseError(ParseError::Kind::UndeclaredSymbol, name.pos,
                     "unknown function '" + name.lexeme + "'");
  }
};

} // namespace

AstPtr parse(const std::vector<Token>& tokens, const SymbolContext& ctx) {
  ctx.validate();
  return Parser(tokens, ctx).run();
}

AstPtr parse(const std::string& src, const SymbolContext& ctx) {
  return parse(tokenize(src), ctx);
}

namespace {
std::string fmt_number(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  return fmt_g17(v);
}

void postorder_walk(const ExprAst& a, std::vector<std::string>& out) {
  switch (a.kind) {
    case ExprAst::Kind::Const: out.push_back(fmt_number(a.value)); break;
    case ExprAst::Kind::Symbol: out.push_back(a.name); break;
    case ExprAst::Kind::Neg:
      postorder_walk(*a.a, out);
      out.push_back("neg");
      break;
    case ExprAst::Kind::Binary:
      postorder_walk(*a.a, out);
      postorder_walk(*a.b, out);
      out.push_back(std::string(1, a.op));
      break;
    case ExprAst::Kind::Diff:
      postorder_walk(*a.a, out);
      out.push_back(a.name);
      if (a.order > 1) out.push_back(std::to_string(a.order));
      out.push_back("diff");
      break;
    case ExprAst::Kind::Func:
      postorder_walk(*a.a, out);
      out.push_back(a.name);
      break;
  }
}
} // namespace

std::vector<std::string> postorder(const ExprAst& ast) {
  std::vector<std::string> out;
  postorder_walk(ast, out);
  return out;
}

std::string render(const ExprAst& a) {
  switch (a.kind) {
    case ExprAst::Kind::Const: return fmt_number(a.value);
    case ExprAst::Kind::Symbol: return a.name;
    case ExprAst::Kind::Neg: return "(-" + render(*a.a) + ")";
    case ExprAst::Kind::Binary:
      return "(" + render(*a.a) + " " + std::string(1, a.op) + " " + render(*a.b) + ")";
    case ExprAst::Kind::Diff:
      return "diff(" + render(*a.a) + ", " + a.name + ", " + std::to_string(a.order) + ")";
    case ExprAst::Kind::Func: return a.name + "(" + render(*a.a) + ")";
  }
  return {};
}

AstPtr substitute(const AstPtr& ast, const std::string& name, const AstPtr& replacement) {
  switch (ast->kind) {
    case ExprAst::Kind::Const: return ast;
    case ExprAst::Kind::Symbol: return ast->name == name ? replacement : ast;
    case ExprAst::Kind::Neg: return ExprAst::neg(substitute(ast->a, name, replacement));
    case ExprAst::Kind::Binary:
      return ExprAst::binary(ast->op, substitute(ast->a, name, replacement),
                             substitute(ast->b, name, replacement));
    case ExprAst::Kind::Diff:
      return ExprAst::diff(substitute(ast->a, name, replacement), ast->name, ast->order);
    case ExprAst::Kind::Func: return ExprAst::func(ast->name, substitute(ast->a, name, replacement));
  }
  return ast;
}

} // namespace pde_embed
