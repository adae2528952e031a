#include <doctest.h>

#include <string>
#include <vector>

#include "pde_embed/parser.hpp"
#include "pde_embed/rng.hpp"

using namespace pde_embed;

namespace {

SymbolContext wave_ctx() {
  SymbolContext ctx;
  ctx.primary_vars = {"u"};
  ctx.independent_vars = {"x", "t"};
  ctx.coefficients["a"] = {CoefficientDef::Kind::Constant, -1.0, {}, ""};
  ctx.coefficients["b"] = {CoefficientDef::Kind::Constant, 0.0025, {}, ""};
  return ctx;
}

SymbolContext flux_ctx() {
  SymbolContext ctx;
  ctx.primary_vars = {"u"};
  ctx.independent_vars = {"x", "t"};
  ctx.coefficients["K"] = {CoefficientDef::Kind::FittedField, 0.0, {"x"}, ""};
  ctx.coefficients["f"] = {CoefficientDef::Kind::Constant, 1.0, {}, ""};
  return ctx;
}

ParseError::Kind error_kind(const std::string& src, const SymbolContext& ctx) {
  try {
    parse(src, ctx);
  } catch (const ParseError& e) {
    return e.kind;
  }
  FAIL("expected a parse error for: ", src);
  return ParseError::Kind::EmptyInput;
}

} // namespace

TEST_CASE("tokenizer records kinds and byte positions") {
  auto toks = tokenize("a + diff(u, x)");
  REQUIRE(toks.size() == 8);
  CHECK(toks[0].kind == TokKind::Ident);
  CHECK(toks[0].lexeme == "a");
  CHECK(toks[0].pos == 0);
  CHECK(toks[1].kind == TokKind::Plus);
  CHECK(toks[3].kind == TokKind::LParen);
  CHECK(toks[5].kind == TokKind::Comma);
  CHECK(toks[7].kind == TokKind::RParen);
  CHECK(toks[4].pos == 9);

  auto nums = tokenize("1.5e-3 ^ 2");
  REQUIRE(nums.size() == 3);
  CHECK(nums[0].kind == TokKind::Number);
  CHECK(nums[0].lexeme == "1.5e-3");
  CHECK(nums[1].kind == TokKind::Caret);
}

TEST_CASE("third order dispersive residual parses into the expected tree") {
  auto ast = parse("a * u * diff(u,x) - b * diff(u,x,3) - diff(u,t)", wave_ctx());
  // ((a*u*u_x - b*u_xxx) - u_t), with * left associative.
  REQUIRE(ast->kind == ExprAst::Kind::Binary);
  CHECK(ast->op == '-');
  CHECK(ast->b->kind == ExprAst::Kind::Diff);
  CHECK(ast->b->name == "t");
  CHECK(ast->b->order == 1);
  const auto& lhs = *ast->a;
  REQUIRE(lhs.kind == ExprAst::Kind::Binary);
  CHECK(lhs.op == '-');
  const auto& adv = *lhs.a; // a * u * diff(u,x)
  REQUIRE(adv.kind == ExprAst::Kind::Binary);
  CHECK(adv.op == '*');
  CHECK(adv.b->kind == ExprAst::Kind::Diff);
  CHECK(adv.a->op == '*');
  CHECK(adv.a->a->name == "a");
  CHECK(adv.a->b->name == "u");
  const auto& disp = *lhs.b; // b * diff(u,x,3)
  CHECK(disp.op == '*');
  CHECK(disp.a->name == "b");
  CHECK(disp.b->kind == ExprAst::Kind::Diff);
  CHECK(disp.b->order == 3);
  CHECK(disp.b->a->name == "u");
}

TEST_CASE("nonlinear diffusion residual parses with nested diff") {
  auto ast = parse("diff(u * diff(u,x), x) - diff(u,t)", wave_ctx());
  REQUIRE(ast->kind == ExprAst::Kind::Binary);
  CHECK(ast->op == '-');
  const auto& outer = *ast->a;
  REQUIRE(outer.kind == ExprAst::Kind::Diff);
  CHECK(outer.name == "x");
  CHECK(outer.order == 1);
  const auto& inner = *outer.a;
  REQUIRE(inner.kind == ExprAst::Kind::Binary);
  CHECK(inner.op == '*');
  CHECK(inner.a->name == "u");
  CHECK(inner.b->kind == ExprAst::Kind::Diff);
}

TEST_CASE("postorder labels") {
  SUBCASE("single symbol") {
    auto ast = parse("u", wave_ctx());
    CHECK(postorder(*ast) == std::vector<std::string>{"u"});
  }
  SUBCASE("binary sum") {
    auto ast = parse("a + b", wave_ctx());
    CHECK(postorder(*ast) == std::vector<std::string>{"a", "b", "+"});
  }
  SUBCASE("flux divergence") {
    auto ast = parse("diff(K * f * diff(u, x), x)", flux_ctx());
    CHECK(postorder(*ast) ==
          std::vector<std::string>{"K", "f", "*", "u", "x", "diff", "*", "x", "diff"});
  }
  SUBCASE("higher order emits the order label") {
    auto ast = parse("diff(u, x, 3)", wave_ctx());
    CHECK(postorder(*ast) == std::vector<std::string>{"u", "x", "3", "diff"});
  }
}

TEST_CASE("render produces the canonical parenthesized form") {
  auto ctx = wave_ctx();
  CHECK(render(*parse("a*u", ctx)) == "(a * u)");
  CHECK(render(*parse("diff(u,x,3)", ctx)) == "diff(u, x, 3)");
  CHECK(render(*parse("diff(u,x)", ctx)) == "diff(u, x, 1)");
  CHECK(render(*parse("-u", ctx)) == "(-u)");
  CHECK(render(*parse("exp(u)", ctx)) == "exp(u)");
  CHECK(render(*parse("a + b * u", ctx)) == "(a + (b * u))");
}

TEST_CASE("operator precedence and associativity") {
  auto ctx = wave_ctx();
  // ^ binds tighter than unary minus, which binds tighter than * and /.
  CHECK(render(*parse("-u^2", ctx)) == "(-(u ^ 2))");
  CHECK(render(*parse("a + b * u", ctx)) == "(a + (b * u))");
  CHECK(render(*parse("a * b ^ 2", ctx)) == "(a * (b ^ 2))");
  // + - * / associate left, ^ associates right.
  CHECK(render(*parse("a - b - u", ctx)) == "((a - b) - u)");
  CHECK(render(*parse("a / b / u", ctx)) == "((a / b) / u)");
  CHECK(render(*parse("a ^ b ^ 2", ctx)) == "(a ^ (b ^ 2))");
  CHECK(render(*parse("a * b * u", ctx)) == "((a * b) * u)");
  // Parentheses override.
  CHECK(render(*parse("a * (b + u)", ctx)) == "(a * (b + u))");
}

TEST_CASE("diff with two arguments means first order") {
  auto ctx = wave_ctx();
  CHECK(structurally_equal(*parse("diff(u,x)", ctx), *parse("diff(u,x,1)", ctx)));
}

TEST_CASE("parse errors carry kind and position") {
  auto ctx = wave_ctx();
  SUBCASE("undeclared symbol") {
    try {
      parse("v + 1", ctx);
      FAIL("expected UndeclaredSymbol");
    } catch (const ParseError& e) {
      CHECK(e.kind == ParseError::Kind::UndeclaredSymbol);
      CHECK(e.pos == 0);
      CHECK(std::string(e.what()).find("v") != std::string::npos);
    }
  }
  SUBCASE("bad diff arguments") {
    CHECK(error_kind("diff(u)", ctx) == ParseError::Kind::BadDiffArgs);
    CHECK(error_kind("diff(u, x, 0)", ctx) == ParseError::Kind::BadDiffArgs);
    CHECK(error_kind("diff(u, 3, x)", ctx) == ParseError::Kind::BadDiffArgs);
    CHECK(error_kind("diff(u, u)", ctx) == ParseError::Kind::BadDiffArgs);
  }
  SUBCASE("unbalanced parentheses") {
    CHECK(error_kind("(u + a", ctx) == ParseError::Kind::UnbalancedParens);
    CHECK(error_kind("u + a)", ctx) == ParseError::Kind::UnbalancedParens);
  }
  SUBCASE("unexpected token") {
    CHECK(error_kind("u + * a", ctx) == ParseError::Kind::UnexpectedToken);
    CHECK(error_kind("u a", ctx) == ParseError::Kind::UnexpectedToken);
    // No implicit multiplication.
    CHECK(error_kind("2u", ctx) == ParseError::Kind::UnexpectedToken);
  }
  SUBCASE("empty input") {
    CHECK(error_kind("", ctx) == ParseError::Kind::EmptyInput);
    CHECK(error_kind("   ", ctx) == ParseError::Kind::EmptyInput);
  }
  SUBCASE("unknown character") {
    CHECK(error_kind("u + $", ctx) == ParseError::Kind::UnknownCharacter);
  }
  SUBCASE("malformed number") {
    CHECK(error_kind("1.5e+ * u", ctx) == ParseError::Kind::MalformedNumber);
  }
}

TEST_CASE("substitute replaces symbols recursively") {
  auto ctx = wave_ctx();
  auto ast = parse("a * u + diff(u, x)", ctx);
  auto repl = parse("b ^ 2", ctx);
  auto out = substitute(ast, "u", repl);
  CHECK(render(*out) == "((a * (b ^ 2)) + diff((b ^ 2), x, 1))");
  // Untouched tree shares structure.
  CHECK(structurally_equal(*substitute(ast, "zzz", repl), *ast));
}

TEST_CASE("node_count counts every tree node") {
  auto ctx = wave_ctx();
  CHECK(node_count(*parse("u", ctx)) == 1);
  CHECK(node_count(*parse("a + b", ctx)) == 3);
  CHECK(node_count(*parse("diff(u, x, 2)", ctx)) == 2);
}

namespace {

// Random tree over the declared symbols; depth-bounded so the render string
// stays small.
AstPtr random_ast(Rng& rng, int depth) {
  const double r = rng.uniform();
  if (depth <= 0 || r < 0.25) {
    if (rng.uniform() < 0.5) {
      static const char* syms[] = {"u", "x", "t", "a", "b"};
      return ExprAst::symbol(syms[rng.next_u64() % 5]);
    }
    double v = rng.uniform() < 0.5 ? double(rng.next_u64() % 100)
                                   : rng.uniform(0.0, 10.0);
    return ExprAst::constant(v);
  }
  if (r < 0.70) {
    static const char ops[] = {'+', '-', '*', '/', '^'};
    return ExprAst::binary(ops[rng.next_u64() % 5], random_ast(rng, depth - 1),
                           random_ast(rng, depth - 1));
  }
  if (r < 0.80) return ExprAst::neg(random_ast(rng, depth - 1));
  if (r < 0.90) {
    static const char* vars[] = {"x", "t"};
    return ExprAst::diff(random_ast(rng, depth - 1), vars[rng.next_u64() % 2],
                         1 + int(rng.next_u64() % 3));
  }
  static const char* fns[] = {"exp", "sin", "cos", "log"};
  return ExprAst::func(fns[rng.next_u64() % 4], random_ast(rng, depth - 1));
}

} // namespace

TEST_CASE("parse inverts render over random trees") {
  auto ctx = wave_ctx();
  Rng rng(20240811);
  int checked = 0;
  for (int i = 0; i < 1200; ++i) {
    auto ast = random_ast(rng, 5);
    auto back = parse(render(*ast), ctx);
    CHECK(structurally_equal(*ast, *back));
    ++checked;
  }
  CHECK(checked >= 1000);
}
