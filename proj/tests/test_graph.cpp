#include <doctest.h>

#include <cmath>
#include <vector>

#include "pde_embed/graph.hpp"
#include "pde_embed/mlp.hpp"
#include "pde_embed/parser.hpp"
#include "pde_embed/rng.hpp"

using namespace pde_embed;

namespace {

NetworkBank one_net_bank(const std::string& name, int input_dim, std::uint64_t seed,
                         ActivationKind act = ActivationKind::Tanh) {
  NetworkBank bank;
  MlpSpec s{input_dim, 2, 8, 1, act};
  bank.add(NetworkEntry{name, NetworkRole::Primary, init(s, seed)});
  return bank;
}

EvalBatch batch_xt(const NetworkBank* bank, std::vector<double> xs, std::vector<double> ts) {
  EvalBatch b;
  b.bank = bank;
  b.add("x", std::move(xs));
  b.add("t", std::move(ts));
  return b;
}

} // namespace

TEST_CASE("constant folding and hash consing") {
  Graph g;
  int c2 = g.add_const(2.0);
  int c3 = g.add_const(3.0);
  int prod = g.add(Node::Op::Mul, c2, c3);
  CHECK(g.nodes[prod].op == Node::Op::Const);
  CHECK(g.nodes[prod].value == 6.0);

  int x = g.add_input("x");
  SUBCASE("identical structure reuses the node") {
    int a = g.add(Node::Op::Mul, x, c2);
    auto size = g.size();
    int b = g.add(Node::Op::Mul, x, c2);
    CHECK(a == b);
    CHECK(g.size() == size);
  }
  SUBCASE("algebraic identities fold") {
    int zero = g.add_const(0.0);
    CHECK(g.add(Node::Op::Div, zero, x) == zero);
    int diff = g.add(Node::Op::Sub, x, x);
    CHECK(g.nodes[diff].op == Node::Op::Const);
    CHECK(g.nodes[diff].value == 0.0);
    int one = g.add_const(1.0);
    CHECK(g.add(Node::Op::Mul, one, x) == x);
    CHECK(g.add(Node::Op::Add, x, zero) == x);
  }
  SUBCASE("repeated constants are interned") {
    CHECK(g.add_const(2.0) == c2);
  }
}

TEST_CASE("power rule through symbolic differentiation") {
  SUBCASE("x*x differentiates to 2x") {
    Graph g;
    int x = g.add_input("x");
    int sq = g.add(Node::Op::Mul, x, x);
    g.root = differentiate(g, sq, "x");
    EvalBatch b;
    b.add("x", {3.0});
    CHECK(evaluate(g, b) == std::vector<double>{6.0});
  }
  SUBCASE("third derivative of x^4 is 24x") {
    Graph g;
    int x = g.add_input("x");
    int p = g.add_pow(x, 4.0);
    int d1 = differentiate(g, p, "x");
    int d2 = differentiate(g, d1, "x");
    g.root = differentiate(g, d2, "x");
    EvalBatch b;
    b.add("x", {1.0, 2.0});
    auto v = evaluate(g, b);
    CHECK(v[0] == doctest::Approx(24.0).epsilon(1e-14));
    CHECK(v[1] == doctest::Approx(48.0).epsilon(1e-14));
  }
}

TEST_CASE("evaluate is elementwise over the batch") {
  Graph g;
  int c = g.add_const(2.0);
  int x = g.add_input("x");
  g.root = g.add(Node::Op::Mul, c, x);
  EvalBatch b;
  b.add("x", {1.0, 2.0, 3.0});
  CHECK(evaluate(g, b) == std::vector<double>{2.0, 4.0, 6.0});
}

TEST_CASE("zeroed network evaluates to zero everywhere") {
  NetworkBank bank = one_net_bank("u", 2, 4);
  std::fill(bank.nets[0].params.flat.begin(), bank.nets[0].params.flat.end(), 0.0);
  Graph g(&bank);
  int x = g.add_input("x");
  int t = g.add_input("t");
  g.root = g.add_net(0, {x, t});
  auto b = batch_xt(&bank, {0.1, -0.5, 2.0}, {0.0, 0.3, 1.0});
  for (double v : evaluate(g, b)) CHECK(v == 0.0);
}

TEST_CASE("domain errors report the batch index") {
  Graph g;
  int one = g.add_const(1.0);
  int x = g.add_input("x");
  g.root = g.add(Node::Op::Div, one, x);
  EvalBatch b;
  b.add("x", {1.0, 0.0});
  try {
    evaluate(g, b);
    FAIL("expected DomainError");
  } catch (const GraphError& e) {
    CHECK(e.kind == GraphError::Kind::DomainError);
    CHECK(e.batch_index == 1);
    CHECK(e.node == g.root);
  }

  Graph lg;
  int lx = lg.add_input("x");
  lg.root = lg.add(Node::Op::Log, lx);
  EvalBatch lb;
  lb.add("x", {-1.0});
  CHECK_THROWS_AS(evaluate(lg, lb), GraphError);
}

TEST_CASE("differentiate leaves existing roots intact") {
  NetworkBank bank = one_net_bank("u", 2, 77);
  Graph g(&bank);
  int x = g.add_input("x");
  int t = g.add_input("t");
  int u = g.add_net(0, {x, t});
  int expr = g.add(Node::Op::Mul, u, u);
  g.root = expr;
  auto b = batch_xt(&bank, {0.2, 0.7}, {0.1, 0.9});
  auto before = evaluate(g, b);
  differentiate(g, expr, "x");
  differentiate(g, expr, "t");
  CHECK(evaluate(g, b) == before);
}

TEST_CASE("derivative of an unknown input is an error, of an unused input is zero") {
  Graph g;
  int x = g.add_input("x");
  g.add_input("t");
  int sq = g.add(Node::Op::Mul, x, x);
  CHECK_THROWS_AS(differentiate(g, sq, "y"), GraphError);
  try {
    differentiate(g, sq, "y");
  } catch (const GraphError& e) {
    CHECK(e.kind == GraphError::Kind::NotAnInput);
  }
  g.root = differentiate(g, sq, "t");
  EvalBatch b;
  b.add("x", {5.0});
  b.add("t", {2.0});
  CHECK(evaluate(g, b) == std::vector<double>{0.0});
}

TEST_CASE("network derivatives stop at order three") {
  NetworkBank bank = one_net_bank("u", 1, 9);
  Graph g(&bank);
  int x = g.add_input("x");
  int u = g.add_net(0, {x});
  int d1 = differentiate(g, u, "x");
  int d2 = differentiate(g, d1, "x");
  int d3 = differentiate(g, d2, "x");
  CHECK_THROWS_AS(differentiate(g, d3, "x"), GraphError);
  try {
    differentiate(g, d3, "x");
  } catch (const GraphError& e) {
    CHECK(e.kind == GraphError::Kind::UnsupportedDerivative);
  }
}

TEST_CASE("compact drops unreachable nodes and preserves values") {
  Graph g;
  int x = g.add_input("x");
  int sq = g.add(Node::Op::Mul, x, x);
  g.add(Node::Op::Exp, sq);       // dead
  g.add(Node::Op::Add, sq, x);    // dead
  int root = g.add(Node::Op::Sin, sq);
  Graph h = compact(g, root);
  CHECK(h.size() < g.size());
  CHECK(h.root >= 0);
  EvalBatch b;
  b.add("x", {0.3, 1.7});
  g.root = root;
  CHECK(evaluate(h, b) == evaluate(g, b));
}

TEST_CASE("lowering a closed-form stub gives a network-free graph") {
  SymbolContext ctx;
  ctx.independent_vars = {"x", "t"};
  ctx.coefficients["U"] = {CoefficientDef::Kind::ClosedForm, 0.0, {}, "x * x * t"};
  NetworkBank empty;
  auto ast = parse("diff(U * diff(U,x), x) - diff(U,t)", ctx);
  Graph g = lower(*ast, ctx, empty, {});
  EvalBatch b;
  b.add("x", {2.0, 1.0});
  b.add("t", {1.0, 0.5});
  auto v = evaluate(g, b);
  // d/dx(U U_x) - U_t with U = x^2 t is 6 x^2 t^2 - x^2.
  CHECK(v[0] == doctest::Approx(20.0).epsilon(1e-14));
  CHECK(v[1] == doctest::Approx(0.5).epsilon(1e-14));
  for (const auto& n : g.nodes) CHECK(n.op != Node::Op::Net);
}

TEST_CASE("lowering a lone constant yields a single node") {
  SymbolContext ctx;
  ctx.independent_vars = {"x"};
  NetworkBank empty;
  Graph g = lower(*parse("3", ctx), ctx, empty, {});
  Graph c = compact(g, g.root);
  CHECK(c.size() == 1);
  CHECK(c.nodes[0].op == Node::Op::Const);
  CHECK(c.nodes[0].value == 3.0);
}

TEST_CASE("benchmark residual strings lower without error") {
  NetworkBank bank = one_net_bank("u", 2, 5);
  SUBCASE("dispersive wave") {
    SymbolContext ctx;
    ctx.primary_vars = {"u"};
    ctx.independent_vars = {"x", "t"};
    ctx.coefficients["a"] = {CoefficientDef::Kind::Constant, -1.0, {}, ""};
    ctx.coefficients["b"] = {CoefficientDef::Kind::Constant, 0.0025, {}, ""};
    auto ast = parse("a * u * diff(u,x) - b * diff(u,x,3) - diff(u,t)", ctx);
    Graph g = lower(*ast, ctx, bank, {{"u", 0}});
    CHECK(g.root >= 0);
  }
  SUBCASE("nonlinear diffusion") {
    SymbolContext ctx;
    ctx.primary_vars = {"u"};
    ctx.independent_vars = {"x", "t"};
    auto ast = parse("diff(u * diff(u,x), x) - diff(u,t)", ctx);
    Graph g = lower(*ast, ctx, bank, {{"u", 0}});
    CHECK(g.root >= 0);
  }
  SUBCASE("heterogeneous pressure diffusion") {
    NetworkBank b2;
    MlpSpec sp{3, 2, 8, 1, ActivationKind::Softplus};
    b2.add(NetworkEntry{"P", NetworkRole::Primary, init(sp, 1)});
    MlpSpec sk{2, 2, 8, 1, ActivationKind::Tanh};
    b2.add(NetworkEntry{"lnK", NetworkRole::FittedField, init(sk, 2)});
    SymbolContext ctx;
    ctx.primary_vars = {"P"};
    ctx.independent_vars = {"x", "y", "t"};
    ctx.coefficients["lnK"] = {CoefficientDef::Kind::FittedField, 0.0, {"x", "y"}, ""};
    ctx.coefficients["K"] = {CoefficientDef::Kind::ClosedForm, 0.0, {}, "exp(lnK)"};
    ctx.coefficients["B"] =
        {CoefficientDef::Kind::ClosedForm, 0.0, {}, "1.1 * exp(-0.009 * (P - 200))"};
    ctx.coefficients["mu"] =
        {CoefficientDef::Kind::ClosedForm, 0.0, {}, "2.0 * exp(0.01 * (P - 200))"};
    ctx.coefficients["f"] = {CoefficientDef::Kind::ClosedForm, 0.0, {}, "1 / (B * mu)"};
    auto ast =
        parse("diff(f * K * diff(P,x),x) + diff(f * K * diff(P,y),y) - diff(P,t)", ctx);
    Graph g = lower(*ast, ctx, b2, {{"P", 0}, {"lnK", 1}});
    CHECK(g.root >= 0);
    EvalBatch eb;
    eb.bank = &b2;
    eb.add("x", {100.0});
    eb.add("y", {500.0});
    eb.add("t", {3.0});
    CHECK(std::isfinite(evaluate(g, eb)[0]));
  }
  SUBCASE("unbound primary is an error") {
    SymbolContext ctx;
    ctx.primary_vars = {"u"};
    ctx.independent_vars = {"x", "t"};
    auto ast = parse("diff(u,t)", ctx);
    CHECK_THROWS_AS(lower(*ast, ctx, bank, {}), GraphError);
  }
}

TEST_CASE("differentiation is linear") {
  Graph g;
  int x = g.add_input("x");
  int f = g.add(Node::Op::Sin, g.add(Node::Op::Mul, x, x));
  int h = g.add(Node::Op::Exp, g.add(Node::Op::Mul, g.add_const(0.5), x));
  int a = g.add_const(2.5);
  int b = g.add_const(-1.25);
  int combo = g.add(Node::Op::Add, g.add(Node::Op::Mul, a, f), g.add(Node::Op::Mul, b, h));
  int dcombo = differentiate(g, combo, "x");
  int df = differentiate(g, f, "x");
  int dh = differentiate(g, h, "x");
  EvalBatch batch;
  Rng rng(17);
  std::vector<double> xs(64);
  for (auto& v : xs) v = rng.uniform(-2, 2);
  batch.add("x", xs);
  g.root = dcombo;
  auto lhs = evaluate(g, batch);
  g.root = df;
  auto vf = evaluate(g, batch);
  g.root = dh;
  auto vh = evaluate(g, batch);
  for (size_t i = 0; i < xs.size(); ++i)
    CHECK(std::abs(lhs[i] - (2.5 * vf[i] - 1.25 * vh[i])) <= 1e-12);
}

TEST_CASE("mixed partials commute") {
  NetworkBank bank = one_net_bank("u", 2, 31, ActivationKind::GeLU);
  Graph g(&bank);
  int x = g.add_input("x");
  int t = g.add_input("t");
  int u = g.add_net(0, {x, t});
  int expr = g.add(Node::Op::Mul, u, g.add(Node::Op::Sin, x));
  int dxt = differentiate(g, differentiate(g, expr, "x"), "t");
  int dtx = differentiate(g, differentiate(g, expr, "t"), "x");
  auto b = batch_xt(&bank, {0.1, -0.4, 0.8, 1.5}, {0.0, 0.2, -0.7, 0.5});
  g.root = dxt;
  auto vxt = evaluate(g, b);
  g.root = dtx;
  auto vtx = evaluate(g, b);
  for (size_t i = 0; i < vxt.size(); ++i) CHECK(std::abs(vxt[i] - vtx[i]) <= 1e-10);
}

TEST_CASE("evalbatch validation") {
  EvalBatch b;
  b.add("x", {1.0, 2.0});
  CHECK(b.rows() == 2);
  CHECK(b.find("x") != nullptr);
  CHECK(b.find("y") == nullptr);
  b.add("t", {1.0});
  CHECK_THROWS(b.validate());
}
