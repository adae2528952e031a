#include <doctest.h>

#include <cmath>
#include <vector>

#include "pde_embed/fdcheck.hpp"
#include "pde_embed/graph.hpp"
#include "pde_embed/jet.hpp"
#include "pde_embed/rng.hpp"

using namespace pde_embed;

namespace {

EvalBatch random_batch(const NetworkBank* bank, const std::vector<std::string>& names,
                       int n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  EvalBatch b;
  b.bank = bank;
  for (const auto& name : names) {
    std::vector<double> col(n);
    for (auto& v : col) v = rng.uniform(lo, hi);
    b.add(name, std::move(col));
  }
  return b;
}

} // namespace

TEST_CASE("hand-checked gradient of a linear unit") {
  // u(x) = W1 * relu(W0 x + b0) + b1 with W0=W1=1, b=0 acts as w*x for x>0.
  NetworkBank bank;
  MlpSpec s{1, 1, 1, 1, ActivationKind::ReLU};
  auto p = init(s, 0);
  p.flat = {1.0, 0.0, 1.0, 0.0};
  bank.add(NetworkEntry{"u", NetworkRole::Primary, p});
  Graph g(&bank);
  int x = g.add_input("x");
  g.root = g.add_net(0, {x});
  EvalBatch b;
  b.bank = &bank;
  b.add("x", {2.0});
  auto res = param_gradient(g, b);
  CHECK(res.loss == 4.0); // mean of squares of u=2
  REQUIRE(res.grads.size() == 1);
  // d/dW0 = 2u * W1 relu' x = 8, d/db0 = 2u * W1 relu' = 4,
  // d/dW1 = 2u * h = 8, d/db1 = 2u = 4.
  CHECK(res.grads[0] == std::vector<double>{8.0, 4.0, 8.0, 4.0});
}

TEST_CASE("zero network has zero loss gradient") {
  NetworkBank bank;
  MlpSpec s{2, 2, 6, 1, ActivationKind::Tanh};
  auto p = init(s, 3);
  std::fill(p.flat.begin(), p.flat.end(), 0.0);
  bank.add(NetworkEntry{"u", NetworkRole::Primary, p});
  Graph g(&bank);
  g.root = g.add_net(0, {g.add_input("x"), g.add_input("t")});
  Rng rng(5);
  auto b = random_batch(&bank, {"x", "t"}, 17, rng);
  auto res = param_gradient(g, b);
  CHECK(res.loss == 0.0);
  for (double v : res.grads[0]) CHECK(v == 0.0);
}

TEST_CASE("derivatives and parameter gradients match finite differences") {
  // Accumulates well over 100 (graph, input, parameter) cases across
  // activations and arities.
  const ActivationKind acts[] = {ActivationKind::Tanh, ActivationKind::Softplus,
                                 ActivationKind::GeLU};
  Rng rng(2024);
  int fd_rows = 0;
  std::size_t grad_cases = 0;
  for (int trial = 0; trial < 6; ++trial) {
    ActivationKind act = acts[trial % 3];
    NetworkBank bank;
    MlpSpec s{2, 2, 8, 1, act};
    bank.add(NetworkEntry{"u", NetworkRole::Primary, init(s, 100 + trial)});
    Graph g(&bank);
    int x = g.add_input("x");
    int t = g.add_input("t");
    int u = g.add_net(0, {x, t});
    int expr;
    switch (trial % 3) {
      case 0: expr = g.add(Node::Op::Mul, u, u); break;
      case 1: expr = g.add(Node::Op::Add, u, g.add(Node::Op::Sin, x)); break;
      default: expr = g.add(Node::Op::Mul, u, g.add(Node::Op::Exp, t)); break;
    }
    g.root = expr;
    auto b = random_batch(&bank, {"x", "t"}, 20, rng);
    auto report = fd_check(g, bank, b);
    for (const auto& row : report.rows) {
      double tol = row.order == 1 ? 1e-7 : row.order == 2 ? 1e-5 : 1e-3;
      CHECK(row.max_rel <= tol);
      ++fd_rows;
    }
    CHECK(report.grad_max_rel <= 1e-5);
    grad_cases += report.grad_params;
  }
  CHECK(fd_rows >= 18);
  CHECK(grad_cases >= 100);
}

TEST_CASE("evaluator values agree with graph evaluation and chunking is row independent") {
  NetworkBank bank;
  MlpSpec s{2, 3, 12, 1, ActivationKind::Softplus};
  bank.add(NetworkEntry{"u", NetworkRole::Primary, init(s, 8)});
  Graph g(&bank);
  int x = g.add_input("x");
  int t = g.add_input("t");
  int u = g.add_net(0, {x, t});
  int ux = differentiate(g, u, "x");
  g.root = g.add(Node::Op::Sub, g.add(Node::Op::Mul, u, ux), g.add_net(0, {t, x}));
  Graph c = compact(g, g.root);
  Evaluator ev(c, bank);

  Rng rng(77);
  auto big = random_batch(&bank, {"x", "t"}, 300, rng); // spans multiple chunks
  auto v_ev = ev.values(big);
  auto v_free = evaluate(c, big);
  CHECK(v_ev == v_free);

  // Row 5 in isolation evaluates to the same bits as inside the batch.
  EvalBatch one;
  one.bank = &bank;
  one.add("x", {big.columns[0].second[5]});
  one.add("t", {big.columns[1].second[5]});
  CHECK(ev.values(one)[0] == v_ev[5]);

  auto g1 = ev.loss_and_grad(big);
  auto g2 = ev.loss_and_grad(big);
  CHECK(g1.loss == g2.loss);
  CHECK(g1.grads == g2.grads);

  double acc = 0;
  for (double v : v_ev) acc += v * v;
  CHECK(g1.loss == doctest::Approx(acc / 300.0).epsilon(1e-12));
}

TEST_CASE("unused networks report empty gradients") {
  NetworkBank bank;
  MlpSpec s{1, 1, 4, 1, ActivationKind::Tanh};
  bank.add(NetworkEntry{"u", NetworkRole::Primary, init(s, 1)});
  bank.add(NetworkEntry{"K", NetworkRole::FittedField, init(s, 2)});
  Graph g(&bank);
  g.root = g.add_net(0, {g.add_input("x")});
  EvalBatch b;
  b.bank = &bank;
  b.add("x", {0.5, 0.25});
  auto res = param_gradient(g, b);
  REQUIRE(res.grads.size() == 2);
  CHECK(!res.grads[0].empty());
  CHECK(res.grads[1].empty());
}

TEST_CASE("parameter updates are visible without rebuilding the evaluator") {
  NetworkBank bank;
  MlpSpec s{1, 1, 4, 1, ActivationKind::Tanh};
  bank.add(NetworkEntry{"u", NetworkRole::Primary, init(s, 21)});
  Graph g(&bank);
  g.root = g.add_net(0, {g.add_input("x")});
  Graph c = compact(g, g.root);
  Evaluator ev(c, bank);
  EvalBatch b;
  b.bank = &bank;
  b.add("x", {0.3});
  double before = ev.values(b)[0];
  for (auto& w : bank.nets[0].params.flat) w += 0.1;
  double after = ev.values(b)[0];
  CHECK(before != after);
}
