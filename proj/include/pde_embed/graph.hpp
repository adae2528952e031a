#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "pde_embed/mlp.hpp"
#include "pde_embed/parser.hpp"

namespace pde_embed {

// Highest input-side derivative order a network application can carry.
constexpr int kMaxDerivOrder = 3;

// Derivative multi-index over a network's input slots (at most 4 slots).
struct MultiIndex {
  std::array<std::uint8_t, 4> d{0, 0, 0, 0};

  int total() const { return d[0] + d[1] + d[2] + d[3]; }
  MultiIndex bump(int slot) const {
    MultiIndex m = *this;
    m.d[slot] = std::uint8_t(m.d[slot] + 1);
    return m;
  }
  bool leq(const MultiIndex& o) const {
    for (int i = 0; i < 4; ++i)
      if (d[i] > o.d[i]) return false;
    return true;
  }
  bool operator==(const MultiIndex&) const = default;
};

struct GraphError : std::runtime_error {
  enum class Kind { UnboundNetwork, UnsupportedDerivative, NotAnInput, DomainError, Invalid };
  Kind kind;
  int node = -1;
  long batch_index = -1;
  GraphError(Kind k, const std::string& msg, int node_id = -1, long index = -1)
      : std::runtime_error(msg), kind(k), node(node_id), batch_index(index) {}
};

struct Node {
  enum class Op : std::uint8_t {
    Input,
    Const,
    Net,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Neg,
    Exp,
    Sin,
    Cos,
    Log
  };
  Op op = Op::Const;
  int a = -1, b = -1;
  double value = 0.0; // Const payload, or the exponent of Pow
  std::int16_t input = -1;
  std::int16_t net = -1;
  std::int16_t out_index = 0;
  std::array<int, 4> net_in{-1, -1, -1, -1};
  MultiIndex deriv;

  int net_arity() const {
    int k = 0;
    while (k < 4 && net_in[k] >= 0) ++k;
    return k;
  }
  bool same_expr(const Node& o) const;
};

// Append-only expression DAG over named inputs, constants and network
// applications. Structurally identical additions return the existing node
// (hash consing), and constant arithmetic folds at build time, which keeps
// repeated differentiation from blowing up the node count.
class Graph {
public:
  explicit Graph(const NetworkBank* bank = nullptr) : bank_(bank) {}

  std::vector<Node> nodes;
  std::vector<std::string> input_names;
  int root = -1;

  const NetworkBank* bank() const { return bank_; }

  int input_slot(const std::string& name) const;
  int add_input(const std::string& name);
  int add_const(double v);
  int add(Node::Op op, int a, int b = -1);
  int add_pow(int a, double exponent);
  int add_net(int net, const std::vector<int>& inputs, int out_index = 0, MultiIndex deriv = {});

  // Derivative of a node with respect to an input slot, appended to the
  // graph. Existing nodes are never modified.
  int derivative(int id, int slot);

  std::size_t size() const { return nodes.size(); }

private:
  const NetworkBank* bank_;
  std::unordered_map<std::uint64_t, std::vector<int>> intern_;
  std::unordered_map<std::uint64_t, int> dcache_;

  int intern(Node n);
  friend Graph compact(const Graph& g, int root);
};

// Named value columns of equal length plus the parameter store the graph's
// network applications read from.
struct EvalBatch {
  const NetworkBank* bank = nullptr;
  std::vector<std::pair<std::string, std::vector<double>>> columns;

  void add(std::string name, std::vector<double> values);
  const std::vector<double>* find(const std::string& name) const;
  std::size_t rows() const;
  void validate() const;
};

// Lowers a parsed residual onto a graph. Every primary variable becomes a
// network application over all independent variables; fitted-field
// coefficients apply their networks over the declared arguments; closed-form
// coefficients are lowered recursively. Diff constructs are eliminated by
// repeated differentiation, so the result is Diff-free.
Graph lower(const ExprAst& ast, const SymbolContext& ctx, const NetworkBank& bank,
            const std::map<std::string, int>& bindings);

// Appends the derivative of root with respect to the named input and returns
// the new root id.
int differentiate(Graph& g, int root, const std::string& var);

// Copy of the subgraph reachable from root, ids remapped, root set.
Graph compact(const Graph& g, int root);

std::vector<double> evaluate(const Graph& g, const EvalBatch& batch);

struct GradResult {
  double loss = 0.0;                      // (1/n) sum of squared root values
  std::vector<std::vector<double>> grads; // by bank index; empty when a net is unused
};

// Gradient of the mean of squared root values with respect to every
// parameter of every referenced network.
GradResult param_gradient(const Graph& g, const EvalBatch& batch);

} // namespace pde_embed
