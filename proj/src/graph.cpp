#include "pde_embed/graph.hpp"

#include <bit>
#include <cmath>
#include <set>

namespace pde_embed {

bool Node::same_expr(const Node& o) const {
  return op == o.op && a == o.a && b == o.b && value == o.value && input == o.input &&
         net == o.net && out_index == o.out_index && net_in == o.net_in && deriv == o.deriv;
}

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

std::uint64_t node_hash(const Node& n) {
  std::uint64_t h = std::uint64_t(n.op);
  h = mix(h, std::uint64_t(std::uint32_t(n.a)));
  h = mix(h, std::uint64_t(std::uint32_t(n.b)));
  h = mix(h, std::bit_cast<std::uint64_t>(n.value));
  h = mix(h, std::uint64_t(std::uint16_t(n.input)));
  h = mix(h, std::uint64_t(std::uint16_t(n.net)));
  h = mix(h, std::uint64_t(std::uint16_t(n.out_index)));
  for (int i = 0; i < 4; ++i) h = mix(h, std::uint64_t(std::uint32_t(n.net_in[i])));
  for (int i = 0; i < 4; ++i) h = mix(h, n.deriv.d[i]);
  return h;
}

bool is_unary(Node::Op op) {
  switch (op) {
    case Node::Op::Neg:
    case Node::Op::Exp:
    case Node::Op::Sin:
    case Node::Op::Cos:
    case Node::Op::Log: return true;
    default: return false;
  }
}

} // namespace

int Graph::intern(Node n) {
  const std::uint64_t h = node_hash(n);
  auto& bucket = intern_[h];
  for (int id : bucket)
    if (nodes[id].same_expr(n)) return id;
  nodes.push_back(n);
  bucket.push_back(int(nodes.size()) - 1);
  return int(nodes.size()) - 1;
}

int Graph::input_slot(const std::string& name) const {
  for (std::size_t i = 0; i < input_names.size(); ++i)
    if (input_names[i] == name) return int(i);
  return -1;
}

int Graph::add_input(const std::string& name) {
  int slot = input_slot(name);
  if (slot < 0) {
    input_names.push_back(name);
    slot = int(input_names.size()) - 1;
    if (slot > 255) throw GraphError(GraphError::Kind::Invalid, "too many graph inputs");
  }
  Node n;
  n.op = Node::Op::Input;
  n.input = std::int16_t(slot);
  return intern(n);
}

int Graph::add_const(double v) {
  Node n;
  n.op = Node::Op::Const;
  n.value = v;
  return intern(n);
}

int Graph::add(Node::Op op, int a, int b) {
  using Op = Node::Op;
  if (a < 0 || a >= int(nodes.size()) || (!is_unary(op) && op != Op::Pow && b < 0))
    throw GraphError(GraphError::Kind::Invalid, "bad operand id");
  auto cval = [&](int id, double& v) {
    if (id >= 0 && nodes[id].op == Op::Const) {
      v = nodes[id].value;
      return true;
    }
    return false;
  };
  double ca = 0, cb = 0;
  const bool ia = cval(a, ca);
  const bool ib = b >= 0 && cval(b, cb);
  auto fold = [&](double v) { return std::isfinite(v) ? add_const(v) : -1; };
  int f = -1;
  switch (op) {
    case Op::Add:
      if (ia && ib && (f = fold(ca + cb)) >= 0) return f;
      if (ia && ca == 0.0) return b;
      if (ib && cb == 0.0) return a;
      if (a > b) std::swap(a, b);
      break;
    case Op::Sub:
      if (ia && ib && (f = fold(ca - cb)) >= 0) return f;
      if (ib && cb == 0.0) return a;
      if (ia && ca == 0.0) return add(Op::Neg, b);
      if (a == b) return add_const(0.0);
      break;
    case Op::Mul:
      if (ia && ib && (f = fold(ca * cb)) >= 0) return f;
      if ((ia && ca == 0.0) || (ib && cb == 0.0)) return add_const(0.0);
      if (ia && ca == 1.0) return b;
      if (ib && cb == 1.0) return a;
      if (a > b) std::swap(a, b);
      break;
    case Op::Div:
      if (ia && ib && cb != 0.0 && (f = fold(ca / cb)) >= 0) return f;
      if (ib && cb == 1.0) return a;
      if (ia && ca == 0.0) return add_const(0.0);
      break;
    case Op::Neg:
      if (ia) return add_const(-ca);
      if (nodes[a].op == Op::Neg) return nodes[a].a;
      break;
    case Op::Exp:
      if (ia && (f = fold(std::exp(ca))) >= 0) return f;
      break;
    case Op::Sin:
      if (ia && (f = fold(std::sin(ca))) >= 0) return f;
      break;
    case Op::Cos:
      if (ia && (f = fold(std::cos(ca))) >= 0) return f;
      break;
    case Op::Log:
      if (ia && ca > 0.0 && (f = fold(std::log(ca))) >= 0) return f;
      break;
    case Op::Pow:
      throw GraphError(GraphError::Kind::Invalid, "use add_pow for Pow nodes");
    default:
      throw GraphError(GraphError::Kind::Invalid, "add() cannot build leaf nodes");
  }
  Node n;
  n.op = op;
  n.a = a;
  n.b = is_unary(op) ? -1 : b;
  return intern(n);
}

int Graph::add_pow(int a, double exponent) {
  if (a < 0 || a >= int(nodes.size()))
    throw GraphError(GraphError::Kind::Invalid, "bad operand id");
  if (!std::isfinite(exponent))
    throw GraphError(GraphError::Kind::Invalid, "non-finite exponent");
  if (exponent == 0.0) return add_const(1.0);
  if (exponent == 1.0) return a;
  if (nodes[a].op == Node::Op::Const) {
    double v = std::pow(nodes[a].value, exponent);
    if (std::isfinite(v)) return add_const(v);
  }
  Node n;
  n.op = Node::Op::Pow;
  n.a = a;
  n.value = exponent;
  return intern(n);
}

int Graph::add_net(int net, const std::vector<int>& inputs, int out_index, MultiIndex deriv) {
  if (!bank_) throw GraphError(GraphError::Kind::Invalid, "graph has no network bank");
  if (net < 0 || net >= int(bank_->nets.size()))
    throw GraphError(GraphError::Kind::UnboundNetwork, "network index out of range");
  const MlpSpec& spec = bank_->nets[net].params.spec;
  if (int(inputs.size()) != spec.input_dim)
    throw GraphError(GraphError::Kind::Invalid,
                     "network '" + bank_->nets[net].name + "' expects " +
                         std::to_string(spec.input_dim) + " inputs, got " +
                         std::to_string(inputs.size()));
  if (inputs.size() > 4)
    throw GraphError(GraphError::Kind::Invalid, "network applications take at most 4 inputs");
  if (out_index < 0 || out_index >= spec.output_dim)
    throw GraphError(GraphError::Kind::Invalid, "network output index out of range");
  if (deriv.total() > kMaxDerivOrder)
    throw GraphError(GraphError::Kind::UnsupportedDerivative,
                     "network derivatives supported up to order " +
                         std::to_string(kMaxDerivOrder));
  Node n;
  n.op = Node::Op::Net;
  n.net = std::int16_t(net);
  n.out_index = std::int16_t(out_index);
  n.deriv = deriv;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    int id = inputs[i];
    if (id < 0 || id >= int(nodes.size()) || nodes[id].op != Node::Op::Input)
      throw GraphError(GraphError::Kind::Invalid,
                       "network applications bind input variables directly");
    n.net_in[i] = id;
  }
  return intern(n);
}

int Graph::derivative(int id, int slot) {
  if (id < 0 || id >= int(nodes.size()))
    throw GraphError(GraphError::Kind::Invalid, "bad node id");
  if (slot < 0 || slot >= int(input_names.size()))
    throw GraphError(GraphError::Kind::NotAnInput, "bad input slot");
  const std::uint64_t key = (std::uint64_t(std::uint32_t(id)) << 8) | std::uint8_t(slot);
  if (auto it = dcache_.find(key); it != dcache_.end()) return it->second;

  const Node n = nodes[id]; // copy: appends may reallocate
  using Op = Node::Op;
  int r = -1;
  switch (n.op) {
    case Op::Input: r = add_const(n.input == slot ? 1.0 : 0.0); break;
    case Op::Const: r = add_const(0.0); break;
    case Op::Net: {
      r = add_const(0.0);
      const int arity = n.net_arity();
      for (int j = 0; j < arity; ++j) {
        if (nodes[n.net_in[j]].input != slot) continue;
        MultiIndex m = n.deriv.bump(j);
        if (m.total() > kMaxDerivOrder)
          throw GraphError(GraphError::Kind::UnsupportedDerivative,
                           "network derivatives supported up to order " +
                               std::to_string(kMaxDerivOrder),
                           id);
        std::vector<int> ins(n.net_in.begin(), n.net_in.begin() + arity);
        r = add(Op::Add, r, add_net(n.net, ins, n.out_index, m));
      }
      break;
    }
    case Op::Add: r = add(Op::Add, derivative(n.a, slot), derivative(n.b, slot)); break;
    case Op::Sub: r = add(Op::Sub, derivative(n.a, slot), derivative(n.b, slot)); break;
    case Op::Mul: {
      int da = derivative(n.a, slot), db = derivative(n.b, slot);
      r = add(Op::Add, add(Op::Mul, da, n.b), add(Op::Mul, n.a, db));
      break;
    }
    case Op::Div: {
      // d(a/b) = da/b - (a/b)*db/b, written against the existing quotient
      // node so repeated differentiation shares structure.
      int da = derivative(n.a, slot), db = derivative(n.b, slot);
      r = add(Op::Sub, add(Op::Div, da, n.b), add(Op::Div, add(Op::Mul, id, db), n.b));
      break;
    }
    case Op::Pow: {
      int da = derivative(n.a, slot);
      r = add(Op::Mul, add(Op::Mul, add_const(n.value), add_pow(n.a, n.value - 1.0)), da);
      break;
    }
    case Op::Neg: r = add(Op::Neg, derivative(n.a, slot)); break;
    case Op::Exp: r = add(Op::Mul, id, derivative(n.a, slot)); break;
    case Op::Sin: r = add(Op::Mul, add(Op::Cos, n.a), derivative(n.a, slot)); break;
    case Op::Cos: r = add(Op::Neg, add(Op::Mul, add(Op::Sin, n.a), derivative(n.a, slot))); break;
    case Op::Log: r = add(Op::Div, derivative(n.a, slot), n.a); break;
  }
  dcache_[key] = r;
  return r;
}

void EvalBatch::add(std::string name, std::vector<double> values) {
  for (const auto& [n, _] : columns)
    if (n == name) throw GraphError(GraphError::Kind::Invalid, "duplicate column '" + name + "'");
  columns.emplace_back(std::move(name), std::move(values));
}

const std::vector<double>* EvalBatch::find(const std::string& name) const {
  for (const auto& [n, v] : columns)
    if (n == name) return &v;
  return nullptr;
}

std::size_t EvalBatch::rows() const { return columns.empty() ? 0 : columns.front().second.size(); }

void EvalBatch::validate() const {
  const std::size_t n = rows();
  for (const auto& [name, v] : columns) {
    if (v.size() != n)
      throw GraphError(GraphError::Kind::Invalid, "column '" + name + "' length mismatch");
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!std::isfinite(v[i]))
        throw GraphError(GraphError::Kind::Invalid,
                         "column '" + name + "' has a non-finite value", -1, long(i));
  }
}

int differentiate(Graph& g, int root, const std::string& var) {
  if (root < 0 || root >= int(g.nodes.size()))
    throw GraphError(GraphError::Kind::Invalid, "bad root id");
  int slot = g.input_slot(var);
  if (slot < 0)
    throw GraphError(GraphError::Kind::NotAnInput, "'" + var + "' is not a graph input");
  return g.derivative(root, slot);
}

namespace {

struct Lowerer {
  Graph& g;
  const SymbolContext& ctx;
  const std::map<std::string, int>& bindings;
  std::set<std::string> in_progress;

  bool is_independent(const std::string& n) const {
    for (const auto& v : ctx.independent_vars)
      if (v == n) return true;
    return false;
  }
  bool is_primary(const std::string& n) const {
    for (const auto& v : ctx.primary_vars)
      if (v == n) return true;
    return false;
  }

  int bound_net(const std::string& name) const {
    auto it = bindings.find(name);
    if (it == bindings.end())
      throw GraphError(GraphError::Kind::UnboundNetwork,
                       "no network bound for '" + name + "'");
    return it->second;
  }

  int symbol(const std::string& name) {
    if (is_independent(name)) return g.add_input(name);
    if (is_primary(name)) {
      std::vector<int> ins;
      for (const auto& v : ctx.independent_vars) ins.push_back(g.add_input(v));
      return g.add_net(bound_net(name), ins);
    }
    auto cit = ctx.coefficients.find(name);
    if (cit == ctx.coefficients.end())
      throw GraphError(GraphError::Kind::Invalid, "unresolved symbol '" + name + "'");
    const CoefficientDef& def = cit->second;
    switch (def.kind) {
      case CoefficientDef::Kind::Constant: return g.add_const(def.value);
      case CoefficientDef::Kind::FittedField: {
        std::vector<int> ins;
        for (const auto& v : def.args) ins.push_back(g.add_input(v));
        return g.add_net(bound_net(name), ins);
      }
      case CoefficientDef::Kind::ClosedForm: {
        if (!in_progress.insert(name).second)
          throw GraphError(GraphError::Kind::Invalid,
                           "closed-form coefficient cycle through '" + name + "'");
        AstPtr ast = parse(def.source, ctx);
        int id = lower_ast(*ast);
        in_progress.erase(name);
        return id;
      }
    }
    throw GraphError(GraphError::Kind::Invalid, "unreachable coefficient kind");
  }

  int lower_ast(const ExprAst& a) {
    using Op = Node::Op;
    switch (a.kind) {
      case ExprAst::Kind::Const: return g.add_const(a.value);
      case ExprAst::Kind::Symbol: return symbol(a.name);
      case ExprAst::Kind::Neg: return g.add(Op::Neg, lower_ast(*a.a));
      case ExprAst::Kind::Binary: {
        int lhs = lower_ast(*a.a);
        int rhs = lower_ast(*a.b);
        switch (a.op) {
          case '+': return g.add(Op::Add, lhs, rhs);
          case '-': return g.add(Op::Sub, lhs, rhs);
          case '*': return g.add(Op::Mul, lhs, rhs);
          case '/': return g.add(Op::Div, lhs, rhs);
          case '^':
            if (g.nodes[rhs].op == Op::Const) return g.add_pow(lhs, g.nodes[rhs].value);
            // General exponent: a^b = exp(b * log a).
            return g.add(Op::Exp, g.add(Op::Mul, rhs, g.add(Op::Log, lhs)));
        }
        throw GraphError(GraphError::Kind::Invalid, "unknown binary op");
      }
      case ExprAst::Kind::Diff: {
        int id = lower_ast(*a.a);
        int slot = g.input_slot(a.name);
        if (slot < 0)
          throw GraphError(GraphError::Kind::NotAnInput,
                           "'" + a.name + "' is not an independent variable");
        for (int k = 0; k < a.order; ++k) id = g.derivative(id, slot);
        return id;
      }
      case ExprAst::Kind::Func: {
        int arg = lower_ast(*a.a);
        if (a.name == "exp") return g.add(Op::Exp, arg);
        if (a.name == "sin") return g.add(Op::Sin, arg);
        if (a.name == "cos") return g.add(Op::Cos, arg);
        if (a.name == "log") return g.add(Op::Log, arg);
        throw GraphError(GraphError::Kind::Invalid, "unknown function '" + a.name + "'");
      }
    }
    throw GraphError(GraphError::Kind::Invalid, "unreachable ast kind");
  }
};

} // namespace

Graph lower(const ExprAst& ast, const SymbolContext& ctx, const NetworkBank& bank,
            const std::map<std::string, int>& bindings) {
  ctx.validate();
  Graph g(&bank);
  for (const auto& v : ctx.independent_vars) g.add_input(v);
  Lowerer lo{g, ctx, bindings, {}};
  int root = lo.lower_ast(ast);
  return compact(g, root);
}

Graph compact(const Graph& g, int root) {
  if (root < 0 || root >= int(g.nodes.size()))
    throw GraphError(GraphError::Kind::Invalid, "bad root id");
  std::vector<char> live(g.nodes.size(), 0);
  std::vector<int> stack{root};
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    if (live[id]) continue;
    live[id] = 1;
    const Node& n = g.nodes[id];
    if (n.a >= 0) stack.push_back(n.a);
    if (n.b >= 0) stack.push_back(n.b);
    for (int i = 0; i < n.net_arity(); ++i) stack.push_back(n.net_in[i]);
  }
  Graph out(g.bank_);
  out.input_names = g.input_names;
  std::vector<int> remap(g.nodes.size(), -1);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (!live[i]) continue;
    Node n = g.nodes[i];
    if (n.a >= 0) n.a = remap[n.a];
    if (n.b >= 0) n.b = remap[n.b];
    for (int k = 0; k < 4; ++k)
      if (n.net_in[k] >= 0) n.net_in[k] = remap[n.net_in[k]];
    out.nodes.push_back(n);
    int nid = int(out.nodes.size()) - 1;
    remap[i] = nid;
    out.intern_[node_hash(n)].push_back(nid);
  }
  out.root = remap[root];
  return out;
}

} // namespace pde_embed
