#include "pde_embed/jet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <set>

#include "pde_embed/activation.hpp"
#include "pde_embed/kernels.hpp"

namespace pde_embed {

namespace jet_detail {

namespace {
int basis_index(const std::vector<MultiIndex>& basis, const MultiIndex& m) {
  for (std::size_t i = 0; i < basis.size(); ++i)
    if (basis[i] == m) return int(i);
  return -1;
}
} // namespace

std::vector<MultiIndex> closed_basis(const std::vector<MultiIndex>& used) {
  std::set<std::array<std::uint8_t, 4>> s;
  s.insert({0, 0, 0, 0});
  for (const auto& u : used)
    for (std::uint8_t a = 0; a <= u.d[0]; ++a)
      for (std::uint8_t b = 0; b <= u.d[1]; ++b)
        for (std::uint8_t c = 0; c <= u.d[2]; ++c)
          for (std::uint8_t e = 0; e <= u.d[3]; ++e)
            s.insert({a, b, c, e});
  std::vector<MultiIndex> out;
  out.reserve(s.size());
  for (const auto& arr : s) out.push_back(MultiIndex{arr});
  std::sort(out.begin(), out.end(), [](const MultiIndex& x, const MultiIndex& y) {
    if (x.total() != y.total()) return x.total() < y.total();
    return x.d < y.d;
  });
  return out;
}

std::vector<std::vector<TapeTerm>> build_tapes(const std::vector<MultiIndex>& basis) {
  std::vector<std::vector<TapeTerm>> tapes(basis.size());
  for (std::size_t bi = 1; bi < basis.size(); ++bi) {
    const MultiIndex& alpha = basis[bi];
    std::vector<int> dirs;
    for (int s = 0; s < 4; ++s)
      for (int k = 0; k < alpha.d[s]; ++k) dirs.push_back(s);
    const int m = int(dirs.size());

    // Set partitions of the derivative multiset: each partition block is one
    // inner-jet factor, the block count picks the sigma order.
    std::map<std::pair<int, std::array<int, 3>>, double> acc;
    std::vector<int> assign(m, 0);
    std::function<void(int, int)> rec = [&](int pos, int nblocks) {
      if (pos == m) {
        std::vector<MultiIndex> block(nblocks);
        for (int p = 0; p < m; ++p) block[assign[p]].d[dirs[p]]++;
        std::array<int, 3> fac{-1, -1, -1};
        std::vector<int> idx(nblocks);
        for (int b = 0; b < nblocks; ++b) {
          idx[b] = basis_index(basis, block[b]);
          if (idx[b] < 0)
            throw GraphError(GraphError::Kind::Invalid, "basis is not downward closed");
        }
        std::sort(idx.begin(), idx.end());
        for (int b = 0; b < nblocks; ++b) fac[b] = idx[b];
        acc[{nblocks, fac}] += 1.0;
        return;
      }
      for (int b = 0; b <= nblocks; ++b) {
        assign[pos] = b;
        rec(pos + 1, b == nblocks ? nblocks + 1 : nblocks);
      }
    };
    rec(0, 0);

    for (const auto& [key, coeff] : acc) {
      TapeTerm t;
      t.sigma_order = key.first;
      t.nfactors = key.first;
      t.factors = key.second;
      t.coeff = coeff;
      tapes[bi].push_back(t);
    }
  }
  return tapes;
}

} // namespace jet_detail

namespace {
constexpr int kChunk = 128;
constexpr int kMaxBasis = 35; // multi-indices with total order <= 3 over 4 slots
} // namespace

struct Evaluator::Workspace {
  struct FamBuf {
    std::vector<double> out;    // (out_dim * ncoeff) x nb, basis-major rows
    std::vector<double> outadj;
    std::vector<std::vector<double>> H;   // input panels of each affine layer
    std::vector<std::vector<double>> Z;   // pre-activation jets of hidden layers
    std::vector<std::vector<double>> sig; // activation derivative tables
  };
  std::vector<std::vector<double>> vals;
  std::vector<std::vector<double>> adj;
  std::vector<FamBuf> fam;
  std::vector<double> panelA, panelB, panelC, wscratch;
};

Evaluator::Evaluator(const Graph& g, const NetworkBank& bank) : g_(g), bank_(bank) {
  if (g.root < 0 || g.root >= int(g.nodes.size()))
    throw GraphError(GraphError::Kind::Invalid, "graph has no root");
  std::vector<char> live(g.nodes.size(), 0);
  std::vector<int> stack{g.root};
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
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    if (live[i]) order_.push_back(int(i));

  net_ref_.assign(g.nodes.size(), {-1, -1});
  std::vector<std::vector<MultiIndex>> used;
  for (int id : order_) {
    const Node& n = g.nodes[id];
    if (n.op != Node::Op::Net) continue;
    if (n.net < 0 || n.net >= int(bank.nets.size()))
      throw GraphError(GraphError::Kind::UnboundNetwork, "network index out of range", id);
    int fi = -1;
    for (std::size_t f = 0; f < fams_.size(); ++f)
      if (fams_[f].net == n.net && fams_[f].in_nodes == n.net_in) {
        fi = int(f);
        break;
      }
    if (fi < 0) {
      Family f;
      f.net = n.net;
      f.arity = n.net_arity();
      f.in_nodes = n.net_in;
      for (int k = 0; k < f.arity; ++k) f.in_slots[k] = g.nodes[n.net_in[k]].input;
      fams_.push_back(f);
      used.emplace_back();
      fi = int(fams_.size()) - 1;
    }
    used[fi].push_back(n.deriv);
    net_ref_[id] = {fi, 0}; // basis offset resolved below
  }
  bool relu_warned = false;
  for (std::size_t f = 0; f < fams_.size(); ++f) {
    Family& fam = fams_[f];
    fam.basis = jet_detail::closed_basis(used[f]);
    if (int(fam.basis.size()) > kMaxBasis)
      throw GraphError(GraphError::Kind::UnsupportedDerivative, "derivative basis too large");
    fam.max_order = fam.basis.back().total();
    fam.tapes = jet_detail::build_tapes(fam.basis);
    const MlpParams& p = bank_.nets[fam.net].params;
    p.validate();
    if (fam.arity != p.spec.input_dim)
      throw GraphError(GraphError::Kind::Invalid, "network input arity mismatch");
    if (!relu_warned && p.spec.activation == ActivationKind::ReLU && fam.max_order >= 2) {
      std::fprintf(stderr,
                   "warning: relu network derivatives of order 2 and higher are identically "
                   "zero almost everywhere\n");
      relu_warned = true;
    }
  }
  for (int id : order_) {
    const Node& n = g.nodes[id];
    if (n.op != Node::Op::Net) continue;
    int fi = net_ref_[id][0];
    const Family& fam = fams_[fi];
    int bidx = -1;
    for (std::size_t b = 0; b < fam.basis.size(); ++b)
      if (fam.basis[b] == n.deriv) bidx = int(b);
    net_ref_[id] = {fi, n.out_index * int(fam.basis.size()) + bidx};
  }
}

void Evaluator::family_forward(const Family& f, const std::vector<const double*>& cols,
                               std::size_t c0, int nb, bool stash, Workspace& ws,
                               int fam_idx) const {
  const MlpParams& P = bank_.nets[f.net].params;
  const MlpSpec& S = P.spec;
  const int nc = int(f.basis.size());
  const int cp = nb * nc;
  const int L = S.hidden_layers;
  Workspace::FamBuf& fb = ws.fam[fam_idx];
  fb.H.resize(L + 1);
  fb.Z.resize(L);
  fb.sig.resize(L);

  fb.H[0].assign(std::size_t(S.input_dim) * cp, 0.0);
  double* H0 = fb.H[0].data();
  for (int p = 0; p < nb; ++p) {
    for (int b = 0; b < nc; ++b) {
      double* col = H0 + (std::size_t(p) * nc + b) * S.input_dim;
      if (b == 0) {
        for (int d = 0; d < S.input_dim; ++d)
          col[d] = (cols[f.in_slots[d]][c0 + p] - P.in_shift[d]) / P.in_scale[d];
      } else if (f.basis[b].total() == 1) {
        for (int d = 0; d < S.input_dim; ++d)
          if (f.basis[b].d[d] == 1) col[d] = 1.0 / P.in_scale[d];
      }
    }
  }

  const int so = stash ? std::min(f.max_order + 1, detail::kMaxActOrder) : f.max_order;
  for (int l = 0; l <= L; ++l) {
    const int fo = S.fan_out(l), fin = S.fan_in(l);
    std::vector<double>& Z = (l < L) ? fb.Z[l] : ws.panelA;
    Z.resize(std::size_t(fo) * cp);
    kernels::affine_forward(P.W(l), P.b(l), fb.H[l].data(), Z.data(), fo, fin, cp, nc);
    if (l < L) {
      fb.H[l + 1].resize(std::size_t(fo) * cp);
      double* Hn = fb.H[l + 1].data();
      if (stash) fb.sig[l].resize(std::size_t(fo) * nb * (so + 1));
      for (int p = 0; p < nb; ++p) {
        for (int r = 0; r < fo; ++r) {
          const double* zj = Z.data() + std::size_t(p) * nc * fo + r;
          double st[detail::kMaxActOrder + 1];
          detail::activation_table(S.activation, zj[0], so, st);
          if (stash)
            std::memcpy(fb.sig[l].data() + (std::size_t(p) * fo + r) * (so + 1), st,
                        sizeof(double) * (so + 1));
          double* hj = Hn + std::size_t(p) * nc * fo + r;
          hj[0] = st[0];
          for (int b = 1; b < nc; ++b) {
            double acc = 0.0;
            for (const auto& t : f.tapes[b]) {
              double prod = t.coeff * st[t.sigma_order];
              for (int i = 0; i < t.nfactors; ++i) prod *= zj[std::size_t(t.factors[i]) * fo];
              acc += prod;
            }
            hj[std::size_t(b) * fo] = acc;
          }
        }
      }
    } else {
      fb.out.resize(std::size_t(S.output_dim) * nc * nb);
      for (int r = 0; r < S.output_dim; ++r)
        for (int b = 0; b < nc; ++b) {
          double* o = fb.out.data() + (std::size_t(r) * nc + b) * nb;
          const double shift = b == 0 ? P.out_shift[r] : 0.0;
          for (int p = 0; p < nb; ++p)
            o[p] = P.out_scale[r] * Z[(std::size_t(p) * nc + b) * fo + r] + shift;
        }
    }
  }
}

void Evaluator::family_reverse(const Family& f, int nb, Workspace& ws, int fam_idx,
                               std::vector<std::vector<double>>& grads) const {
  const MlpParams& P = bank_.nets[f.net].params;
  const MlpSpec& S = P.spec;
  const int nc = int(f.basis.size());
  const int cp = nb * nc;
  const int L = S.hidden_layers;
  Workspace::FamBuf& fb = ws.fam[fam_idx];
  double* G = grads[f.net].data();
  const int so = std::min(f.max_order + 1, detail::kMaxActOrder);

  ws.panelA.resize(std::size_t(S.output_dim) * cp);
  for (int p = 0; p < nb; ++p)
    for (int b = 0; b < nc; ++b)
      for (int r = 0; r < S.output_dim; ++r)
        ws.panelA[(std::size_t(p) * nc + b) * S.output_dim + r] =
            P.out_scale[r] * fb.outadj[(std::size_t(r) * nc + b) * nb + p];

  for (int l = L; l >= 0; --l) {
    const int fo = S.fan_out(l), fin = S.fan_in(l);
    kernels::affine_backward_param(ws.panelA.data(), fb.H[l].data(), G + P.w_offset(l),
                                   G + P.b_offset(l), fo, fin, cp, nc);
    if (l == 0) break;
    ws.panelB.resize(std::size_t(fin) * cp);
    ws.wscratch.resize(std::size_t(fo) * fin);
    kernels::affine_backward_data(P.W(l), ws.panelA.data(), ws.panelB.data(), fo, fin, cp,
                                  ws.wscratch.data());
    // Reverse through the activation of hidden layer l-1.
    ws.panelC.assign(std::size_t(fin) * cp, 0.0);
    for (int p = 0; p < nb; ++p) {
      for (int r = 0; r < fin; ++r) {
        const double* st = fb.sig[l - 1].data() + (std::size_t(p) * fin + r) * (so + 1);
        const double* zj = fb.Z[l - 1].data() + std::size_t(p) * nc * fin + r;
        const double* ab = ws.panelB.data() + std::size_t(p) * nc * fin + r;
        double zb[kMaxBasis];
        for (int b = 0; b < nc; ++b) zb[b] = 0.0;
        zb[0] += ab[0] * st[1];
        for (int b = 1; b < nc; ++b) {
          const double A = ab[std::size_t(b) * fin];
          if (A == 0.0) continue;
          for (const auto& t : f.tapes[b]) {
            double zf[3];
            double prod = 1.0;
            for (int i = 0; i < t.nfactors; ++i) {
              zf[i] = zj[std::size_t(t.factors[i]) * fin];
              prod *= zf[i];
            }
            zb[0] += A * t.coeff * st[t.sigma_order + 1] * prod;
            for (int i = 0; i < t.nfactors; ++i) {
              double partial = t.coeff * st[t.sigma_order];
              for (int j = 0; j < t.nfactors; ++j)
                if (j != i) partial *= zf[j];
              zb[t.factors[i]] += A * partial;
            }
          }
        }
        double* out = ws.panelC.data() + std::size_t(p) * nc * fin + r;
        for (int b = 0; b < nc; ++b) out[std::size_t(b) * fin] = zb[b];
      }
    }
    std::swap(ws.panelA, ws.panelC);
  }
}

void Evaluator::node_forward(const EvalBatch& batch, const std::vector<const double*>& cols,
                             std::size_t c0, int nb, Workspace& ws) const {
  (void)batch;
  for (int id : order_) {
    const Node& n = g_.nodes[id];
    double* o = ws.vals[id].data();
    const double* va = n.a >= 0 ? ws.vals[n.a].data() : nullptr;
    const double* vb = n.b >= 0 ? ws.vals[n.b].data() : nullptr;
    switch (n.op) {
      case Node::Op::Input: std::memcpy(o, cols[n.input] + c0, sizeof(double) * nb); break;
      case Node::Op::Const:
        for (int p = 0; p < nb; ++p) o[p] = n.value;
        break;
      case Node::Op::Net: {
        const auto [fi, off] = net_ref_[id];
        std::memcpy(o, ws.fam[fi].out.data() + std::size_t(off) * nb, sizeof(double) * nb);
        break;
      }
      case Node::Op::Add: kernels::ew_add(va, vb, o, nb); break;
      case Node::Op::Sub: kernels::ew_sub(va, vb, o, nb); break;
      case Node::Op::Mul: kernels::ew_mul(va, vb, o, nb); break;
      case Node::Op::Div: kernels::ew_div(va, vb, o, nb); break;
      case Node::Op::Pow: kernels::ew_pow(va, n.value, o, nb); break;
      case Node::Op::Neg: kernels::ew_neg(va, o, nb); break;
      case Node::Op::Exp: kernels::ew_exp(va, o, nb); break;
      case Node::Op::Sin: kernels::ew_sin(va, o, nb); break;
      case Node::Op::Cos: kernels::ew_cos(va, o, nb); break;
      case Node::Op::Log: kernels::ew_log(va, o, nb); break;
    }
    const int bad = kernels::first_nonfinite(o, nb);
    if (bad >= 0)
      throw GraphError(GraphError::Kind::DomainError,
                       "non-finite value produced at node " + std::to_string(id), id,
                       long(c0 + bad));
  }
}

namespace {

std::vector<const double*> resolve_columns(const Graph& g, const EvalBatch& batch,
                                           const std::vector<int>& order) {
  std::vector<const double*> cols(g.input_names.size(), nullptr);
  for (int id : order) {
    const Node& n = g.nodes[id];
    if (n.op != Node::Op::Input) continue;
    const std::vector<double>* c = batch.find(g.input_names[n.input]);
    if (!c)
      throw GraphError(GraphError::Kind::Invalid,
                       "batch is missing column '" + g.input_names[n.input] + "'");
    cols[n.input] = c->data();
  }
  return cols;
}

} // namespace

std::vector<double> Evaluator::values(const EvalBatch& batch) const {
  batch.validate();
  const std::size_t n = batch.rows();
  std::vector<const double*> cols = resolve_columns(g_, batch, order_);
  std::vector<double> out(n);
  Workspace ws;
  ws.vals.resize(g_.nodes.size());
  for (int id : order_) ws.vals[id].assign(kChunk, 0.0);
  ws.fam.resize(fams_.size());
  for (std::size_t c0 = 0; c0 < n; c0 += kChunk) {
    const int nb = int(std::min<std::size_t>(kChunk, n - c0));
    for (std::size_t f = 0; f < fams_.size(); ++f)
      family_forward(fams_[f], cols, c0, nb, false, ws, int(f));
    node_forward(batch, cols, c0, nb, ws);
    std::memcpy(out.data() + c0, ws.vals[g_.root].data(), sizeof(double) * nb);
  }
  return out;
}

GradResult Evaluator::loss_and_grad(const EvalBatch& batch) const {
  batch.validate();
  const std::size_t n = batch.rows();
  GradResult res;
  res.grads.resize(bank_.nets.size());
  for (const auto& f : fams_)
    if (res.grads[f.net].empty())
      res.grads[f.net].assign(bank_.nets[f.net].params.flat.size(), 0.0);
  if (n == 0) return res;

  std::vector<const double*> cols = resolve_columns(g_, batch, order_);
  Workspace ws;
  ws.vals.resize(g_.nodes.size());
  ws.adj.resize(g_.nodes.size());
  for (int id : order_) {
    ws.vals[id].assign(kChunk, 0.0);
    ws.adj[id].assign(kChunk, 0.0);
  }
  ws.fam.resize(fams_.size());

  double total_sq = 0.0;
  for (std::size_t c0 = 0; c0 < n; c0 += kChunk) {
    const int nb = int(std::min<std::size_t>(kChunk, n - c0));
    for (std::size_t f = 0; f < fams_.size(); ++f)
      family_forward(fams_[f], cols, c0, nb, true, ws, int(f));
    node_forward(batch, cols, c0, nb, ws);
    const double* rv = ws.vals[g_.root].data();
    total_sq += kernels::block_sum_sq(rv, nb);

    for (int id : order_) std::memset(ws.adj[id].data(), 0, sizeof(double) * nb);
    for (std::size_t f = 0; f < fams_.size(); ++f) {
      const Family& fam = fams_[f];
      const MlpSpec& s = bank_.nets[fam.net].params.spec;
      ws.fam[f].outadj.assign(std::size_t(s.output_dim) * fam.basis.size() * nb, 0.0);
    }
    double* radj = ws.adj[g_.root].data();
    const double inv = 2.0 / double(n);
    for (int p = 0; p < nb; ++p) radj[p] = inv * rv[p];

    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
      const int id = *it;
      const Node& nd = g_.nodes[id];
      const double* A = ws.adj[id].data();
      double* aa = nd.a >= 0 ? ws.adj[nd.a].data() : nullptr;
      double* ab = nd.b >= 0 ? ws.adj[nd.b].data() : nullptr;
      const double* va = nd.a >= 0 ? ws.vals[nd.a].data() : nullptr;
      const double* vb = nd.b >= 0 ? ws.vals[nd.b].data() : nullptr;
      const double* vo = ws.vals[id].data();
      switch (nd.op) {
        case Node::Op::Input:
        case Node::Op::Const: break;
        case Node::Op::Net: {
          const auto [fi, off] = net_ref_[id];
          double* fa = ws.fam[fi].outadj.data() + std::size_t(off) * nb;
          for (int p = 0; p < nb; ++p) fa[p] += A[p];
          break;
        }
        case Node::Op::Add:
          for (int p = 0; p < nb; ++p) aa[p] += A[p];
          for (int p = 0; p < nb; ++p) ab[p] += A[p];
          break;
        case Node::Op::Sub:
          for (int p = 0; p < nb; ++p) aa[p] += A[p];
          for (int p = 0; p < nb; ++p) ab[p] -= A[p];
          break;
        case Node::Op::Mul:
          for (int p = 0; p < nb; ++p) aa[p] += A[p] * vb[p];
          for (int p = 0; p < nb; ++p) ab[p] += A[p] * va[p];
          break;
        case Node::Op::Div:
          for (int p = 0; p < nb; ++p) aa[p] += A[p] / vb[p];
          for (int p = 0; p < nb; ++p) ab[p] -= A[p] * vo[p] / vb[p];
          break;
        case Node::Op::Pow:
          for (int p = 0; p < nb; ++p)
            aa[p] += A[p] * nd.value * std::pow(va[p], nd.value - 1.0);
          break;
        case Node::Op::Neg:
          for (int p = 0; p < nb; ++p) aa[p] -= A[p];
          break;
        case Node::Op::Exp:
          for (int p = 0; p < nb; ++p) aa[p] += A[p] * vo[p];
          break;
        case Node::Op::Sin:
          for (int p = 0; p < nb; ++p) aa[p] += A[p] * std::cos(va[p]);
          break;
        case Node::Op::Cos:
          for (int p = 0; p < nb; ++p) aa[p] -= A[p] * std::sin(va[p]);
          break;
        case Node::Op::Log:
          for (int p = 0; p < nb; ++p) aa[p] += A[p] / va[p];
          break;
      }
    }
    for (std::size_t f = 0; f < fams_.size(); ++f)
      family_reverse(fams_[f], nb, ws, int(f), res.grads);
  }
  res.loss = total_sq / double(n);
  return res;
}

std::vector<double> evaluate(const Graph& g, const EvalBatch& batch) {
  static const NetworkBank kEmpty;
  const NetworkBank* bank = batch.bank ? batch.bank : g.bank();
  Evaluator ev(g, bank ? *bank : kEmpty);
  return ev.values(batch);
}

GradResult param_gradient(const Graph& g, const EvalBatch& batch) {
  static const NetworkBank kEmpty;
  const NetworkBank* bank = batch.bank ? batch.bank : g.bank();
  Evaluator ev(g, bank ? *bank : kEmpty);
  return ev.loss_and_grad(batch);
}

} // namespace pde_embed
