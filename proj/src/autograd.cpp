#include "aste/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "aste/error.hpp"
#include "aste/kernels.hpp"

namespace aste::nn {

Parameter& ParamStore::add(const std::string& name, Array init) {
  check(find(name) == nullptr, "duplicate parameter name: ", name);
  params_.push_back(std::make_unique<Parameter>(name, std::move(init)));
  return *params_.back();
}

Parameter& ParamStore::get(const std::string& name) {
  Parameter* p = find(name);
  check(p != nullptr, "unknown parameter: ", name);
  return *p;
}

const Parameter& ParamStore::get(const std::string& name) const {
  return const_cast<ParamStore*>(this)->get(name);
}

Parameter* ParamStore::find(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

std::size_t ParamStore::total_values() const {
  std::size_t n = 0;
  for (auto& p : params_) n += p->value.size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& p : params_) p->zero_grad();
}

namespace {

std::shared_ptr<Node> make_node(Array value, std::vector<std::shared_ptr<Node>> parents,
                                std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  for (auto& p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  if (n->requires_grad) n->backprop = std::move(backprop);
  return n;
}

void ensure_grad(Node& n) {
  if (n.grad.size() != n.value.size()) n.grad = Array::zeros_like(n.value);
}

}  // namespace

Var leaf(Parameter& p) {
  auto n = std::make_shared<Node>();
  n->value = p.value;
  n->requires_grad = true;
  n->param = &p;
  n->backprop = [](Node& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) self.param->grad[i] += self.grad[i];
  };
  return Var(n);
}

Var constant(Array v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  return Var(n);
}

Var matmul(const Var& a, const Var& b) {
  const int m = a.rows(), k = a.cols(), n = b.cols();
  check(k == b.rows(), "matmul: inner dims ", k, " vs ", b.rows());
  Array out = Array::zeros({m, n});
  kernels::matmul_nn(a.value().data(), b.value().data(), out.data(), m, k, n);
  auto an = a.node(), bn = b.node();
  return Var(make_node(std::move(out), {an, bn}, [m, k, n, an, bn](Node& self) {
    if (an->requires_grad) {
      ensure_grad(*an);
      Array da = Array::zeros({m, k});
      kernels::matmul_nt(self.grad.data(), bn->value.data(), da.data(), m, n, k);
      for (std::size_t i = 0; i < da.size(); ++i) an->grad[i] += da[i];
    }
    if (bn->requires_grad) {
      ensure_grad(*bn);
      Array db = Array::zeros({k, n});
      kernels::matmul_tn(an->value.data(), self.grad.data(), db.data(), m, k, n);
      for (std::size_t i = 0; i < db.size(); ++i) bn->grad[i] += db[i];
    }
  }));
}

Var matmul_nt(const Var& a, const Var& b) {
  const int m = a.rows(), k = a.cols(), n = b.rows();
  check(k == b.cols(), "matmul_nt: inner dims ", k, " vs ", b.cols());
  Array out = Array::zeros({m, n});
  kernels::matmul_nt(a.value().data(), b.value().data(), out.data(), m, k, n);
  auto an = a.node(), bn = b.node();
  return Var(make_node(std::move(out), {an, bn}, [m, k, n, an, bn](Node& self) {
    if (an->requires_grad) {
      ensure_grad(*an);
      Array da = Array::zeros({m, k});
      kernels::matmul_nn(self.grad.data(), bn->value.data(), da.data(), m, n, k);
      for (std::size_t i = 0; i < da.size(); ++i) an->grad[i] += da[i];
    }
    if (bn->requires_grad) {
      ensure_grad(*bn);
      Array db = Array::zeros({n, k});
      kernels::matmul_tn(self.grad.data(), an->value.data(), db.data(), m, n, k);
      for (std::size_t i = 0; i < db.size(); ++i) bn->grad[i] += db[i];
    }
  }));
}

Var add(const Var& a, const Var& b) {
  check(a.value().same_shape(b.value()), "add: shape mismatch");
  Array out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  auto an = a.node(), bn = b.node();
  return Var(make_node(std::move(out), {an, bn}, [an, bn](Node& self) {
    for (auto& pn : {an, bn}) {
      if (!pn->requires_grad) continue;
      ensure_grad(*pn);
      for (std::size_t i = 0; i < self.grad.size(); ++i) pn->grad[i] += self.grad[i];
    }
  }));
}

Var add_bias(const Var& a, const Var& bias) {
  const int r = a.rows(), c = a.cols();
  check(static_cast<int>(bias.value().size()) == c, "add_bias: bias length ", bias.value().size(),
        " vs cols ", c);
  Array out = a.value();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(i, j) += bias.value()[static_cast<std::size_t>(j)];
  auto an = a.node(), bn = bias.node();
  return Var(make_node(std::move(out), {an, bn}, [r, c, an, bn](Node& self) {
    if (an->requires_grad) {
      ensure_grad(*an);
      for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
    }
    if (bn->requires_grad) {
      ensure_grad(*bn);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) bn->grad[static_cast<std::size_t>(j)] += self.grad.at(i, j);
    }
  }));
}

Var scale(const Var& a, double s) {
  Array out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  auto an = a.node();
  return Var(make_node(std::move(out), {an}, [s, an](Node& self) {
    if (!an->requires_grad) return;
    ensure_grad(*an);
    for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += s * self.grad[i];
  }));
}

Var gather_rows(const Var& table, std::vector<int> ids) {
  const int rows = table.rows(), cols = table.cols();
  for (int id : ids) check(id >= 0 && id < rows, "gather_rows: id ", id, " out of range [0,", rows, ")");
  Array out = Array::zeros({static_cast<int>(ids.size()), cols});
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (int j = 0; j < cols; ++j) out.at(static_cast<int>(i), j) = table.value().at(ids[i], j);
  auto tn = table.node();
  return Var(make_node(std::move(out), {tn}, [ids = std::move(ids), cols, tn](Node& self) {
    if (!tn->requires_grad) return;
    ensure_grad(*tn);
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < cols; ++j) tn->grad.at(ids[i], j) += self.grad.at(static_cast<int>(i), j);
  }));
}

Var slice_cols(const Var& a, int start, int len) {
  const int r = a.rows(), c = a.cols();
  check(start >= 0 && len > 0 && start + len <= c, "slice_cols: [", start, ",", start + len,
        ") out of ", c);
  Array out = Array::zeros({r, len});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < len; ++j) out.at(i, j) = a.value().at(i, start + j);
  auto an = a.node();
  return Var(make_node(std::move(out), {an}, [r, len, start, an](Node& self) {
    if (!an->requires_grad) return;
    ensure_grad(*an);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < len; ++j) an->grad.at(i, start + j) += self.grad.at(i, j);
  }));
}

Var concat_cols(const Var& a, const Var& b) {
  const int r = a.rows();
  check(r == b.rows(), "concat_cols: row mismatch ", r, " vs ", b.rows());
  const int ca = a.cols(), cb = b.cols();
  Array out = Array::zeros({r, ca + cb});
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < ca; ++j) out.at(i, j) = a.value().at(i, j);
    for (int j = 0; j < cb; ++j) out.at(i, ca + j) = b.value().at(i, j);
  }
  auto an = a.node(), bn = b.node();
  return Var(make_node(std::move(out), {an, bn}, [r, ca, cb, an, bn](Node& self) {
    if (an->requires_grad) {
      ensure_grad(*an);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < ca; ++j) an->grad.at(i, j) += self.grad.at(i, j);
    }
    if (bn->requires_grad) {
      ensure_grad(*bn);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < cb; ++j) bn->grad.at(i, j) += self.grad.at(i, ca + j);
    }
  }));
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const int r = x.rows(), c = x.cols();
  check(static_cast<int>(gamma.value().size()) == c && static_cast<int>(beta.value().size()) == c,
        "layer_norm: gamma/beta length vs cols ", c);
  Array out = Array::zeros({r, c});
  Array xhat = Array::zeros({r, c});
  std::vector<double> inv_std(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) {
    double mean = 0.0;
    for (int j = 0; j < c; ++j) mean += x.value().at(i, j);
    mean /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) {
      const double d = x.value().at(i, j) - mean;
      var += d * d;
    }
    var /= c;
    const double istd = 1.0 / std::sqrt(var + eps);
    inv_std[static_cast<std::size_t>(i)] = istd;
    for (int j = 0; j < c; ++j) {
      const double h = (x.value().at(i, j) - mean) * istd;
      xhat.at(i, j) = h;
      out.at(i, j) = h * gamma.value()[static_cast<std::size_t>(j)] +
                     beta.value()[static_cast<std::size_t>(j)];
    }
  }
  auto xn = x.node(), gn = gamma.node(), bn = beta.node();
  return Var(make_node(
      std::move(out), {xn, gn, bn},
      [r, c, xn, gn, bn, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
        if (gn->requires_grad) {
          ensure_grad(*gn);
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j)
              gn->grad[static_cast<std::size_t>(j)] += self.grad.at(i, j) * xhat.at(i, j);
        }
        if (bn->requires_grad) {
          ensure_grad(*bn);
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) bn->grad[static_cast<std::size_t>(j)] += self.grad.at(i, j);
        }
        if (xn->requires_grad) {
          ensure_grad(*xn);
          for (int i = 0; i < r; ++i) {
            // dL/dxhat_j = dout_j * gamma_j; then the standard layernorm
            // pullback through mean and variance.
            double sum_dh = 0.0, sum_dh_h = 0.0;
            for (int j = 0; j < c; ++j) {
              const double dh = self.grad.at(i, j) * gn->value[static_cast<std::size_t>(j)];
              sum_dh += dh;
              sum_dh_h += dh * xhat.at(i, j);
            }
            const double istd = inv_std[static_cast<std::size_t>(i)];
            for (int j = 0; j < c; ++j) {
              const double dh = self.grad.at(i, j) * gn->value[static_cast<std::size_t>(j)];
              xn->grad.at(i, j) +=
                  istd * (dh - sum_dh / c - xhat.at(i, j) * sum_dh_h / c);
            }
          }
        }
      }));
}

Var gelu(const Var& x) {
  Array out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = out[i];
    out[i] = 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2));
  }
  auto xn = x.node();
  return Var(make_node(std::move(out), {xn}, [xn](Node& self) {
    if (!xn->requires_grad) return;
    ensure_grad(*xn);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double v = xn->value[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
      const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * M_PI);
      xn->grad[i] += self.grad[i] * (cdf + v * pdf);
    }
  }));
}

Var masked_softmax(const Var& scores, const BoolMatrix& mask) {
  const int r = scores.rows(), c = scores.cols();
  check(mask.rows == r && mask.cols == c, "masked_softmax: mask shape ", mask.rows, "x", mask.cols,
        " vs scores ", r, "x", c);
  for (int i = 0; i < r; ++i) {
    bool any = false;
    for (int j = 0; j < c; ++j)
      if (mask.at(i, j)) { any = true; break; }
    check(any, "masked_softmax: row ", i, " has an empty attention field");
  }
  Array out = Array::zeros({r, c});
  kernels::softmax_rows_masked(scores.value().data(), mask.cells.data(), out.data(), r, c);
  auto sn = scores.node();
  return Var(make_node(std::move(out), {sn}, [r, c, sn](Node& self) {
    if (!sn->requires_grad) return;
    ensure_grad(*sn);
    // dS = P ⊙ (dP − Σ_j dP_j P_j); masked cells have P = 0 so stay 0.
    for (int i = 0; i < r; ++i) {
      double dot = 0.0;
      for (int j = 0; j < c; ++j) dot += self.grad.at(i, j) * self.value.at(i, j);
      for (int j = 0; j < c; ++j)
        sn->grad.at(i, j) += self.value.at(i, j) * (self.grad.at(i, j) - dot);
    }
  }));
}

Var softmax_rows(const Var& scores) {
  return masked_softmax(scores, BoolMatrix(scores.rows(), scores.cols(), true));
}

Var dropout(const Var& x, double rate, Rng& rng, bool train) {
  if (!train || rate <= 0.0) return x;
  check(rate < 1.0, "dropout: rate must be < 1");
  const double keep = 1.0 - rate;
  std::vector<std::uint8_t> kept(x.value().size());
  Array out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    kept[i] = rng.uniform() < keep ? 1 : 0;
    out[i] = kept[i] ? out[i] / keep : 0.0;
  }
  auto xn = x.node();
  return Var(make_node(std::move(out), {xn}, [keep, kept = std::move(kept), xn](Node& self) {
    if (!xn->requires_grad) return;
    ensure_grad(*xn);
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (kept[i]) xn->grad[i] += self.grad[i] / keep;
  }));
}

Var cross_entropy(const Var& dist, const Array& onehot) {
  check(dist.value().size() == onehot.size(), "cross_entropy: length mismatch");
  int gold = -1;
  for (std::size_t i = 0; i < onehot.size(); ++i) {
    if (onehot[i] == 1.0) {
      check(gold < 0, "cross_entropy: gold vector is not one-hot");
      gold = static_cast<int>(i);
    } else {
      check(onehot[i] == 0.0, "cross_entropy: gold vector is not one-hot");
    }
  }
  check(gold >= 0, "cross_entropy: gold vector is not one-hot");
  const double p = std::max(dist.value()[static_cast<std::size_t>(gold)], kProbFloor);
  auto dn = dist.node();
  return Var(make_node(Array::scalar(-std::log(p)), {dn}, [gold, dn](Node& self) {
    if (!dn->requires_grad) return;
    ensure_grad(*dn);
    // Constant in the clamped region, so no gradient flows there.
    const double pv = dn->value[static_cast<std::size_t>(gold)];
    if (pv > kProbFloor) dn->grad[static_cast<std::size_t>(gold)] -= self.grad[0] / pv;
  }));
}

Var cross_entropy_rows(const Var& probs, const std::vector<int>& gold) {
  const int r = probs.rows(), c = probs.cols();
  check(static_cast<int>(gold.size()) == r, "cross_entropy_rows: ", gold.size(), " labels for ", r,
        " rows");
  double total = 0.0;
  for (int i = 0; i < r; ++i) {
    check(gold[static_cast<std::size_t>(i)] >= 0 && gold[static_cast<std::size_t>(i)] < c,
          "cross_entropy_rows: label out of range");
    total += -std::log(std::max(probs.value().at(i, gold[static_cast<std::size_t>(i)]), kProbFloor));
  }
  auto pn = probs.node();
  return Var(make_node(Array::scalar(total), {pn}, [r, gold, pn](Node& self) {
    if (!pn->requires_grad) return;
    ensure_grad(*pn);
    for (int i = 0; i < r; ++i) {
      const int g = gold[static_cast<std::size_t>(i)];
      const double pv = pn->value.at(i, g);
      if (pv > kProbFloor) pn->grad.at(i, g) -= self.grad[0] / pv;
    }
  }));
}

Var add_scalars(const std::vector<Var>& xs) {
  check(!xs.empty(), "add_scalars: empty list");
  double total = 0.0;
  std::vector<std::shared_ptr<Node>> parents;
  parents.reserve(xs.size());
  for (const Var& x : xs) {
    check(x.value().size() == 1, "add_scalars: non-scalar input");
    total += x.value()[0];
    parents.push_back(x.node());
  }
  return Var(make_node(Array::scalar(total), std::move(parents), [](Node& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      ensure_grad(*p);
      p->grad[0] += self.grad[0];
    }
  }));
}

void backward(const Var& loss, double seed) {
  check(loss.defined() && loss.value().size() == 1, "backward: loss must be a scalar");

  // Iterative post-order over the graph.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* parent = node->parents[idx++].get();
      if (parent->requires_grad && visited.insert(parent).second)
        stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    n->grad = Array::zeros_like(n->value);
  }
  loss.node()->grad[0] = seed;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop) n->backprop(*n);
  }
}

}  // namespace aste::nn
