#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "aste/array.hpp"
#include "aste/rng.hpp"

namespace aste::nn {

/// A trainable tensor: value plus gradient accumulator. Gradients are
/// accumulated by backward() and cleared by the optimizer step.
struct Parameter {
  std::string name;
  Array value;
  Array grad;

  Parameter(std::string n, Array v) : name(std::move(n)), value(std::move(v)) {
    grad = Array::zeros_like(value);
  }

  void zero_grad() { grad.fill(0.0); }
};

/// Owns parameters in registration order; that order is the canonical one
/// for the optimizer state and checkpoint payloads.
class ParamStore {
 public:
  Parameter& add(const std::string& name, Array init);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  Parameter* find(const std::string& name);
  const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }
  std::size_t total_values() const;
  void zero_grads();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

struct Node {
  Array value;
  Array grad;
  bool requires_grad = false;
  Parameter* param = nullptr;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;
};

/// Handle to a graph node. Graphs are built per forward pass and freed when
/// the last handle is dropped.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  const Array& value() const { return node_->value; }
  const Array& grad() const { return node_->grad; }
  const std::shared_ptr<Node>& node() const { return node_; }
  bool defined() const { return node_ != nullptr; }

  int rows() const { return node_->value.rows(); }
  int cols() const { return node_->value.cols(); }

 private:
  std::shared_ptr<Node> node_;
};

/// Leaf bound to a parameter; backward() accumulates into param.grad.
Var leaf(Parameter& p);
/// Leaf with no gradient tracking.
Var constant(Array v);

Var matmul(const Var& a, const Var& b);     // [m×k]·[k×n] -> [m×n]
Var matmul_nt(const Var& a, const Var& b);  // [m×k]·[n×k]^T -> [m×n]
Var add(const Var& a, const Var& b);        // same shape
Var add_bias(const Var& a, const Var& bias);  // bias vector broadcast over rows
Var scale(const Var& a, double s);
Var gather_rows(const Var& table, std::vector<int> ids);
Var slice_cols(const Var& a, int start, int len);
Var concat_cols(const Var& a, const Var& b);
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-12);
Var gelu(const Var& x);

/// Row-wise softmax restricted to the mask; masked cells are exactly 0.
/// Throws if any row of the mask is all false.
Var masked_softmax(const Var& scores, const BoolMatrix& mask);
/// Plain row-wise softmax (all-visible mask).
Var softmax_rows(const Var& scores);

/// Inverted dropout; identity when train is false or rate is 0.
Var dropout(const Var& x, double rate, Rng& rng, bool train);

/// -log(dist[gold]) with the distribution clamped at 1e-12. dist is a
/// single distribution (1-D or one row); gold is a one-hot of equal length.
Var cross_entropy(const Var& dist, const Array& onehot);
/// Sum over rows of -log(probs[i, gold[i]]), same clamping.
Var cross_entropy_rows(const Var& probs, const std::vector<int>& gold);

Var add_scalars(const std::vector<Var>& xs);

/// Reverse-mode sweep from a scalar loss. Seeds d(loss)/d(loss) = seed and
/// accumulates into every reachable Parameter's grad.
void backward(const Var& loss, double seed = 1.0);

constexpr double kProbFloor = 1e-12;

}  // namespace aste::nn
