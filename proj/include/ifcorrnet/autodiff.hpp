// Copyright 2026 ifcorrnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ifcorrnet/nn_ops.hpp"
#include "ifcorrnet/tensor.hpp"

namespace ifcn {

// A named tensor with a persistent gradient buffer, owned by the model.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;

  Param() = default;
  Param(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
    grad = Tensor(value.shape);
  }

  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

// Reverse-mode tape. Layer code is templated on the context type so the same
// forward definition runs either recording (TapeCtx, for training and
// gradient checks) or plain (EvalCtx, for inference without graph retention).
//
// TapeCtx ops allocate a node per result; backward() sweeps the tape in
// reverse creation order and then adds the leaf gradients into Param::grad.
class TapeCtx {
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    std::function<void()> backward;
  };

 public:
  struct Var {
    Node* n = nullptr;
  };
  using V = Var;

  TapeCtx() = default;
  TapeCtx(const TapeCtx&) = delete;
  TapeCtx& operator=(const TapeCtx&) = delete;

  const Tensor& val(const V& v) const { return v.n->value; }

  V constant(Tensor t) { return {make(std::move(t), false)}; }

  V param(Param& p) {
    auto it = interned_.find(&p);
    if (it != interned_.end()) return {it->second};
    Node* n = make(p.value, p.trainable);
    interned_.emplace(&p, n);
    return {n};
  }

  V conv2d(const V& x, Param& w, Param& b) {
    V wv = param(w), bv = param(b);
    Node* out = make(ops::conv2d_fwd(x.n->value, wv.n->value, bv.n->value),
                     any_grad({x.n, wv.n, bv.n}));
    if (out->needs_grad) {
      Node *xn = x.n, *wn = wv.n, *bn = bv.n, *on = out;
      on->backward = [xn, wn, bn, on] {
        ops::conv2d_bwd(xn->value, wn->value, on->grad, grad_of(xn), grad_of(wn), grad_of(bn));
      };
    }
    return {out};
  }

  V conv1d(const V& x, Param& w, Param& b) {
    V wv = param(w), bv = param(b);
    Node* out = make(ops::conv1d_fwd(x.n->value, wv.n->value, bv.n->value),
                     any_grad({x.n, wv.n, bv.n}));
    if (out->needs_grad) {
      Node *xn = x.n, *wn = wv.n, *bn = bv.n, *on = out;
      on->backward = [xn, wn, bn, on] {
        ops::conv1d_bwd(xn->value, wn->value, on->grad, grad_of(xn), grad_of(wn), grad_of(bn));
      };
    }
    return {out};
  }

  V linear(const V& x, Param& w, Param& b) {
    V wv = param(w), bv = param(b);
    Node* out = make(ops::linear_fwd(x.n->value, wv.n->value, bv.n->value),
                     any_grad({x.n, wv.n, bv.n}));
    if (out->needs_grad) {
      Node *xn = x.n, *wn = wv.n, *bn = bv.n, *on = out;
      on->backward = [xn, wn, bn, on] {
        ops::linear_bwd(xn->value, wn->value, on->grad, grad_of(xn), grad_of(wn), grad_of(bn));
      };
    }
    return {out};
  }

  V layer_norm(const V& x, int axis, Param& gamma, Param& beta) {
    V gv = param(gamma), bv = param(beta);
    auto stats = std::make_shared<ops::NormStats>();
    Node* out = make(
        ops::layer_norm_fwd(x.n->value, axis, gv.n->value, bv.n->value, stats.get()),
        any_grad({x.n, gv.n, bv.n}));
    if (out->needs_grad) {
      Node *xn = x.n, *gn = gv.n, *bn = bv.n, *on = out;
      on->backward = [xn, gn, bn, on, axis, stats] {
        ops::layer_norm_bwd(xn->value, axis, gn->value, *stats, on->grad, grad_of(xn),
                            grad_of(gn), grad_of(bn));
      };
    }
    return {out};
  }

  V swiglu(const V& x, int axis) {
    Node* out = make(ops::swiglu_fwd(x.n->value, axis), x.n->needs_grad);
    if (out->needs_grad) {
      Node *xn = x.n, *on = out;
      on->backward = [xn, on, axis] { ops::swiglu_bwd(xn->value, axis, on->grad, &xn->grad); };
    }
    return {out};
  }

  V permute(const V& x, std::vector<int> perm) {
    Node* out = make(ops::permute_fwd(x.n->value, perm), x.n->needs_grad);
    if (out->needs_grad) {
      Node *xn = x.n, *on = out;
      std::vector<int> inv = ops::inverse_perm(perm);
      on->backward = [xn, on, inv] {
        Tensor g = ops::permute_fwd(on->grad, inv);
        for (size_t i = 0; i < g.data.size(); ++i) xn->grad.data[i] += g.data[i];
      };
    }
    return {out};
  }

  V reshape(const V& x, std::vector<int64_t> shape) {
    IFCN_CHECK(Tensor::count(shape) == x.n->value.numel(), "reshape: element count mismatch");
    Tensor t = x.n->value;
    t.shape = shape;
    Node* out = make(std::move(t), x.n->needs_grad);
    if (out->needs_grad) {
      Node *xn = x.n, *on = out;
      on->backward = [xn, on] {
        for (size_t i = 0; i < on->grad.data.size(); ++i) xn->grad.data[i] += on->grad.data[i];
      };
    }
    return {out};
  }

  V matmul(const V& a, const V& b, bool trans_b, double alpha) {
    Node* out = make(ops::matmul_fwd(a.n->value, b.n->value, trans_b, alpha),
                     any_grad({a.n, b.n}));
    if (out->needs_grad) {
      Node *an = a.n, *bn = b.n, *on = out;
      on->backward = [an, bn, on, trans_b, alpha] {
        ops::matmul_bwd(an->value, bn->value, trans_b, alpha, on->grad, grad_of(an),
                        grad_of(bn));
      };
    }
    return {out};
  }

  V softmax(const V& x) {
    Node* out = make(ops::softmax_fwd(x.n->value), x.n->needs_grad);
    if (out->needs_grad) {
      Node *xn = x.n, *on = out;
      on->backward = [xn, on] { ops::softmax_bwd(on->value, on->grad, &xn->grad); };
    }
    return {out};
  }

  V rope(const V& x, double base = ops::kRopeBase) {
    Node* out = make(ops::rope_fwd(x.n->value, base), x.n->needs_grad);
    if (out->needs_grad) {
      Node *xn = x.n, *on = out;
      on->backward = [xn, on, base] { ops::rope_bwd(on->grad, base, &xn->grad); };
    }
    return {out};
  }

  V add(const V& a, const V& b) {
    check_same_shape(a.n->value, b.n->value, "add");
    Tensor t = a.n->value;
    for (size_t i = 0; i < t.data.size(); ++i) t.data[i] += b.n->value.data[i];
    Node* out = make(std::move(t), any_grad({a.n, b.n}));
    if (out->needs_grad) {
      Node *an = a.n, *bn = b.n, *on = out;
      on->backward = [an, bn, on] {
        if (an->needs_grad)
          for (size_t i = 0; i < on->grad.data.size(); ++i) an->grad.data[i] += on->grad.data[i];
        if (bn->needs_grad)
          for (size_t i = 0; i < on->grad.data.size(); ++i) bn->grad.data[i] += on->grad.data[i];
      };
    }
    return {out};
  }

  V scale(const V& a, double s) {
    Tensor t = a.n->value;
    for (double& v : t.data) v *= s;
    Node* out = make(std::move(t), a.n->needs_grad);
    if (out->needs_grad) {
      Node *an = a.n, *on = out;
      on->backward = [an, on, s] {
        for (size_t i = 0; i < on->grad.data.size(); ++i) an->grad.data[i] += s * on->grad.data[i];
      };
    }
    return {out};
  }

  // Gradients flow into the filter only; the stack is an input feature.
  V apply_filter(const V& wch, const V& sre, const V& sim) {
    IFCN_CHECK(!sre.n->needs_grad && !sim.n->needs_grad,
               "apply_filter: stack must not require gradients");
    Node* out = make(ops::apply_filter_fwd(wch.n->value, sre.n->value, sim.n->value),
                     wch.n->needs_grad);
    if (out->needs_grad) {
      Node *wn = wch.n, *rn = sre.n, *in_ = sim.n, *on = out;
      on->backward = [wn, rn, in_, on] {
        ops::apply_filter_bwd(rn->value, in_->value, on->grad, &wn->grad);
      };
    }
    return {out};
  }

  V istft(const V& y, const ops::StftMeta& m) {
    Node* out = make(ops::istft_fwd(y.n->value, m), y.n->needs_grad);
    if (out->needs_grad) {
      Node *yn = y.n, *on = out;
      on->backward = [yn, on, m] { ops::istft_bwd(m, on->grad, &yn->grad); };
    }
    return {out};
  }

  V stft(const V& wave, int n_fft, int hop) {
    const int64_t len = wave.n->value.numel();
    Node* out = make(ops::stft_fwd(wave.n->value, n_fft, hop), wave.n->needs_grad);
    if (out->needs_grad) {
      Node *wn = wave.n, *on = out;
      on->backward = [wn, on, n_fft, hop, len] {
        ops::stft_bwd(n_fft, hop, len, on->grad, &wn->grad);
      };
    }
    return {out};
  }

  V l1(const V& a, const V& target) {
    Node* out = make(Tensor::scalar(ops::l1_mean(a.n->value, target.n->value)),
                     a.n->needs_grad);
    if (out->needs_grad) {
      Node *an = a.n, *tn = target.n, *on = out;
      on->backward = [an, tn, on] {
        ops::l1_mean_bwd(an->value, tn->value, on->grad.data[0], &an->grad);
      };
    }
    return {out};
  }

  // Seeds the scalar loss with gradient 1, sweeps the tape backwards, then
  // accumulates leaf gradients into the interned parameters' grad buffers.
  void backward(const V& loss) {
    IFCN_CHECK(loss.n->value.numel() == 1, "backward: loss must be a scalar");
    IFCN_CHECK(loss.n->needs_grad, "backward: loss does not depend on any parameter");
    loss.n->grad.data[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      if ((*it)->backward) (*it)->backward();
    }
    for (auto& [p, n] : interned_) {
      for (size_t i = 0; i < p->grad.data.size(); ++i) p->grad.data[i] += n->grad.data[i];
    }
  }

  size_t num_nodes() const { return nodes_.size(); }

 private:
  static bool any_grad(std::initializer_list<const Node*> ns) {
    for (const Node* n : ns)
      if (n->needs_grad) return true;
    return false;
  }

  static Tensor* grad_of(Node* n) { return n->needs_grad ? &n->grad : nullptr; }

  Node* make(Tensor value, bool needs_grad) {
    nodes_.push_back(std::make_unique<Node>());
    Node* n = nodes_.back().get();
    n->needs_grad = needs_grad;
    if (needs_grad) n->grad = Tensor(value.shape);
    n->value = std::move(value);
    return n;
  }

  std::deque<std::unique_ptr<Node>> nodes_;
  std::unordered_map<Param*, Node*> interned_;
};

// Plain evaluation context: same op surface, no graph. Intermediate tensors
// are freed as soon as the last handle goes out of scope, and parameters are
// borrowed rather than copied.
class EvalCtx {
 public:
  struct Var {
    std::shared_ptr<const Tensor> owned;
    const Tensor* t = nullptr;
  };
  using V = Var;

  const Tensor& val(const V& v) const { return *v.t; }

  V constant(Tensor t) { return wrap(std::move(t)); }

  V param(Param& p) { return {nullptr, &p.value}; }

  V conv2d(const V& x, Param& w, Param& b) {
    return wrap(ops::conv2d_fwd(*x.t, w.value, b.value));
  }
  V conv1d(const V& x, Param& w, Param& b) {
    return wrap(ops::conv1d_fwd(*x.t, w.value, b.value));
  }
  V linear(const V& x, Param& w, Param& b) {
    return wrap(ops::linear_fwd(*x.t, w.value, b.value));
  }
  V layer_norm(const V& x, int axis, Param& gamma, Param& beta) {
    return wrap(ops::layer_norm_fwd(*x.t, axis, gamma.value, beta.value, nullptr));
  }
  V swiglu(const V& x, int axis) { return wrap(ops::swiglu_fwd(*x.t, axis)); }
  V permute(const V& x, std::vector<int> perm) { return wrap(ops::permute_fwd(*x.t, perm)); }
  V reshape(const V& x, std::vector<int64_t> shape) {
    IFCN_CHECK(Tensor::count(shape) == x.t->numel(), "reshape: element count mismatch");
    Tensor t = *x.t;
    t.shape = std::move(shape);
    return wrap(std::move(t));
  }
  V matmul(const V& a, const V& b, bool trans_b, double alpha) {
    return wrap(ops::matmul_fwd(*a.t, *b.t, trans_b, alpha));
  }
  V softmax(const V& x) { return wrap(ops::softmax_fwd(*x.t)); }
  V rope(const V& x, double base = ops::kRopeBase) { return wrap(ops::rope_fwd(*x.t, base)); }
  V add(const V& a, const V& b) {
    check_same_shape(*a.t, *b.t, "add");
    Tensor t = *a.t;
    for (size_t i = 0; i < t.data.size(); ++i) t.data[i] += b.t->data[i];
    return wrap(std::move(t));
  }
  V scale(const V& a, double s) {
    Tensor t = *a.t;
    for (double& v : t.data) v *= s;
    return wrap(std::move(t));
  }
  V apply_filter(const V& wch, const V& sre, const V& sim) {
    return wrap(ops::apply_filter_fwd(*wch.t, *sre.t, *sim.t));
  }
  V istft(const V& y, const ops::StftMeta& m) { return wrap(ops::istft_fwd(*y.t, m)); }
  V stft(const V& wave, int n_fft, int hop) { return wrap(ops::stft_fwd(*wave.t, n_fft, hop)); }
  V l1(const V& a, const V& target) {
    return wrap(Tensor::scalar(ops::l1_mean(*a.t, *target.t)));
  }

 private:
  static V wrap(Tensor t) {
    auto p = std::make_shared<Tensor>(std::move(t));
    return {p, p.get()};
  }
};

}  // namespace ifcn
