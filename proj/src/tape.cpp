#include "polyinr/tape.hpp"

#include <cmath>

#include "polyinr/kernels.hpp"

namespace polyinr {

const char* op_name(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::Input: return "input";
    case OpKind::Leaf: return "leaf";
    case OpKind::MatMul: return "matmul";
    case OpKind::MatMulNT: return "matmul_nt";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::AddRow: return "add_row";
    case OpKind::Mul: return "mul";
    case OpKind::Scale: return "scale";
    case OpKind::AddScalar: return "add_scalar";
    case OpKind::LeakyRelu: return "leaky_relu";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::Mse: return "mse";
    case OpKind::Softplus: return "softplus";
    case OpKind::GatherRows: return "gather_rows";
    case OpKind::Reshape: return "reshape";
  }
  return "?";
}

namespace {

bool is_leaf(OpKind k) { return k == OpKind::Input || k == OpKind::Leaf; }

template <typename T>
void accumulate(Tensor<T>& into, std::span<const T> delta, T factor = T(1)) {
  auto d = into.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * delta[i];
}

}  // namespace

template <typename T>
const typename Tape<T>::Node& Tape<T>::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) {
    throw ArgumentError("variable does not belong to this tape");
  }
  return nodes_[v.id];
}

template <typename T>
void Tape<T>::dimension_error(const Node& n, const std::string& what) const {
  const bool stored = !nodes_.empty() && &n >= nodes_.data() && &n < nodes_.data() + nodes_.size();
  const std::size_t index = stored ? static_cast<std::size_t>(&n - nodes_.data()) : nodes_.size();
  throw DimensionError("node " + std::to_string(index) + " (" + op_name(n.kind) +
                       (n.name.empty() ? "" : " '" + n.name + "'") + "): " + what);
}

template <typename T>
Var Tape<T>::input(Tensor<T> value, bool requires_grad, std::string name) {
  Node n;
  n.kind = OpKind::Input;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.name = std::move(name);
  Var v = push(std::move(n));
  inputs_.push_back(v.id);
  return v;
}

template <typename T>
Var Tape<T>::leaf(Tensor<T> value, bool requires_grad, std::string name) {
  Node n;
  n.kind = OpKind::Leaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.name = std::move(name);
  return push(std::move(n));
}

template <typename T>
Var Tape<T>::leaf_ref(const Tensor<T>& value, bool requires_grad, std::string name) {
  Node n;
  n.kind = OpKind::Leaf;
  n.external = &value;
  n.requires_grad = requires_grad;
  n.name = std::move(name);
  return push(std::move(n));
}

template <typename T>
Var Tape<T>::push(Node n) {
  if (!is_leaf(n.kind)) {
    n.requires_grad = node(n.a).requires_grad || (n.b.valid() && node(n.b).requires_grad);
    evaluate(n);
  }
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
void Tape<T>::evaluate(Node& n) {
  const Tensor<T>& a = node(n.a).val();
  const Tensor<T>* b = n.b.valid() ? &node(n.b).val() : nullptr;
  auto require_matrix = [&](const Tensor<T>& t) {
    if (t.rank() != 2) dimension_error(n, "expected a matrix, got " + shape_to_string(t.shape()));
  };
  auto require_same = [&] {
    if (a.shape() != b->shape()) {
      dimension_error(n, "shape " + shape_to_string(a.shape()) + " vs " +
                             shape_to_string(b->shape()));
    }
  };

  switch (n.kind) {
    case OpKind::MatMul: {
      require_matrix(a);
      require_matrix(*b);
      const std::size_t m = a.shape()[0], k = a.shape()[1], c = b->shape()[1];
      if (b->shape()[0] != k) {
        dimension_error(n, "inner dimensions " + shape_to_string(a.shape()) + " * " +
                               shape_to_string(b->shape()));
      }
      Tensor<T> out({m, c});
      kernels::matmul<T>(a.data(), b->data(), out.data(), m, k, c);
      n.value = std::move(out);
      break;
    }
    case OpKind::MatMulNT: {
      require_matrix(a);
      require_matrix(*b);
      const std::size_t m = a.shape()[0], k = a.shape()[1], c = b->shape()[0];
      if (b->shape()[1] != k) {
        dimension_error(n, "inner dimensions " + shape_to_string(a.shape()) + " * " +
                               shape_to_string(b->shape()) + "^T");
      }
      Tensor<T> bt({k, c});
      kernels::transpose<T>(b->data(), bt.data(), c, k);
      Tensor<T> out({m, c});
      kernels::matmul<T>(a.data(), bt.data(), out.data(), m, k, c);
      n.value = std::move(out);
      break;
    }
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul: {
      require_same();
      Tensor<T> out(a.shape());
      auto o = out.data();
      auto x = a.data();
      auto y = b->data();
      if (n.kind == OpKind::Add) {
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + y[i];
      } else if (n.kind == OpKind::Sub) {
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] - y[i];
      } else {
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
      }
      n.value = std::move(out);
      break;
    }
    case OpKind::AddRow: {
      require_matrix(a);
      const std::size_t cols = a.shape()[1];
      if (b->size() != cols || b->rows() != 1) {
        dimension_error(n, "bias " + shape_to_string(b->shape()) + " for rows of " +
                               shape_to_string(a.shape()));
      }
      Tensor<T> out(a.shape());
      auto o = out.data();
      auto x = a.data();
      auto y = b->data();
      for (std::size_t r = 0; r < a.shape()[0]; ++r) {
        for (std::size_t c = 0; c < cols; ++c) o[r * cols + c] = x[r * cols + c] + y[c];
      }
      n.value = std::move(out);
      break;
    }
    case OpKind::Scale:
    case OpKind::AddScalar:
    case OpKind::LeakyRelu:
    case OpKind::Softplus: {
      Tensor<T> out(a.shape());
      auto o = out.data();
      auto x = a.data();
      const T p = n.param;
      if (n.kind == OpKind::Scale) {
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * p;
      } else if (n.kind == OpKind::AddScalar) {
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + p;
      } else if (n.kind == OpKind::LeakyRelu) {
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] > T(0) ? x[i] : p * x[i];
      } else {
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = kernels::softplus(x[i]);
      }
      n.value = std::move(out);
      break;
    }
    case OpKind::Sum:
    case OpKind::Mean: {
      if (a.size() == 0) dimension_error(n, "reduction over an empty tensor");
      T acc = T(0);
      for (T x : a.data()) acc += x;
      if (n.kind == OpKind::Mean) acc /= static_cast<T>(a.size());
      n.value = Tensor<T>::scalar(acc);
      break;
    }
    case OpKind::Mse: {
      require_same();
      if (a.size() == 0) dimension_error(n, "mse over an empty tensor");
      T acc = T(0);
      auto x = a.data();
      auto y = b->data();
      for (std::size_t i = 0; i < x.size(); ++i) {
        const T d = x[i] - y[i];
        acc += d * d;
      }
      n.value = Tensor<T>::scalar(acc / static_cast<T>(x.size()));
      break;
    }
    case OpKind::GatherRows: {
      if (a.rank() == 0) dimension_error(n, "gather on rank-0 tensor");
      const std::size_t cols = a.cols();
      Shape shape = a.shape();
      shape[0] = n.rows.size();
      Tensor<T> out(shape);
      for (std::size_t r = 0; r < n.rows.size(); ++r) {
        if (n.rows[r] >= a.rows()) {
          dimension_error(n, "row index " + std::to_string(n.rows[r]) + " out of " +
                                 std::to_string(a.rows()));
        }
        std::copy_n(a.data().begin() + n.rows[r] * cols, cols, out.data().begin() + r * cols);
      }
      n.value = std::move(out);
      break;
    }
    case OpKind::Reshape: {
      // The target shape is kept in `rows` so replay can rebuild it.
      Shape target(n.rows.begin(), n.rows.end());
      if (shape_numel(target) != a.size()) {
        dimension_error(n, "cannot reshape " + shape_to_string(a.shape()) + " to " +
                               shape_to_string(target));
      }
      n.value = a.reshaped(std::move(target));
      break;
    }
    case OpKind::Input:
    case OpKind::Leaf:
      break;
  }
}

#define POLYINR_BINARY(fn, KIND)                \
  template <typename T>                         \
  Var Tape<T>::fn(Var a, Var b) {               \
    Node n;                                     \
    n.kind = OpKind::KIND;                      \
    n.a = a;                                    \
    n.b = b;                                    \
    return push(std::move(n));                  \
  }

POLYINR_BINARY(matmul, MatMul)
POLYINR_BINARY(matmul_nt, MatMulNT)
POLYINR_BINARY(add, Add)
POLYINR_BINARY(sub, Sub)
POLYINR_BINARY(add_row, AddRow)
POLYINR_BINARY(mul, Mul)
POLYINR_BINARY(mse, Mse)
#undef POLYINR_BINARY

#define POLYINR_UNARY(fn, KIND)                 \
  template <typename T>                         \
  Var Tape<T>::fn(Var a) {                      \
    Node n;                                     \
    n.kind = OpKind::KIND;                      \
    n.a = a;                                    \
    return push(std::move(n));                  \
  }

POLYINR_UNARY(sum, Sum)
POLYINR_UNARY(mean, Mean)
POLYINR_UNARY(softplus, Softplus)
#undef POLYINR_UNARY

template <typename T>
Var Tape<T>::scale(Var a, T factor) {
  Node n;
  n.kind = OpKind::Scale;
  n.a = a;
  n.param = factor;
  return push(std::move(n));
}

template <typename T>
Var Tape<T>::add_scalar(Var a, T offset) {
  Node n;
  n.kind = OpKind::AddScalar;
  n.a = a;
  n.param = offset;
  return push(std::move(n));
}

template <typename T>
Var Tape<T>::leaky_relu(Var a, T slope) {
  Node n;
  n.kind = OpKind::LeakyRelu;
  n.a = a;
  n.param = slope;
  return push(std::move(n));
}

template <typename T>
Var Tape<T>::gather_rows(Var a, std::vector<std::size_t> rows) {
  Node n;
  n.kind = OpKind::GatherRows;
  n.a = a;
  n.rows = std::move(rows);
  return push(std::move(n));
}

template <typename T>
Var Tape<T>::reshape(Var a, Shape shape) {
  Node n;
  n.kind = OpKind::Reshape;
  n.a = a;
  n.rows.assign(shape.begin(), shape.end());
  return push(std::move(n));
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var v) const {
  return node(v).val();
}

template <typename T>
T Tape<T>::scalar(Var v) const {
  const auto& t = value(v);
  if (t.size() != 1) {
    throw DimensionError("expected a single-element tensor, got " + shape_to_string(t.shape()));
  }
  return t[0];
}

template <typename T>
bool Tape<T>::requires_grad(Var v) const {
  return node(v).requires_grad;
}

template <typename T>
OpKind Tape<T>::kind(Var v) const {
  return node(v).kind;
}

template <typename T>
void Tape<T>::backward(Var output) {
  if (consumed_) throw StateError("backward() called on an already consumed tape");
  const Node& out = node(output);
  if (out.val().size() != 1) {
    throw DimensionError("backward() needs a single-element output, got " +
                         shape_to_string(out.val().shape()));
  }
  consumed_ = true;
  grads_.assign(nodes_.size(), Tensor<T>());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].requires_grad && is_leaf(nodes_[i].kind)) {
      grads_[i] = Tensor<T>(nodes_[i].val().shape());
    }
  }
  if (!out.requires_grad) return;

  auto grad_of = [&](Var v) -> Tensor<T>& {
    Tensor<T>& g = grads_[v.id];
    if (g.empty() && g.shape().empty()) g = Tensor<T>(nodes_[v.id].val().shape());
    return g;
  };
  grad_of(output)[0] = T(1);

  for (std::size_t idx = output.id + 1; idx-- > 0;) {
    const Node& n = nodes_[idx];
    if (!n.requires_grad || is_leaf(n.kind) || grads_[idx].shape().empty()) continue;
    const Tensor<T>& g = grads_[idx];
    const bool ga = node(n.a).requires_grad;
    const bool gb = n.b.valid() && node(n.b).requires_grad;
    const Tensor<T>& a = node(n.a).val();
    const Tensor<T>* b = n.b.valid() ? &node(n.b).val() : nullptr;

    switch (n.kind) {
      case OpKind::MatMul: {
        const std::size_t m = a.shape()[0], k = a.shape()[1], c = b->shape()[1];
        if (ga) {
          // dA = dC * B^T
          Tensor<T> bt({c, k});
          kernels::transpose<T>(b->data(), bt.data(), k, c);
          Tensor<T> da({m, k});
          kernels::matmul<T>(g.data(), bt.data(), da.data(), m, c, k);
          accumulate<T>(grad_of(n.a), da.data());
        }
        if (gb) kernels::matmul_tn_accumulate<T>(a.data(), g.data(), grad_of(n.b).data(), m, k, c);
        break;
      }
      case OpKind::MatMulNT: {
        const std::size_t m = a.shape()[0], k = a.shape()[1], c = b->shape()[0];
        if (ga) {
          // dA = dC * B
          Tensor<T> da({m, k});
          kernels::matmul<T>(g.data(), b->data(), da.data(), m, c, k);
          accumulate<T>(grad_of(n.a), da.data());
        }
        // dB = dC^T * A
        if (gb) kernels::matmul_tn_accumulate<T>(g.data(), a.data(), grad_of(n.b).data(), m, c, k);
        break;
      }
      case OpKind::Add:
        if (ga) accumulate<T>(grad_of(n.a), g.data());
        if (gb) accumulate<T>(grad_of(n.b), g.data());
        break;
      case OpKind::Sub:
        if (ga) accumulate<T>(grad_of(n.a), g.data());
        if (gb) accumulate<T>(grad_of(n.b), g.data(), T(-1));
        break;
      case OpKind::AddRow: {
        if (ga) accumulate<T>(grad_of(n.a), g.data());
        if (gb) {
          auto db = grad_of(n.b).data();
          const std::size_t cols = db.size();
          auto gd = g.data();
          for (std::size_t r = 0; r < a.shape()[0]; ++r) {
            for (std::size_t c = 0; c < cols; ++c) db[c] += gd[r * cols + c];
          }
        }
        break;
      }
      case OpKind::Mul: {
        auto gd = g.data();
        if (ga) {
          auto da = grad_of(n.a).data();
          auto y = b->data();
          for (std::size_t i = 0; i < gd.size(); ++i) da[i] += gd[i] * y[i];
        }
        if (gb) {
          auto db = grad_of(n.b).data();
          auto x = a.data();
          for (std::size_t i = 0; i < gd.size(); ++i) db[i] += gd[i] * x[i];
        }
        break;
      }
      case OpKind::Scale:
        if (ga) accumulate<T>(grad_of(n.a), g.data(), n.param);
        break;
      case OpKind::AddScalar:
      case OpKind::Reshape:
        if (ga) accumulate<T>(grad_of(n.a), g.data());
        break;
      case OpKind::LeakyRelu: {
        if (!ga) break;
        auto da = grad_of(n.a).data();
        auto x = a.data();
        auto gd = g.data();
        for (std::size_t i = 0; i < gd.size(); ++i) da[i] += gd[i] * (x[i] > T(0) ? T(1) : n.param);
        break;
      }
      case OpKind::Softplus: {
        if (!ga) break;
        auto da = grad_of(n.a).data();
        auto x = a.data();
        auto gd = g.data();
        for (std::size_t i = 0; i < gd.size(); ++i) da[i] += gd[i] * kernels::sigmoid(x[i]);
        break;
      }
      case OpKind::Sum:
      case OpKind::Mean: {
        if (!ga) break;
        const T s = n.kind == OpKind::Mean ? g[0] / static_cast<T>(a.size()) : g[0];
        for (T& v : grad_of(n.a).data()) v += s;
        break;
      }
      case OpKind::Mse: {
        const T s = T(2) * g[0] / static_cast<T>(a.size());
        auto x = a.data();
        auto y = b->data();
        if (ga) {
          auto da = grad_of(n.a).data();
          for (std::size_t i = 0; i < x.size(); ++i) da[i] += s * (x[i] - y[i]);
        }
        if (gb) {
          auto db = grad_of(n.b).data();
          for (std::size_t i = 0; i < x.size(); ++i) db[i] -= s * (x[i] - y[i]);
        }
        break;
      }
      case OpKind::GatherRows: {
        if (!ga) break;
        auto da = grad_of(n.a).data();
        const std::size_t cols = a.cols();
        auto gd = g.data();
        for (std::size_t r = 0; r < n.rows.size(); ++r) {
          for (std::size_t c = 0; c < cols; ++c) da[n.rows[r] * cols + c] += gd[r * cols + c];
        }
        break;
      }
      case OpKind::Input:
      case OpKind::Leaf:
        break;
    }
    // Interior gradients are dead once propagated.
    grads_[idx] = Tensor<T>();
  }
}

template <typename T>
Tensor<T> Tape<T>::grad(Var v) const {
  const Node& n = node(v);
  if (!consumed_) throw StateError("grad() requested before backward()");
  const Tensor<T>& g = grads_[v.id];
  if (g.shape().empty()) return Tensor<T>(n.val().shape());
  return g;
}

template <typename T>
const Tensor<T>& Tape<T>::replay(std::span<const Tensor<T>> inputs, Var output) {
  if (inputs.size() != inputs_.size()) {
    throw DimensionError("replay expects " + std::to_string(inputs_.size()) + " inputs, got " +
                         std::to_string(inputs.size()));
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Node& n = nodes_[inputs_[i]];
    if (inputs[i].shape() != n.value.shape()) {
      throw DimensionError("input " + std::to_string(i) + " ('" + n.name + "') expects shape " +
                           shape_to_string(n.value.shape()) + ", got " +
                           shape_to_string(inputs[i].shape()));
    }
    n.value = inputs[i];
  }
  for (Node& n : nodes_) {
    if (!is_leaf(n.kind)) evaluate(n);
  }
  grads_.clear();
  consumed_ = false;
  return value(output);
}

template <typename T>
T Tape<T>::min_rectifier_margin() const noexcept {
  T margin = std::numeric_limits<T>::infinity();
  for (const Node& n : nodes_) {
    if (n.kind != OpKind::LeakyRelu) continue;
    for (T x : nodes_[n.a.id].val().data()) margin = std::min(margin, std::abs(x));
  }
  return margin;
}

template class Tape<float>;
template class Tape<double>;

}  // namespace polyinr
