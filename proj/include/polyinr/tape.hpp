#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "polyinr/tensor.hpp"

namespace polyinr {

// Handle to a node on a Tape. Only meaningful for the tape that issued it.
struct Var {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::size_t id = npos;
  bool valid() const noexcept { return id != npos; }
};

enum class OpKind {
  Input,
  Leaf,
  MatMul,
  MatMulNT,
  Add,
  Sub,
  AddRow,
  Mul,
  Scale,
  AddScalar,
  LeakyRelu,
  Sum,
  Mean,
  Mse,
  Softplus,
  GatherRows,
  Reshape,
};

const char* op_name(OpKind kind) noexcept;

// Define-by-run record of primitive operations with reverse-mode
// differentiation. Node order is creation order, which is a topological order.
//
// Leaves come in two flavours: inputs (replaceable by replay()) and fixed
// leaves (parameters and constants). A fixed leaf may reference an external
// tensor instead of copying it; the referenced tensor must outlive the tape.
//
// A tape is single-owner and not thread-safe. backward() may run once; call
// replay() to recompute values and re-arm it.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) noexcept = default;
  Tape& operator=(Tape&&) noexcept = default;

  Var input(Tensor<T> value, bool requires_grad = false, std::string name = "input");
  Var leaf(Tensor<T> value, bool requires_grad, std::string name = "leaf");
  Var leaf_ref(const Tensor<T>& value, bool requires_grad, std::string name = "leaf");
  Var constant(Tensor<T> value, std::string name = "constant") {
    return leaf(std::move(value), false, std::move(name));
  }

  // a(m x k) * b(k x n)
  Var matmul(Var a, Var b);
  // a(m x k) * b(n x k)^T
  Var matmul_nt(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  // a(m x n) + bias(1 x n) broadcast over rows.
  Var add_row(Var a, Var bias);
  Var mul(Var a, Var b);
  Var scale(Var a, T factor);
  Var add_scalar(Var a, T offset);
  // Subgradient at exactly zero is the negative-side slope.
  Var leaky_relu(Var a, T slope);
  Var sum(Var a);
  Var mean(Var a);
  Var mse(Var a, Var b);
  Var softplus(Var a);
  Var gather_rows(Var a, std::vector<std::size_t> rows);
  Var reshape(Var a, Shape shape);

  const Tensor<T>& value(Var v) const;
  T scalar(Var v) const;
  const Shape& shape(Var v) const { return value(v).shape(); }
  bool requires_grad(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  OpKind kind(Var v) const;

  // Reverse pass from a single-element output. Every requires_grad leaf gets a
  // gradient buffer (zeros when it does not feed the output).
  void backward(Var output);
  bool consumed() const noexcept { return consumed_; }

  // Gradient of the last backward() output with respect to v. Zeros if v did
  // not participate. Throws StateError before backward().
  Tensor<T> grad(Var v) const;

  // Re-evaluates every node with new values for the declared inputs (in
  // declaration order) and returns the value of `output`.
  const Tensor<T>& replay(std::span<const Tensor<T>> inputs, Var output);
  std::size_t input_count() const noexcept { return inputs_.size(); }

  // Smallest |pre-activation| seen by any leaky_relu node; +inf if none.
  T min_rectifier_margin() const noexcept;

 private:
  struct Node {
    OpKind kind = OpKind::Leaf;
    Var a;
    Var b;
    T param = T(0);
    std::vector<std::size_t> rows;
    Tensor<T> value;
    const Tensor<T>* external = nullptr;
    bool requires_grad = false;
    std::string name;

    const Tensor<T>& val() const { return external ? *external : value; }
  };

  const Node& node(Var v) const;
  Var push(Node node);
  void evaluate(Node& n);
  [[noreturn]] void dimension_error(const Node& n, const std::string& what) const;

  std::vector<Node> nodes_;
  std::vector<std::size_t> inputs_;
  std::vector<Tensor<T>> grads_;
  bool consumed_ = false;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace polyinr
