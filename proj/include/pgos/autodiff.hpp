#pragma once

#include <functional>
#include <vector>

#include "pgos/types.hpp"

namespace pgos::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; does not own anything.
/// All values are dense matrices; scalars are 1x1.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  const Matrix& grad() const;
  bool valid() const { return tape_ != nullptr; }
  int id() const { return id_; }
  Tape* tape() const { return tape_; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Eager Wengert list. Nodes are created in topological order by the forward
/// pass; backward() walks them in reverse. One tape per forward/backward
/// round; parameters live outside the tape and are lifted in as leaves.
class Tape {
 public:
  Var leaf(const Matrix& value, bool needs_grad);
  Var constant(const Matrix& value) { return leaf(value, false); }
  Var constant_scalar(double v);

  void backward(Var loss);

  const Matrix& value(int id) const { return nodes_[id].value; }
  const Matrix& grad(int id) const;
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Internal: used by the op implementations.
  using BackwardFn = std::function<void(Tape&, int self)>;
  Var make(Matrix value, bool needs_grad, BackwardFn fn);
  Matrix& grad_ref(int id);  // grows a zero grad on first touch

 private:
  struct Node {
    Matrix value;
    Matrix grad;  // empty until touched during backward
    BackwardFn backward;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
  static const Matrix empty_;
};

// --- arithmetic ---
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var cmul(Var a, Var b);  // coefficient-wise product
Var cdiv(Var a, Var b);
Var matmul(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var add_rowvec(Var a, Var row);  // broadcast a 1xM row over all rows of a

// --- elementwise functions ---
Var relu(Var a);
Var tanh_of(Var a);
Var sigmoid(Var a);
Var exp_of(Var a);
Var log_of(Var a);
Var softplus(Var a);
Var square(Var a);
Var sqrt_of(Var a);  // backward guarded near zero
Var clamp(Var a, double lo, double hi);

// --- reductions and shape ---
Var sum_all(Var a);       // 1x1
Var mean_all(Var a);      // 1x1
Var rowwise_sum(Var a);   // Nx1
Var colwise_sum(Var a);   // 1xM
Var transpose(Var a);
Var diagonal(Var a);      // Nx1 from square NxN
Var reduce_min(Var a);    // 1x1; gradient routed to the first argmin
Var cmin(Var a, Var b);   // coefficient-wise min; ties take a's gradient
Var vcat(const std::vector<Var>& rows);
Var hcat(Var a, Var b);
Var repeat_row(Var row, int n);  // tile a 1xM row into NxM
Var row_of(Var a, int i);        // 1xM copy of row i

// --- composite ---
Var softmax_rows(Var logits);
/// Rows scaled to unit L2 norm. Rows with norm below the guard get a fixed
/// deterministic epsilon vector added before normalizing.
Var l2_normalize_rows(Var a);

double scalar(Var v);  // value of a 1x1 node

}  // namespace pgos::ad
