#include "pgos/autodiff.hpp"

#include <cassert>
#include <cmath>

namespace pgos::ad {

const Matrix Tape::empty_ = Matrix();

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

Var Tape::leaf(const Matrix& value, bool needs_grad) {
  return make(value, needs_grad, nullptr);
}

Var Tape::constant_scalar(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return leaf(m, false);
}

Var Tape::make(Matrix value, bool needs_grad, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Matrix& Tape::grad_ref(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0)
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

const Matrix& Tape::grad(int id) const {
  const Node& n = nodes_[id];
  return n.grad.size() == 0 ? empty_ : n.grad;
}

void Tape::backward(Var loss) {
  assert(loss.tape() == this);
  const Matrix& lv = value(loss.id());
  if (lv.rows() != 1 || lv.cols() != 1)
    throw NumericError("backward() requires a scalar loss node");
  grad_ref(loss.id())(0, 0) = 1.0;
  for (int i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad || !n.backward) continue;
    if (n.grad.size() == 0) continue;  // not on any path to the loss
    n.backward(*this, i);
  }
}

namespace {

bool any_grad(Var a) { return a.tape()->needs_grad(a.id()); }
bool any_grad(Var a, Var b) { return any_grad(a) || any_grad(b); }

void accum(Tape& t, int id, const Matrix& g) {
  if (!t.needs_grad(id)) return;
  t.grad_ref(id) += g;
}

}  // namespace

Var add(Var a, Var b) {
  Tape& t = *a.tape();
  int ia = a.id(), ib = b.id();
  return t.make(a.value() + b.value(), any_grad(a, b),
                [ia, ib](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  accum(t, ia, g);
                  accum(t, ib, g);
                });
}

Var sub(Var a, Var b) {
  Tape& t = *a.tape();
  int ia = a.id(), ib = b.id();
  return t.make(a.value() - b.value(), any_grad(a, b),
                [ia, ib](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  accum(t, ia, g);
                  if (t.needs_grad(ib)) t.grad_ref(ib) -= g;
                });
}

Var cmul(Var a, Var b) {
  Tape& t = *a.tape();
  int ia = a.id(), ib = b.id();
  return t.make(a.value().cwiseProduct(b.value()), any_grad(a, b),
                [ia, ib](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  accum(t, ia, g.cwiseProduct(t.value(ib)));
                  accum(t, ib, g.cwiseProduct(t.value(ia)));
                });
}

Var cdiv(Var a, Var b) {
  Tape& t = *a.tape();
  int ia = a.id(), ib = b.id();
  return t.make(a.value().cwiseQuotient(b.value()), any_grad(a, b),
                [ia, ib](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  const Matrix& bv = t.value(ib);
                  accum(t, ia, g.cwiseQuotient(bv));
                  if (t.needs_grad(ib)) {
                    const Matrix& y = t.value(self);
                    t.grad_ref(ib) -= g.cwiseProduct(y).cwiseQuotient(bv);
                  }
                });
}

Var matmul(Var a, Var b) {
  Tape& t = *a.tape();
  int ia = a.id(), ib = b.id();
  return t.make(a.value() * b.value(), any_grad(a, b),
                [ia, ib](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  accum(t, ia, g * t.value(ib).transpose());
                  accum(t, ib, t.value(ia).transpose() * g);
                });
}

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double s) {
  Tape& t = *a.tape();
  int ia = a.id();
  return t.make(a.value() * s, any_grad(a), [ia, s](Tape& t, int self) {
    accum(t, ia, t.grad(self) * s);
  });
}

Var add_scalar(Var a, double s) {
  Tape& t = *a.tape();
  int ia = a.id();
  return t.make(a.value().array() + s, any_grad(a), [ia](Tape& t, int self) {
    accum(t, ia, t.grad(self));
  });
}

Var add_rowvec(Var a, Var row) {
  Tape& t = *a.tape();
  int ia = a.id(), ir = row.id();
  Matrix out = a.value();
  out.rowwise() += Eigen::RowVectorXd(row.value().row(0));
  return t.make(std::move(out), any_grad(a, row),
                [ia, ir](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  accum(t, ia, g);
                  accum(t, ir, g.colwise().sum());
                });
}

Var relu(Var a) {
  Tape& t = *a.tape();
  int ia = a.id();
  return t.make(a.value().cwiseMax(0.0), any_grad(a),
                [ia](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  Matrix mask =
                      (t.value(ia).array() > 0.0).cast<double>().matrix();
                  accum(t, ia, g.cwiseProduct(mask));
                });
}

Var tanh_of(Var a) {
  Tape& t = *a.tape();
  int ia = a.id();
  return t.make(a.value().array().tanh(), any_grad(a),
                [ia](Tape& t, int self) {
                  const Matrix& y = t.value(self);
                  Matrix d = (1.0 - y.array().square()).matrix();
                  accum(t, ia, t.grad(self).cwiseProduct(d));
                });
}

Var sigmoid(Var a) {
  Tape& t = *a.tape();
  int ia = a.id();
  Matrix out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return t.make(std::move(out), any_grad(a), [ia](Tape& t, int self) {
    const Matrix& y = t.value(self);
    Matrix d = (y.array() * (1.0 - y.array())).matrix();
    accum(t, ia, t.grad(self).cwiseProduct(d));
  });
}

Var exp_of(Var a) {
  Tape& t = *a.tape();
  int ia = a.id();
  return t.make(a.value().array().exp(), any_grad(a),
                [ia](Tape& t, int self) {
                  accum(t, ia, t.grad(self).cwiseProduct(t.value(self)));
                });
}

Var log_of(Var a) {
  Tape& t = *a.tape();
  int ia = a.id();
  return t.make(a.value().array().log(), any_grad(a),
                [ia](Tape& t, int self) {
                  accum(t, ia, t.grad(self).cwiseQuotient(t.value(ia)));
                });
}

Var softplus(Var a) {
  Tape& t = *a.tape();
  int ia = a.id();
  // log(1 + e^x), evaluated as max(x,0) + log1p(e^{-|x|}) for stability
  Matrix out = a.value().unaryExpr([](double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  });
  return t.make(std::move(out), any_grad(a), [ia](Tape& t, int self) {
    Matrix d = t.value(ia).unaryExpr(
        [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    accum(t, ia, t.grad(self).cwiseProduct(d));
  });
}

Var square(Var a) {
  Tape& t = *a.tape();
  int ia = a.id();
  return t.make(a.value().array().square(), any_grad(a),
                [ia](Tape& t, int self) {
                  accum(t, ia, (2.0 * t.grad(self).array() *
                                t.value(ia).array()).matrix());
                });
}

Var sqrt_of(Var a) {
  Tape& t = *a.tape();
  int ia = a.id();
  return t.make(a.value().array().sqrt(), any_grad(a),
                [ia](Tape& t, int self) {
                  Matrix d = t.value(self).unaryExpr([](double y) {
                    return 0.5 / std::max(y, 1e-12);
                  });
                  accum(t, ia, t.grad(self).cwiseProduct(d));
                });
}

Var clamp(Var a, double lo, double hi) {
  Tape& t = *a.tape();
  int ia = a.id();
  return t.make(a.value().cwiseMax(lo).cwiseMin(hi), any_grad(a),
                [ia, lo, hi](Tape& t, int self) {
                  const Matrix& x = t.value(ia);
                  Matrix mask = ((x.array() > lo) && (x.array() < hi))
                                    .cast<double>()
                                    .matrix();
                  accum(t, ia, t.grad(self).cwiseProduct(mask));
                });
}

Var sum_all(Var a) {
  Tape& t = *a.tape();
  int ia = a.id();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return t.make(std::move(out), any_grad(a), [ia](Tape& t, int self) {
    if (!t.needs_grad(ia)) return;
    double g = t.grad(self)(0, 0);
    t.grad_ref(ia).array() += g;
  });
}

Var mean_all(Var a) {
  return scale(sum_all(a), 1.0 / static_cast<double>(a.value().size()));
}

Var rowwise_sum(Var a) {
  Tape& t = *a.tape();
  int ia = a.id();
  Matrix out = a.value().rowwise().sum();
  return t.make(std::move(out), any_grad(a), [ia](Tape& t, int self) {
    if (!t.needs_grad(ia)) return;
    const Matrix& g = t.grad(self);  // Nx1
    t.grad_ref(ia).colwise() += Eigen::VectorXd(g.col(0));
  });
}

Var colwise_sum(Var a) {
  Tape& t = *a.tape();
  int ia = a.id();
  Matrix out = a.value().colwise().sum();
  return t.make(std::move(out), any_grad(a), [ia](Tape& t, int self) {
    if (!t.needs_grad(ia)) return;
    const Matrix& g = t.grad(self);  // 1xM
    t.grad_ref(ia).rowwise() += Eigen::RowVectorXd(g.row(0));
  });
}

Var transpose(Var a) {
  Tape& t = *a.tape();
  int ia = a.id();
  return t.make(a.value().transpose(), any_grad(a), [ia](Tape& t, int self) {
    accum(t, ia, t.grad(self).transpose());
  });
}

Var diagonal(Var a) {
  Tape& t = *a.tape();
  int ia = a.id();
  Matrix out = a.value().diagonal();
  return t.make(std::move(out), any_grad(a), [ia](Tape& t, int self) {
    if (!t.needs_grad(ia)) return;
    const Matrix& g = t.grad(self);
    t.grad_ref(ia).diagonal() += g.col(0);
  });
}

Var reduce_min(Var a) {
  Tape& t = *a.tape();
  int ia = a.id();
  Eigen::Index r, c;
  double m = a.value().minCoeff(&r, &c);
  Matrix out(1, 1);
  out(0, 0) = m;
  int ri = static_cast<int>(r), ci = static_cast<int>(c);
  return t.make(std::move(out), any_grad(a), [ia, ri, ci](Tape& t, int self) {
    if (!t.needs_grad(ia)) return;
    t.grad_ref(ia)(ri, ci) += t.grad(self)(0, 0);
  });
}

Var cmin(Var a, Var b) {
  Tape& t = *a.tape();
  int ia = a.id(), ib = b.id();
  return t.make(a.value().cwiseMin(b.value()), any_grad(a, b),
                [ia, ib](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  Matrix take_a = (t.value(ia).array() <= t.value(ib).array())
                                      .cast<double>()
                                      .matrix();
                  accum(t, ia, g.cwiseProduct(take_a));
                  accum(t, ib,
                        g.cwiseProduct((1.0 - take_a.array()).matrix()));
                });
}

Var vcat(const std::vector<Var>& rows) {
  assert(!rows.empty());
  Tape& t = *rows.front().tape();
  Eigen::Index total = 0;
  const Eigen::Index cols = rows.front().value().cols();
  bool ng = false;
  for (const Var& v : rows) {
    total += v.value().rows();
    ng = ng || any_grad(v);
  }
  Matrix out(total, cols);
  std::vector<int> ids;
  std::vector<int> offsets;
  ids.reserve(rows.size());
  Eigen::Index at = 0;
  for (const Var& v : rows) {
    out.middleRows(at, v.value().rows()) = v.value();
    ids.push_back(v.id());
    offsets.push_back(static_cast<int>(at));
    at += v.value().rows();
  }
  return t.make(std::move(out), ng,
                [ids, offsets](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  for (std::size_t k = 0; k < ids.size(); ++k) {
                    if (!t.needs_grad(ids[k])) continue;
                    Eigen::Index n = t.value(ids[k]).rows();
                    t.grad_ref(ids[k]) += g.middleRows(offsets[k], n);
                  }
                });
}

Var hcat(Var a, Var b) {
  Tape& t = *a.tape();
  int ia = a.id(), ib = b.id();
  Matrix out(a.value().rows(), a.value().cols() + b.value().cols());
  out << a.value(), b.value();
  int ca = static_cast<int>(a.value().cols());
  return t.make(std::move(out), any_grad(a, b),
                [ia, ib, ca](Tape& t, int self) {
                  const Matrix& g = t.grad(self);
                  accum(t, ia, g.leftCols(ca));
                  accum(t, ib, g.rightCols(g.cols() - ca));
                });
}

Var repeat_row(Var row, int n) {
  Tape& t = *row.tape();
  int ir = row.id();
  Matrix out = row.value().row(0).replicate(n, 1);
  return t.make(std::move(out), any_grad(row), [ir](Tape& t, int self) {
    accum(t, ir, t.grad(self).colwise().sum());
  });
}

Var row_of(Var a, int i) {
  Tape& t = *a.tape();
  int ia = a.id();
  Matrix out = a.value().row(i);
  return t.make(std::move(out), any_grad(a), [ia, i](Tape& t, int self) {
    if (!t.needs_grad(ia)) return;
    t.grad_ref(ia).row(i) += t.grad(self).row(0);
  });
}

Var softmax_rows(Var logits) {
  Tape& t = *logits.tape();
  int il = logits.id();
  Matrix p = logits.value();
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::ArrayXd row = p.row(i).array();
    row -= row.maxCoeff();
    row = row.exp();
    p.row(i) = (row / row.sum()).matrix();
  }
  return t.make(std::move(p), any_grad(logits), [il](Tape& t, int self) {
    if (!t.needs_grad(il)) return;
    const Matrix& p = t.value(self);
    const Matrix& g = t.grad(self);
    Matrix pg = p.cwiseProduct(g);
    Eigen::VectorXd s = pg.rowwise().sum();
    Matrix out = pg - p.cwiseProduct(s.replicate(1, p.cols()));
    t.grad_ref(il) += out;
  });
}

Var l2_normalize_rows(Var a) {
  Tape& t = *a.tape();
  int ia = a.id();
  const Matrix& x = a.value();
  Matrix pre = x;
  for (Eigen::Index i = 0; i < pre.rows(); ++i) {
    if (pre.row(i).norm() < 1e-12) pre.row(i).array() += 1e-6;
  }
  Matrix y = pre;
  for (Eigen::Index i = 0; i < y.rows(); ++i) y.row(i) /= pre.row(i).norm();
  // Capture the guarded pre-normalization input: the epsilon offset is a
  // constant, so gradients are those of v / ||v|| at v = pre.
  return t.make(std::move(y), any_grad(a),
                [ia, pre](Tape& t, int self) {
                  if (!t.needs_grad(ia)) return;
                  const Matrix& y = t.value(self);
                  const Matrix& g = t.grad(self);
                  Matrix& out = t.grad_ref(ia);
                  for (Eigen::Index i = 0; i < y.rows(); ++i) {
                    double nrm = pre.row(i).norm();
                    double dot = y.row(i).dot(g.row(i));
                    out.row(i) += (g.row(i) - dot * y.row(i)) / nrm;
                  }
                });
}

double scalar(Var v) {
  const Matrix& m = v.value();
  assert(m.rows() == 1 && m.cols() == 1);
  return m(0, 0);
}

}  // namespace pgos::ad
