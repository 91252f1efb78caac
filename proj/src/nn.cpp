#include "pgos/nn.hpp"

#include <cassert>
#include <cmath>

namespace pgos::nn {

Mlp make_mlp(const std::vector<int>& dims, Activation hidden_act,
             RngStream& rng) {
  assert(dims.size() >= 2);
  Mlp net;
  net.hidden_act = hidden_act;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    int in = dims[l], out = dims[l + 1];
    double bound = std::sqrt(6.0 / (in + out));
    Matrix w(in, out);
    for (int i = 0; i < in; ++i)
      for (int j = 0; j < out; ++j) w(i, j) = rng.uniform(-bound, bound);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Matrix::Zero(1, out));
  }
  return net;
}

namespace {
Matrix apply_act(const Matrix& x, Activation act) {
  switch (act) {
    case Activation::Relu:
      return x.cwiseMax(0.0);
    case Activation::Tanh:
      return x.array().tanh();
    case Activation::Identity:
      return x;
  }
  return x;
}

ad::Var apply_act(ad::Tape&, ad::Var x, Activation act) {
  switch (act) {
    case Activation::Relu:
      return ad::relu(x);
    case Activation::Tanh:
      return ad::tanh_of(x);
    case Activation::Identity:
      return x;
  }
  return x;
}
}  // namespace

Matrix mlp_forward(const Mlp& net, const Matrix& x) {
  Matrix h = x;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    h = (h * net.weights[l]).rowwise() + net.biases[l].row(0);
    if (l + 1 < net.weights.size()) h = apply_act(h, net.hidden_act);
  }
  return h;
}

MlpVars lift(ad::Tape& tape, const Mlp& net, bool trainable) {
  MlpVars v;
  v.hidden_act = net.hidden_act;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    v.weights.push_back(tape.leaf(net.weights[l], trainable));
    v.biases.push_back(tape.leaf(net.biases[l], trainable));
  }
  return v;
}

ad::Var mlp_forward(ad::Tape& tape, const MlpVars& net, ad::Var x) {
  ad::Var h = x;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    h = ad::add_rowvec(ad::matmul(h, net.weights[l]), net.biases[l]);
    if (l + 1 < net.weights.size()) h = apply_act(tape, h, net.hidden_act);
  }
  return h;
}

void Adam::step(const std::vector<Matrix*>& params,
                const std::vector<Matrix>& grads) {
  assert(params.size() == grads.size());
  if (m_.empty()) {
    for (const Matrix* p : params) {
      m_.push_back(Matrix::Zero(p->rows(), p->cols()));
      v_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  assert(m_.size() == params.size());
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, t_);
  double bc2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Matrix& g = grads[k];
    if (g.size() == 0) continue;  // parameter untouched by this loss
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * g;
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * g.cwiseProduct(g);
    Matrix mhat = m_[k] / bc1;
    Matrix vhat = v_[k] / bc2;
    params[k]->array() -=
        lr_ * mhat.array() / (vhat.array().sqrt() + eps_);
  }
}

std::vector<Matrix*> collect(Mlp& net) {
  std::vector<Matrix*> out;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    out.push_back(&net.weights[l]);
    out.push_back(&net.biases[l]);
  }
  return out;
}

Eigen::VectorXd flatten(const std::vector<Matrix*>& params) {
  Eigen::Index total = 0;
  for (const Matrix* p : params) total += p->size();
  Eigen::VectorXd out(total);
  Eigen::Index at = 0;
  for (const Matrix* p : params) {
    out.segment(at, p->size()) =
        Eigen::Map<const Eigen::VectorXd>(p->data(), p->size());
    at += p->size();
  }
  return out;
}

void unflatten(const Eigen::VectorXd& flat,
               const std::vector<Matrix*>& params) {
  Eigen::Index at = 0;
  for (Matrix* p : params) {
    Eigen::Map<Eigen::VectorXd>(p->data(), p->size()) =
        flat.segment(at, p->size());
    at += p->size();
  }
}

Eigen::VectorXd flatten_grads(const std::vector<Matrix>& grads) {
  Eigen::Index total = 0;
  for (const Matrix& g : grads) total += g.size();
  Eigen::VectorXd out(total);
  Eigen::Index at = 0;
  for (const Matrix& g : grads) {
    out.segment(at, g.size()) =
        Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
    at += g.size();
  }
  return out;
}

}  // namespace pgos::nn
