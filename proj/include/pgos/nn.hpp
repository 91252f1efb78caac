#pragma once

#include <vector>

#include "pgos/autodiff.hpp"
#include "pgos/rng.hpp"
#include "pgos/types.hpp"

namespace pgos::nn {

enum class Activation { Relu, Tanh, Identity };

/// Fully-connected network. Weights are (in x out), biases 1 x out; inputs
/// are row-major batches (one sample per row). Hidden layers share one
/// activation, the output layer is linear.
struct Mlp {
  std::vector<Matrix> weights;
  std::vector<Matrix> biases;
  Activation hidden_act = Activation::Relu;

  int input_dim() const { return static_cast<int>(weights.front().rows()); }
  int output_dim() const { return static_cast<int>(weights.back().cols()); }
  std::size_t num_layers() const { return weights.size(); }
};

/// Xavier-uniform initialization, deterministic per stream.
Mlp make_mlp(const std::vector<int>& dims, Activation hidden_act,
             RngStream& rng);

Matrix mlp_forward(const Mlp& net, const Matrix& x);

/// Tape handles for one network's parameters within a forward pass.
struct MlpVars {
  std::vector<ad::Var> weights;
  std::vector<ad::Var> biases;
  Activation hidden_act = Activation::Relu;
};

MlpVars lift(ad::Tape& tape, const Mlp& net, bool trainable);
ad::Var mlp_forward(ad::Tape& tape, const MlpVars& net, ad::Var x);

/// Adam with bias correction. Moment buffers are keyed by position in the
/// parameter list, which must be stable across steps.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<Matrix*>& params,
            const std::vector<Matrix>& grads);

  double lr() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<Matrix> m_, v_;
};

// --- parameter flattening (shared by the optimizer plumbing and the
// finite-difference harness) ---
std::vector<Matrix*> collect(Mlp& net);
Eigen::VectorXd flatten(const std::vector<Matrix*>& params);
void unflatten(const Eigen::VectorXd& flat, const std::vector<Matrix*>& params);
Eigen::VectorXd flatten_grads(const std::vector<Matrix>& grads);

}  // namespace pgos::nn
