#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>
#ifdef __SSE2__
#include <immintrin.h>
#endif

#include "smlab/error.hpp"
#include "smlab/gridworld.hpp"
#include "smlab/rng.hpp"

namespace smlab {

/// Optimizer moments decay geometrically and sooner or later underflow into
/// denormal range, where hardware arithmetic runs orders of magnitude
/// slower. Training scopes flush denormals to zero; results stay
/// deterministic because every training path runs under the same mode.
class DenormalFlushScope {
 public:
  DenormalFlushScope() {
#ifdef __SSE2__
    saved_ = _mm_getcsr();
    _mm_setcsr(saved_ | 0x8040);  // FTZ | DAZ
#endif
  }
  ~DenormalFlushScope() {
#ifdef __SSE2__
    _mm_setcsr(saved_);
#endif
  }
  DenormalFlushScope(const DenormalFlushScope&) = delete;
  DenormalFlushScope& operator=(const DenormalFlushScope&) = delete;

 private:
#ifdef __SSE2__
  unsigned int saved_ = 0;
#endif
};

/// Fully connected net with rectifier hidden units and a linear output
/// layer, mapping an observation bit vector to one value per action.
/// Weights start Glorot-uniform (+-sqrt(6/(fan_in+fan_out))), biases at
/// zero, drawn deterministically from init_seed.
///
/// Observations are almost entirely zeros, so the hot paths take the set-bit
/// form (ObsIndices) and touch only the corresponding first-layer columns.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Mlp() = default;

  Mlp(std::vector<int> layer_sizes, std::uint64_t init_seed)
      : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) {
      throw ContractViolation("mlp: need at least input and output layers");
    }
    Rng rng(mix_seed({0x91fu, init_seed}));
    for (size_t l = 1; l < sizes_.size(); ++l) {
      const int fan_in = sizes_[l - 1];
      const int fan_out = sizes_[l];
      const double bound = std::sqrt(6.0 / (fan_in + fan_out));
      Matrix w(fan_out, fan_in);
      for (int c = 0; c < fan_in; ++c) {
        for (int r = 0; r < fan_out; ++r) {
          w(r, c) = static_cast<Scalar>(rng.uniform_real(-bound, bound));
        }
      }
      weights.push_back(std::move(w));
      biases.push_back(Vector::Zero(fan_out));
    }
  }

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(weights.size()); }
  const std::vector<int>& layer_sizes() const { return sizes_; }

  /// Dense forward pass (reference path; used by q_values and tests).
  Vector forward(const Vector& input) const {
    if (input.size() != input_size()) {
      throw ContractViolation("mlp: observation length does not match input layer");
    }
    Vector a = input;
    for (int l = 0; l < num_layers(); ++l) {
      Vector z = weights[l] * a + biases[l];
      if (l + 1 < num_layers()) z = z.cwiseMax(Scalar(0));
      a = std::move(z);
    }
    return a;
  }

  bool parameters_finite() const {
    for (int l = 0; l < num_layers(); ++l) {
      if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
    }
    return true;
  }

  std::vector<Matrix> weights;  // weights[l]: (sizes[l+1] x sizes[l])
  std::vector<Vector> biases;

 private:
  std::vector<int> sizes_;
};

/// Q-vector for one observation; length equals the action-space size.
template <typename Scalar>
std::vector<double> q_values(const Mlp<Scalar>& mlp, const Observation& obs) {
  typename Mlp<Scalar>::Vector in(mlp.input_size());
  if (static_cast<int>(obs.size()) != mlp.input_size()) {
    throw ContractViolation("q_values: observation length does not match input layer");
  }
  for (int i = 0; i < mlp.input_size(); ++i) in[i] = static_cast<Scalar>(obs[i]);
  auto out = mlp.forward(in);
  return std::vector<double>(out.data(), out.data() + out.size());
}

/// Per-layer gradient storage, same shapes as the net's parameters.
template <typename Scalar>
struct Gradients {
  using Matrix = typename Mlp<Scalar>::Matrix;
  using Vector = typename Mlp<Scalar>::Vector;
  std::vector<Matrix> dw;
  std::vector<Vector> db;

  void match_shape(const Mlp<Scalar>& mlp) {
    dw.clear();
    db.clear();
    for (int l = 0; l < mlp.num_layers(); ++l) {
      dw.push_back(Matrix::Zero(mlp.weights[l].rows(), mlp.weights[l].cols()));
      db.push_back(Vector::Zero(mlp.biases[l].size()));
    }
  }
  void set_zero() {
    for (auto& m : dw) m.setZero();
    for (auto& v : db) v.setZero();
  }
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with standard bias correction, folded into a per-step scale so the
/// parameter sweep stays a single fused array expression.
template <typename Scalar>
class Adam {
 public:
  using Matrix = typename Mlp<Scalar>::Matrix;
  using Vector = typename Mlp<Scalar>::Vector;

  Adam() = default;
  Adam(const Mlp<Scalar>& mlp, AdamConfig config) : cfg_(config) {
    for (int l = 0; l < mlp.num_layers(); ++l) {
      mw_.push_back(Matrix::Zero(mlp.weights[l].rows(), mlp.weights[l].cols()));
      vw_.push_back(Matrix::Zero(mlp.weights[l].rows(), mlp.weights[l].cols()));
      mb_.push_back(Vector::Zero(mlp.biases[l].size()));
      vb_.push_back(Vector::Zero(mlp.biases[l].size()));
    }
  }

  void step(Mlp<Scalar>& mlp, const Gradients<Scalar>& g) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const Scalar alpha = static_cast<Scalar>(cfg_.lr * std::sqrt(bc2) / bc1);
    const Scalar eps = static_cast<Scalar>(cfg_.eps * std::sqrt(bc2));
    for (size_t l = 0; l < mw_.size(); ++l) {
      sweep(mlp.weights[l].data(), mw_[l].data(), vw_[l].data(), g.dw[l].data(),
            mw_[l].size(), alpha, eps);
      sweep(mlp.biases[l].data(), mb_[l].data(), vb_[l].data(), g.db[l].data(),
            mb_[l].size(), alpha, eps);
    }
  }

  long step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  std::vector<Matrix>& moment1_w() { return mw_; }
  std::vector<Matrix>& moment2_w() { return vw_; }
  std::vector<Vector>& moment1_b() { return mb_; }
  std::vector<Vector>& moment2_b() { return vb_; }
  const std::vector<Matrix>& moment1_w() const { return mw_; }
  const std::vector<Matrix>& moment2_w() const { return vw_; }
  const std::vector<Vector>& moment1_b() const { return mb_; }
  const std::vector<Vector>& moment2_b() const { return vb_; }
  void set_step_count(long t) { t_ = t; }

 private:
  // One fused pass per parameter block; a plain loop so the compiler emits
  // straight-line vector code for the sqrt and divide.
  void sweep(Scalar* w, Scalar* m, Scalar* v, const Scalar* grad,
             Eigen::Index count, Scalar alpha, Scalar eps) {
    const Scalar b1 = static_cast<Scalar>(cfg_.beta1);
    const Scalar b2 = static_cast<Scalar>(cfg_.beta2);
    const Scalar c1 = Scalar(1) - b1;
    const Scalar c2 = Scalar(1) - b2;
    for (Eigen::Index i = 0; i < count; ++i) {
      const Scalar gi = grad[i];
      m[i] = b1 * m[i] + c1 * gi;
      v[i] = b2 * v[i] + c2 * gi * gi;
      w[i] -= alpha * m[i] / (std::sqrt(v[i]) + eps);
    }
  }

  AdamConfig cfg_;
  long t_ = 0;
  std::vector<Matrix> mw_, vw_;
  std::vector<Vector> mb_, vb_;
};

}  // namespace smlab
