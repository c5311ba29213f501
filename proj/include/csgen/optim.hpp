#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "csgen/tape.hpp"
#include "csgen/tensor.hpp"

namespace csgen::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard bias-corrected Adam over a fixed parameter set.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamConfig cfg = {})
      : params_(std::move(params)), cfg_(cfg) {
    for (Parameter* p : params_) {
      m_.emplace_back(p->value.rows, p->value.cols);
      v_.emplace_back(p->value.rows, p->value.cols);
    }
  }

  void zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Parameter& p = *params_[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad.data[i];
        m_[k].data[i] = cfg_.beta1 * m_[k].data[i] + (1.0 - cfg_.beta1) * g;
        v_[k].data[i] = cfg_.beta2 * v_[k].data[i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m_[k].data[i] / bc1;
        const double vhat = v_[k].data[i] / bc2;
        p.value.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

  std::int64_t steps_taken() const { return t_; }
  const std::vector<Parameter*>& params() const { return params_; }

 private:
  std::vector<Parameter*> params_;
  AdamConfig cfg_;
  std::vector<Tensor> m_, v_;
  std::int64_t t_ = 0;
};

inline double global_grad_norm(const std::vector<Parameter*>& params) {
  double sq = 0.0;
  for (const Parameter* p : params)
    for (double g : p->grad.data) sq += g * g;
  return std::sqrt(sq);
}

inline void clip_grad_norm(const std::vector<Parameter*>& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (norm <= max_norm || norm == 0.0) return;
  const double k = max_norm / norm;
  for (Parameter* p : params)
    for (double& g : p->grad.data) g *= k;
}

// Central finite differences against analytic gradients. `f` builds the
// scalar objective on a fresh tape from the current parameter values.
// Returns the max over coordinates of |g_fd - g| / max(1, |g_fd|, |g|).
inline double grad_check(const std::function<Var(Tape&)>& f,
                         const std::vector<Parameter*>& params, double h = 1e-5) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var loss = f(tape);
    tape.backward(loss);
  }
  std::vector<Tensor> analytic;
  for (Parameter* p : params) analytic.push_back(p->grad);

  auto eval = [&]() {
    Tape tape;
    return f(tape).value().item();
  };

  double max_err = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double orig = p.value.data[i];
      p.value.data[i] = orig + h;
      const double up = eval();
      p.value.data[i] = orig - h;
      const double down = eval();
      p.value.data[i] = orig;
      const double g_fd = (up - down) / (2.0 * h);
      const double g = analytic[k].data[i];
      const double err = std::abs(g_fd - g) / std::max({1.0, std::abs(g_fd), std::abs(g)});
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

}  // namespace csgen::nn
