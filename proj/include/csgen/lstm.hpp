#pragma once

#include <string>
#include <vector>

#include "csgen/rng.hpp"
#include "csgen/tape.hpp"
#include "csgen/tensor.hpp"

namespace csgen::nn {

// Standard LSTM cell. Gate layout in the fused [*, 4H] matrices is
// input | forget | candidate | output.
class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(std::string name, std::size_t input_dim, std::size_t hidden_dim)
      : input_dim_(input_dim),
        hidden_dim_(hidden_dim),
        w_x_(name + ".w_x", input_dim, 4 * hidden_dim),
        w_h_(name + ".w_h", hidden_dim, 4 * hidden_dim),
        bias_(name + ".bias", 1, 4 * hidden_dim) {}

  void init(Rng& rng, double scale) {
    w_x_.init_uniform(rng, scale);
    w_h_.init_uniform(rng, scale);
    bias_.value.fill(0.0);
    // forget-gate bias 1.0 eases early gradient flow
    for (std::size_t j = hidden_dim_; j < 2 * hidden_dim_; ++j) bias_.value.data[j] = 1.0;
  }

  struct State {
    Var h;
    Var c;
  };

  State initial(Tape& tape, std::size_t batch) const {
    return {tape.zeros(batch, hidden_dim_), tape.zeros(batch, hidden_dim_)};
  }

  State step(Tape& tape, Var x, State s) const {
    const std::size_t H = hidden_dim_;
    Var gates = add_rowvec(add(matmul(x, tape.param(w_x_)), matmul(s.h, tape.param(w_h_))),
                           tape.param(bias_));
    Var i = sigmoid(slice_cols(gates, 0, H));
    Var f = sigmoid(slice_cols(gates, H, 2 * H));
    Var g = tanh(slice_cols(gates, 2 * H, 3 * H));
    Var o = sigmoid(slice_cols(gates, 3 * H, 4 * H));
    Var c = add(mul(f, s.c), mul(i, g));
    Var h = mul(o, tanh(c));
    return {h, c};
  }

  // Rows with mask 0 keep their previous state; used for padded batches so
  // the final state of each row matches its unpadded run exactly.
  State step_masked(Tape& tape, Var x, State s, const std::vector<double>& mask) const {
    State next = step(tape, x, s);
    std::vector<double> inv(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) inv[i] = 1.0 - mask[i];
    return {add(scale_rows(next.h, mask), scale_rows(s.h, inv)),
            add(scale_rows(next.c, mask), scale_rows(s.c, inv))};
  }

  std::vector<Parameter*> params() { return {&w_x_, &w_h_, &bias_}; }

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }

 private:
  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  mutable Parameter w_x_, w_h_, bias_;
};

}  // namespace csgen::nn
