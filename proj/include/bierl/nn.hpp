#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bierl/hyperparams.hpp"
#include "bierl/rng.hpp"

namespace bierl::nn {

enum class Activation { identity, tanh, sigmoid };

/// Fully connected network. Flat layout per layer: weights (fan_out x fan_in,
/// row-major) followed by biases (fan_out).
struct MlpSpec {
  int input_dim = 1;
  std::vector<int> hidden_dims;
  int output_dim = 1;
  Activation hidden_activation = Activation::tanh;
  Activation output_activation = Activation::identity;

  std::size_t param_count() const;
  std::string describe() const;
  void validate() const;
};

/// Single-layer LSTM over a sequence of `sequence_length` rows, each of
/// width `input_dim`. Flat layout: W_x (4H x input_dim, row-major),
/// W_h (4H x H, row-major), b (4H). Gate blocks are stacked in the order
/// input, forget, output, candidate.
struct LstmSpec {
  int input_dim = 1;
  int hidden_dim = 64;
  int sequence_length = 10;

  std::size_t param_count() const;
  std::string describe() const;
  void validate() const;
};

Eigen::VectorXd mlp_forward(const MlpSpec& spec, std::span<const double> params,
                            std::span<const double> x);

/// Final hidden state after running the recurrence over every row of
/// `sequence` (k x input_dim) from zero hidden and cell state.
Eigen::VectorXd lstm_forward(const LstmSpec& spec, std::span<const double> params,
                             const Eigen::MatrixXd& sequence);

/// Sigmoid-output MLP mapped affinely into the hyperparameter ranges.
HyperParams generator_forward(const MlpSpec& spec, std::span<const double> params,
                              std::span<const double> encoding, const HyperRanges& ranges);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
Eigen::VectorXd init_mlp(const MlpSpec& spec, rng::Engine& eng);

/// Same rule per matrix (fan_in = input_dim for W_x, hidden_dim for W_h and
/// b); forget-gate biases start at 1.
Eigen::VectorXd init_lstm(const LstmSpec& spec, rng::Engine& eng);

/// 64-bit FNV-1a of a string, as 16 hex digits.
std::string spec_hash(const std::string& text);

/// Meta-level model: LSTM encoder followed by the generator MLP, stored as a
/// single flat vector [encoder, generator] so ES perturbs both together.
class MetaModel {
public:
  MetaModel() = default;
  MetaModel(LstmSpec encoder, MlpSpec generator);

  /// Throws ConfigError if `flat` has the wrong length.
  static MetaModel from_flat(LstmSpec encoder, MlpSpec generator, Eigen::VectorXd flat);
  static MetaModel initialized(LstmSpec encoder, MlpSpec generator, std::uint64_t seed);

  const LstmSpec& encoder_spec() const { return encoder_; }
  const MlpSpec& generator_spec() const { return generator_; }
  const Eigen::VectorXd& flat() const { return params_; }
  Eigen::VectorXd& flat() { return params_; }

  std::span<const double> encoder_params() const;
  std::span<const double> generator_params() const;

  std::string encoder_hash() const { return spec_hash(encoder_.describe()); }
  std::string generator_hash() const { return spec_hash(generator_.describe()); }

  HyperParams propose(const Eigen::MatrixXd& window, const HyperRanges& ranges) const;

private:
  LstmSpec encoder_;
  MlpSpec generator_;
  Eigen::VectorXd params_;
};

/// Generator spec used by the meta level: encoder width -> hidden -> |H|.
MlpSpec generator_spec(int encoding_dim, int hidden);

}  // namespace bierl::nn
