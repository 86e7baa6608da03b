#include "bierl/nn.hpp"

#include <cmath>
#include <sstream>

#include "bierl/errors.hpp"

namespace bierl::nn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void apply(Activation act, Eigen::VectorXd& v) {
  switch (act) {
    case Activation::identity:
      break;
    case Activation::tanh:
      v = v.array().tanh();
      break;
    case Activation::sigmoid:
      v = v.unaryExpr([](double x) { return sigmoid(x); });
      break;
  }
}

const char* name(Activation act) {
  switch (act) {
    case Activation::identity:
      return "identity";
    case Activation::tanh:
      return "tanh";
    case Activation::sigmoid:
      return "sigmoid";
  }
  return "?";
}

void fill_uniform(rng::Engine& eng, double bound, double* out, std::size_t count) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (std::size_t i = 0; i < count; ++i) out[i] = dist(eng);
}

}  // namespace

std::size_t MlpSpec::param_count() const {
  std::size_t total = 0;
  int fan_in = input_dim;
  for (int h : hidden_dims) {
    total += static_cast<std::size_t>(fan_in + 1) * static_cast<std::size_t>(h);
    fan_in = h;
  }
  return total + static_cast<std::size_t>(fan_in + 1) * static_cast<std::size_t>(output_dim);
}

std::string MlpSpec::describe() const {
  std::ostringstream os;
  os << "mlp:in=" << input_dim << ";hidden=";
  for (std::size_t i = 0; i < hidden_dims.size(); ++i) os << (i ? "," : "") << hidden_dims[i];
  os << ";out=" << output_dim << ";act=" << name(hidden_activation) << ";out_act="
     << name(output_activation);
  return os.str();
}

void MlpSpec::validate() const {
  if (input_dim < 1 || output_dim < 1) throw ConfigError("mlp dimensions must be positive");
  for (int h : hidden_dims)
    if (h < 1) throw ConfigError("mlp hidden widths must be positive");
}

std::size_t LstmSpec::param_count() const {
  const auto h = static_cast<std::size_t>(hidden_dim);
  return 4 * h * (static_cast<std::size_t>(input_dim) + h + 1);
}

std::string LstmSpec::describe() const {
  std::ostringstream os;
  os << "lstm:in=" << input_dim << ";hidden=" << hidden_dim << ";seq=" << sequence_length;
  return os.str();
}

void LstmSpec::validate() const {
  if (input_dim < 1 || hidden_dim < 1 || sequence_length < 1)
    throw ConfigError("lstm dimensions must be positive");
}

Eigen::VectorXd mlp_forward(const MlpSpec& spec, std::span<const double> params,
                            std::span<const double> x) {
  if (params.size() != spec.param_count())
    throw InvariantError("mlp expects " + std::to_string(spec.param_count()) + " parameters, got " +
                         std::to_string(params.size()));
  if (x.size() != static_cast<std::size_t>(spec.input_dim))
    throw InvariantError("mlp input has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(spec.input_dim));

  Eigen::VectorXd a = ConstVecMap(x.data(), static_cast<Eigen::Index>(x.size()));
  std::size_t offset = 0;
  const std::size_t layers = spec.hidden_dims.size() + 1;
  for (std::size_t layer = 0; layer < layers; ++layer) {
    const int fan_out = layer + 1 < layers ? spec.hidden_dims[layer] : spec.output_dim;
    const auto fan_in = a.size();
    ConstRowMap w(params.data() + offset, fan_out, fan_in);
    offset += static_cast<std::size_t>(fan_out * fan_in);
    ConstVecMap b(params.data() + offset, fan_out);
    offset += static_cast<std::size_t>(fan_out);
    Eigen::VectorXd z = w * a + b;
    apply(layer + 1 < layers ? spec.hidden_activation : spec.output_activation, z);
    a = std::move(z);
  }
  return a;
}

Eigen::VectorXd lstm_forward(const LstmSpec& spec, std::span<const double> params,
                             const Eigen::MatrixXd& sequence) {
  if (params.size() != spec.param_count())
    throw InvariantError("lstm expects " + std::to_string(spec.param_count()) +
                         " parameters, got " + std::to_string(params.size()));
  if (sequence.cols() != spec.input_dim)
    throw InvariantError("lstm row length " + std::to_string(sequence.cols()) + " != input_dim " +
                         std::to_string(spec.input_dim));
  if (sequence.rows() != spec.sequence_length)
    throw InvariantError("lstm sequence has " + std::to_string(sequence.rows()) +
                         " rows, expected " + std::to_string(spec.sequence_length));

  const Eigen::Index h = spec.hidden_dim;
  const Eigen::Index n = spec.input_dim;
  ConstRowMap wx(params.data(), 4 * h, n);
  ConstRowMap wh(params.data() + 4 * h * n, 4 * h, h);
  ConstVecMap b(params.data() + 4 * h * (n + h), 4 * h);

  Eigen::VectorXd hidden = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd cell = Eigen::VectorXd::Zero(h);
  for (Eigen::Index t = 0; t < sequence.rows(); ++t) {
    const Eigen::VectorXd z = wx * sequence.row(t).transpose() + wh * hidden + b;
    const auto sig = [](double v) { return sigmoid(v); };
    const Eigen::ArrayXd in_gate = z.segment(0, h).unaryExpr(sig).array();
    const Eigen::ArrayXd forget_gate = z.segment(h, h).unaryExpr(sig).array();
    const Eigen::ArrayXd out_gate = z.segment(2 * h, h).unaryExpr(sig).array();
    const Eigen::ArrayXd candidate = z.segment(3 * h, h).array().tanh();
    cell = (forget_gate * cell.array() + in_gate * candidate).matrix();
    hidden = (out_gate * cell.array().tanh()).matrix();
  }
  return hidden;
}

HyperParams generator_forward(const MlpSpec& spec, std::span<const double> params,
                              std::span<const double> encoding, const HyperRanges& ranges) {
  ranges.validate();
  if (spec.output_dim != static_cast<int>(HyperRanges::kCount))
    throw ConfigError("generator output_dim must equal the number of hyperparameters (2)");
  MlpSpec sig_spec = spec;
  sig_spec.output_activation = Activation::sigmoid;
  const Eigen::VectorXd o = mlp_forward(sig_spec, params, encoding);
  return {map_into_range(o[0], ranges.sigma, ranges.allow_degenerate),
          map_into_range(o[1], ranges.alpha, ranges.allow_degenerate)};
}

Eigen::VectorXd init_mlp(const MlpSpec& spec, rng::Engine& eng) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(spec.param_count()));
  std::size_t offset = 0;
  int fan_in = spec.input_dim;
  const std::size_t layers = spec.hidden_dims.size() + 1;
  for (std::size_t layer = 0; layer < layers; ++layer) {
    const int fan_out = layer + 1 < layers ? spec.hidden_dims[layer] : spec.output_dim;
    const auto count = static_cast<std::size_t>((fan_in + 1) * fan_out);
    fill_uniform(eng, 1.0 / std::sqrt(static_cast<double>(fan_in)), out.data() + offset, count);
    offset += count;
    fan_in = fan_out;
  }
  return out;
}

Eigen::VectorXd init_lstm(const LstmSpec& spec, rng::Engine& eng) {
  const auto h = static_cast<std::size_t>(spec.hidden_dim);
  const auto n = static_cast<std::size_t>(spec.input_dim);
  Eigen::VectorXd out(static_cast<Eigen::Index>(spec.param_count()));
  double* p = out.data();
  fill_uniform(eng, 1.0 / std::sqrt(static_cast<double>(n)), p, 4 * h * n);
  p += 4 * h * n;
  const double bound_h = 1.0 / std::sqrt(static_cast<double>(h));
  fill_uniform(eng, bound_h, p, 4 * h * h);
  p += 4 * h * h;
  fill_uniform(eng, bound_h, p, 4 * h);
  for (std::size_t i = 0; i < h; ++i) p[h + i] = 1.0;
  return out;
}

std::string spec_hash(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, hash >>= 4) out[static_cast<std::size_t>(i)] = digits[hash & 0xf];
  return out;
}

MlpSpec generator_spec(int encoding_dim, int hidden) {
  return MlpSpec{encoding_dim, {hidden}, static_cast<int>(HyperRanges::kCount), Activation::tanh,
                 Activation::sigmoid};
}

MetaModel::MetaModel(LstmSpec encoder, MlpSpec generator)
    : encoder_(encoder), generator_(std::move(generator)) {
  encoder_.validate();
  generator_.validate();
  if (generator_.input_dim != encoder_.hidden_dim)
    throw ConfigError("generator input_dim must equal encoder hidden_dim");
  params_ = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(encoder_.param_count() + generator_.param_count()));
}

MetaModel MetaModel::from_flat(LstmSpec encoder, MlpSpec generator, Eigen::VectorXd flat) {
  MetaModel m(encoder, std::move(generator));
  if (flat.size() != m.params_.size())
    throw ConfigError("meta parameter vector has length " + std::to_string(flat.size()) +
                      ", expected " + std::to_string(m.params_.size()));
  m.params_ = std::move(flat);
  return m;
}

MetaModel MetaModel::initialized(LstmSpec encoder, MlpSpec generator, std::uint64_t seed) {
  MetaModel m(encoder, std::move(generator));
  auto eng = rng::engine(seed);
  const auto enc = static_cast<Eigen::Index>(m.encoder_.param_count());
  m.params_.head(enc) = init_lstm(m.encoder_, eng);
  m.params_.tail(m.params_.size() - enc) = init_mlp(m.generator_, eng);
  return m;
}

std::span<const double> MetaModel::encoder_params() const {
  return {params_.data(), encoder_.param_count()};
}

std::span<const double> MetaModel::generator_params() const {
  return {params_.data() + encoder_.param_count(), generator_.param_count()};
}

HyperParams MetaModel::propose(const Eigen::MatrixXd& window, const HyperRanges& ranges) const {
  const Eigen::VectorXd encoding = lstm_forward(encoder_, encoder_params(), window);
  return generator_forward(generator_, generator_params(),
                           {encoding.data(), static_cast<std::size_t>(encoding.size())}, ranges);
}

}  // namespace bierl::nn
