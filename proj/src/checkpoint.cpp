#include "bierl/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "bierl/config.hpp"
#include "bierl/errors.hpp"

namespace bierl {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 8> kMagic{'B', 'I', 'E', 'R', 'L', 'C', 'K', '\0'};

void put_u64(std::string& out, std::uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.append(b, 8);
}

void put_f64(std::string& out, double v) {
  char b[8];
  std::memcpy(b, &v, 8);
  out.append(b, 8);
}

class Reader {
public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size() || pos_ + n < pos_) throw FormatError("checkpoint is truncated");
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, bytes_.data() + pos_, 8);
    pos_ += 8;
    return v;
  }
  double f64() {
    need(8);
    double v;
    std::memcpy(&v, bytes_.data() + pos_, 8);
    pos_ += 8;
    return v;
  }
  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::uint64_t count_at(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw FormatError(std::string("checkpoint header field '") + key + "' is not a count");
  return v.get<std::uint64_t>();
}

}  // namespace

bool Checkpoint::operator==(const Checkpoint& o) const {
  auto same_vec = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.size() == b.size() &&
           (a.size() == 0 || std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
  };
  if (version != o.version || encoder_hash != o.encoder_hash || generator_hash != o.generator_hash ||
      config != o.config || !same_vec(meta, o.meta) || !same_vec(theta, o.theta) ||
      std::memcmp(&sigma, &o.sigma, 8) != 0 || std::memcmp(&alpha, &o.alpha, 8) != 0 ||
      iteration != o.iteration || inner_evals != o.inner_evals ||
      lookahead_evals != o.lookahead_evals || meta_updates != o.meta_updates ||
      buffer_capacity != o.buffer_capacity || buffer_width != o.buffer_width ||
      bo_rounds != o.bo_rounds || std::memcmp(&bo_incumbent, &o.bo_incumbent, 8) != 0 ||
      buffer_rows.size() != o.buffer_rows.size() || bo_observations.size() != o.bo_observations.size())
    return false;
  for (std::size_t i = 0; i < buffer_rows.size(); ++i)
    if (buffer_rows[i].iteration != o.buffer_rows[i].iteration ||
        buffer_rows[i].values != o.buffer_rows[i].values)
      return false;
  for (std::size_t i = 0; i < bo_observations.size(); ++i) {
    const auto& a = bo_observations[i];
    const auto& b = o.bo_observations[i];
    if (a.point != b.point || std::memcmp(&a.value, &b.value, 8) != 0 || a.round != b.round) return false;
  }
  return true;
}

void save_checkpoint(const std::string& path, const Checkpoint& cp) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : cp.buffer_rows) rows.push_back(r.iteration);
  nlohmann::json bo_rounds = nlohmann::json::array();
  for (const auto& o : cp.bo_observations) bo_rounds.push_back(o.round);
  const std::size_t bo_dim = cp.bo_observations.empty() ? 0 : cp.bo_observations.front().point.size();
  for (const auto& r : cp.buffer_rows)
    if (static_cast<int>(r.values.size()) != cp.buffer_width)
      throw InvariantError("buffer row width differs from the checkpoint's buffer width");
  for (const auto& o : cp.bo_observations)
    if (o.point.size() != bo_dim) throw InvariantError("BO observations have mixed dimensions");

  const nlohmann::json header{
      {"version", cp.version},
      {"encoder_hash", cp.encoder_hash},
      {"generator_hash", cp.generator_hash},
      {"config", cp.config},
      {"counters",
       {{"iteration", cp.iteration},
        {"inner_evals", cp.inner_evals},
        {"lookahead_evals", cp.lookahead_evals},
        {"meta_updates", cp.meta_updates},
        {"bo_rounds", cp.bo_rounds}}},
      {"payload",
       {{"meta", cp.meta.size()},
        {"theta", cp.theta.size()},
        {"buffer_capacity", cp.buffer_capacity},
        {"buffer_width", cp.buffer_width},
        {"buffer_iterations", rows},
        {"bo_dim", bo_dim},
        {"bo_rounds", bo_rounds}}}};
  const std::string head = header.dump(1);

  std::string out(kMagic.begin(), kMagic.end());
  put_u64(out, head.size());
  out += head;
  for (double v : cp.meta) put_f64(out, v);
  for (double v : cp.theta) put_f64(out, v);
  put_f64(out, cp.sigma);
  put_f64(out, cp.alpha);
  put_f64(out, cp.bo_incumbent);
  for (const auto& r : cp.buffer_rows)
    for (double v : r.values) put_f64(out, v);
  for (const auto& o : cp.bo_observations)
    for (double v : o.point) put_f64(out, v);
  for (const auto& o : cp.bo_observations) put_f64(out, o.value);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint '" + path + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read checkpoint '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string bytes = ss.str();

  Reader in(bytes);
  if (in.take(kMagic.size()) != std::string(kMagic.begin(), kMagic.end()))
    throw FormatError("'" + path + "' is not a checkpoint");
  const auto head_len = in.u64();
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(in.take(head_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header is corrupt: ") + e.what());
  }

  Checkpoint cp;
  try {
    cp.version = h.at("version").get<int>();
    if (cp.version != kCheckpointVersion)
      throw FormatError("checkpoint version " + std::to_string(cp.version) + " is not supported (expected " +
                        std::to_string(kCheckpointVersion) + ")");
    cp.encoder_hash = h.at("encoder_hash").get<std::string>();
    cp.generator_hash = h.at("generator_hash").get<std::string>();
    cp.config = h.at("config");
    const auto& c = h.at("counters");
    cp.iteration = c.at("iteration").get<std::int64_t>();
    cp.inner_evals = c.at("inner_evals").get<std::uint64_t>();
    cp.lookahead_evals = c.at("lookahead_evals").get<std::uint64_t>();
    cp.meta_updates = c.at("meta_updates").get<std::uint64_t>();
    cp.bo_rounds = c.at("bo_rounds").get<std::int64_t>();

    const auto& p = h.at("payload");
    const auto meta_n = count_at(p, "meta");
    const auto theta_n = count_at(p, "theta");
    cp.buffer_capacity = p.at("buffer_capacity").get<int>();
    cp.buffer_width = p.at("buffer_width").get<int>();
    if (cp.buffer_width < 0) throw FormatError("negative buffer width");
    const auto bo_dim = count_at(p, "bo_dim");
    const auto row_iters = p.at("buffer_iterations").get<std::vector<std::int64_t>>();
    const auto bo_rounds = p.at("bo_rounds").get<std::vector<std::int64_t>>();

    in.need(8 * meta_n);
    cp.meta.resize(static_cast<Eigen::Index>(meta_n));
    for (auto& v : cp.meta) v = in.f64();
    in.need(8 * theta_n);
    cp.theta.resize(static_cast<Eigen::Index>(theta_n));
    for (auto& v : cp.theta) v = in.f64();
    cp.sigma = in.f64();
    cp.alpha = in.f64();
    cp.bo_incumbent = in.f64();
    for (auto it : row_iters) {
      PopulationFitness row;
      row.iteration = it;
      in.need(8 * static_cast<std::size_t>(cp.buffer_width));
      row.values.resize(static_cast<std::size_t>(cp.buffer_width));
      for (auto& v : row.values) v = in.f64();
      cp.buffer_rows.push_back(std::move(row));
    }
    for (auto r : bo_rounds) {
      BoObservation o;
      o.round = r;
      in.need(8 * bo_dim);
      o.point.resize(bo_dim);
      for (auto& v : o.point) v = in.f64();
      cp.bo_observations.push_back(std::move(o));
    }
    for (auto& o : cp.bo_observations) o.value = in.f64();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header is malformed: ") + e.what());
  }
  if (!in.done()) throw FormatError("checkpoint has trailing bytes");
  return cp;
}

Checkpoint load_checkpoint(const std::string& path, const nn::LstmSpec& encoder, const nn::MlpSpec& generator) {
  Checkpoint cp = load_checkpoint(path);
  const auto enc = nn::spec_hash(encoder.describe());
  const auto gen = nn::spec_hash(generator.describe());
  if (cp.encoder_hash != enc || cp.generator_hash != gen)
    throw FormatError("meta model in '" + path + "' is incompatible with the configured architecture (encoder " +
                      cp.encoder_hash + " vs " + enc + ", generator " + cp.generator_hash + " vs " + gen + ")");
  return cp;
}

Checkpoint capture(const LoopConfig& cfg, const FitnessTask& task, const RunState& state) {
  Checkpoint cp;
  cp.encoder_hash = nn::spec_hash(cfg.encoder_spec().describe());
  cp.generator_hash = nn::spec_hash(cfg.generator_spec().describe());
  cp.config = {{"loop", to_json(cfg)}, {"task", to_json(task)}};
  if (state.meta) cp.meta = state.meta->flat();
  cp.theta = state.theta;
  cp.sigma = state.h.sigma;
  cp.alpha = state.h.alpha;
  cp.iteration = state.iteration;
  cp.inner_evals = state.inner_evals;
  cp.lookahead_evals = state.lookahead_evals;
  cp.meta_updates = state.meta_updates;
  cp.buffer_capacity = state.buffer.capacity();
  cp.buffer_width = state.buffer.width();
  cp.buffer_rows.assign(state.buffer.rows().begin(), state.buffer.rows().end());
  cp.bo_rounds = state.bo.rounds;
  cp.bo_incumbent = state.bo.incumbent;
  cp.bo_observations = state.bo.observations;
  return cp;
}

RunState restore(const Runner& runner, const Checkpoint& cp) {
  const auto& cfg = runner.config();
  if (!cp.config.contains("loop") || loop_from_json(cp.config.at("loop")).seed != cfg.seed ||
      to_json(loop_from_json(cp.config.at("loop"))) != to_json(cfg))
    throw FormatError("checkpoint was written by a different run configuration");
  if (cp.encoder_hash != nn::spec_hash(cfg.encoder_spec().describe()) ||
      cp.generator_hash != nn::spec_hash(cfg.generator_spec().describe()))
    throw FormatError("checkpoint meta model is incompatible with the configured architecture");

  RunState s = runner.initial_state();
  if (cp.theta.size() != s.theta.size()) throw FormatError("checkpoint theta has the wrong dimension");
  s.theta = cp.theta;
  if (s.meta) s.meta = nn::MetaModel::from_flat(cfg.encoder_spec(), cfg.generator_spec(), cp.meta);
  s.h = {cp.sigma, cp.alpha};
  s.iteration = cp.iteration;
  s.inner_evals = cp.inner_evals;
  s.lookahead_evals = cp.lookahead_evals;
  s.meta_updates = cp.meta_updates;
  if (cfg.mode == Mode::pm) {
    s.buffer = PopulationReplayBuffer(cp.buffer_capacity, cp.buffer_width);
    for (const auto& row : cp.buffer_rows) s.buffer.push(row);
  }
  s.bo.rounds = cp.bo_rounds;
  s.bo.incumbent = cp.bo_incumbent;
  s.bo.observations = cp.bo_observations;
  return s;
}

Checkpoint meta_checkpoint(const nn::MetaModel& meta, const nlohmann::json& config) {
  Checkpoint cp;
  cp.encoder_hash = meta.encoder_hash();
  cp.generator_hash = meta.generator_hash();
  cp.config = config;
  cp.meta = meta.flat();
  return cp;
}

nn::MetaModel meta_from_checkpoint(const Checkpoint& cp, const nn::LstmSpec& encoder,
                                   const nn::MlpSpec& generator) {
  if (cp.encoder_hash != nn::spec_hash(encoder.describe()) ||
      cp.generator_hash != nn::spec_hash(generator.describe()))
    throw FormatError("meta model is incompatible with the configured architecture");
  return nn::MetaModel::from_flat(encoder, generator, cp.meta);
}

PretrainResult pretrain_meta(const FitnessTask& simple_task, int meta_updates, const LoopConfig& cfg) {
  if (meta_updates < 0) throw ConfigError("pretraining meta updates must be >= 0");
  LoopConfig c = cfg;
  c.mode = Mode::pm;
  const Task task(simple_task);
  const Runner runner(c, task);
  RunState s = runner.initial_state();
  const std::int64_t iterations = static_cast<std::int64_t>(meta_updates) * c.meta.interval;
  runner.run(s, iterations);
  return {std::move(*s.meta), s.inner_evals + s.lookahead_evals, iterations};
}

}  // namespace bierl
