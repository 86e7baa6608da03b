#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "bierl/loop.hpp"
#include "bierl/nn.hpp"

namespace bierl {

inline constexpr int kCheckpointVersion = 1;

/// Everything needed to rebuild a meta model or resume a run.
///
/// On disk: 8-byte magic "BIERLCK\0", u64 little-endian header length, a
/// JSON header, then little-endian f64 payloads in header order
/// (meta, theta, h, buffer rows, BO points, BO values).
struct Checkpoint {
  int version = kCheckpointVersion;
  std::string encoder_hash;
  std::string generator_hash;
  /// LoopConfig and task snapshot, plus any caller extras.
  nlohmann::json config = nlohmann::json::object();

  Eigen::VectorXd meta;
  Eigen::VectorXd theta;
  double sigma = 0.0;
  double alpha = 0.0;

  std::int64_t iteration = 0;
  std::uint64_t inner_evals = 0;
  std::uint64_t lookahead_evals = 0;
  std::uint64_t meta_updates = 0;

  int buffer_capacity = 0;
  int buffer_width = 0;
  std::vector<PopulationFitness> buffer_rows;

  std::int64_t bo_rounds = 0;
  double bo_incumbent = 0.0;
  std::vector<BoObservation> bo_observations;

  bool operator==(const Checkpoint& other) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& cp);

/// Throws IoError when unreadable and FormatError on a bad magic, an
/// unknown version or a truncated/corrupt file.
Checkpoint load_checkpoint(const std::string& path);

/// As above, and also rejects a meta model whose spec hashes differ from
/// the expected architecture.
Checkpoint load_checkpoint(const std::string& path, const nn::LstmSpec& encoder,
                           const nn::MlpSpec& generator);

/// Snapshot of a run between two inner iterations.
Checkpoint capture(const LoopConfig& cfg, const FitnessTask& task, const RunState& state);

/// Rebuilds the run state. Throws FormatError when the checkpoint does not
/// belong to this configuration.
RunState restore(const Runner& runner, const Checkpoint& cp);

/// Meta-model-only checkpoint and back.
Checkpoint meta_checkpoint(const nn::MetaModel& meta, const nlohmann::json& config = nlohmann::json::object());
nn::MetaModel meta_from_checkpoint(const Checkpoint& cp, const nn::LstmSpec& encoder,
                                   const nn::MlpSpec& generator);

struct PretrainResult {
  nn::MetaModel meta;
  /// Inner plus lookahead evaluations spent on pretraining.
  std::uint64_t evaluations = 0;
  std::int64_t iterations = 0;
};

/// Integrated PM loop on `simple_task` for `meta_updates` meta updates
/// (meta_updates * k inner iterations); 0 returns the fresh initialization.
PretrainResult pretrain_meta(const FitnessTask& simple_task, int meta_updates, const LoopConfig& cfg);

}  // namespace bierl
