#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "moba/learner/ppo.h"
#include "moba/net/network.h"
#include "moba/net/params.h"

namespace moba::learner {

struct UpdateStats {
  LossDiagnostics diag;
  uint64_t version = 0;
  // Learner version minus producing-model version, over the batch.
  double mean_staleness = 0;
  uint64_t max_staleness = 0;
};

// Owns the master weights (double) and the optimizer state. Gradients for a
// batch are computed by `shards` workers over disjoint slices of the batch and
// merged with average_gradients before a single Adam step.
class Learner {
 public:
  Learner(const net::Network& network, net::Params initial, PPOConfig cfg);

  UpdateStats update(std::span<const TrajectorySegment> batch, int shards = 1);

  // Full-batch gradient split over `shards` workers (exposed for tests).
  std::vector<double> gradient(std::span<const PreparedSegment> batch, int shards,
                               LossDiagnostics* diag = nullptr) const;

  const net::Params& params() const { return params_; }
  uint64_t version() const { return params_.version; }
  // Master weights rounded to binary32, as shipped to actors.
  net::Params snapshot() const;
  const PPOConfig& config() const { return cfg_; }
  const AdamState& adam() const { return adam_; }

 private:
  const net::Network& network_;
  net::Params params_;
  PPOConfig cfg_;
  AdamState adam_;
};

}  // namespace moba::learner
