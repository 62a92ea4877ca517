#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cdlab/domain.hpp"
#include "cdlab/kernels.hpp"
#include "cdlab/linalg.hpp"
#include "cdlab/rng.hpp"

namespace cdlab {

// Learning rate eta_t = C t^{-beta}.
struct StepSchedule {
  double C = 1.0;
  double beta = 1.0;

  double eta(std::size_t t) const;
  void validate() const;
};

enum class BatchVariant { kOnline, kFullBatch, kWithReplacement, kReshuffle };

const char* to_string(BatchVariant v);

struct BatchSchedule {
  BatchVariant variant = BatchVariant::kOnline;
  // Ignored for kOnline (always 1) and kFullBatch (always n).
  std::size_t batch_size = 1;

  static BatchSchedule online() { return {BatchVariant::kOnline, 1}; }
  static BatchSchedule full_batch() { return {BatchVariant::kFullBatch, 0}; }
  static BatchSchedule with_replacement(std::size_t b) { return {BatchVariant::kWithReplacement, b}; }
  static BatchSchedule reshuffle(std::size_t b) { return {BatchVariant::kReshuffle, b}; }
};

enum class IterateStorage {
  kEveryUpdate,
  // Offline runs only: keep psi_{t,N} for each epoch. The running average
  // still covers every update.
  kEpochEnds,
};

struct CdConfig {
  CdConfig(ParamDomain domain_, Vector psi0_) : domain(std::move(domain_)), psi0(std::move(psi0_)) {}

  std::size_t m = 1;
  StepSchedule schedule;
  BatchSchedule batching;
  std::size_t epochs = 1;
  ParamDomain domain;
  Vector psi0;
  std::uint64_t seed = 0;
  IterateStorage storage = IterateStorage::kEveryUpdate;
  // Threads used for the chains of one update; results do not depend on it.
  std::size_t workers = 1;
};

struct Trajectory {
  // Post-projection iterates in update order (psi_0 excluded).
  std::vector<Vector> iterates;
  Vector final;
  // Arithmetic mean of all post-projection iterates.
  Vector average;
  std::size_t update_count = 0;
  // Updates whose raw step left the domain and was projected back.
  std::size_t projection_hits = 0;

  double projection_hit_fraction() const {
    return update_count == 0 ? 0.0 : static_cast<double>(projection_hits) / static_cast<double>(update_count);
  }
};

// Read-only random access to a dataset. Drivers only touch data through
// this interface, which lets tests count accesses.
class DataView {
 public:
  virtual ~DataView() = default;
  virtual std::size_t size() const = 0;
  virtual const Point& at(std::size_t i) const = 0;
};

class VectorData final : public DataView {
 public:
  explicit VectorData(const std::vector<Point>& points) : points_(&points) {}
  std::size_t size() const override { return points_->size(); }
  const Point& at(std::size_t i) const override { return (*points_)[i]; }

 private:
  const std::vector<Point>* points_;
};

// CD estimate of the cross-entropy gradient on a batch:
//   (1/B) sum_i (phi(X~_i) - phi(X_i)),  X~_i ~ k_psi^m(X_i, .)
// with a fresh chain started at every batch point. Its expectation equals
// -mean(phi(X_i)) + E[phi(X^psi)] when the chain is exact. All chains
// draw from `rng` in batch order.
Vector cd_gradient(const MarkovKernel& kernel, std::span<const Point> batch, const Vector& psi, std::size_t m,
                   Rng& rng);

// Same estimate over data[indices]; chain for data index i at update u uses
// substream (seed, kChain, u, i) and the reduction runs in index order, so
// the result is independent of `workers`.
Vector cd_gradient(const MarkovKernel& kernel, const DataView& data, std::span<const std::size_t> indices,
                   const Vector& psi, std::size_t m, std::uint64_t seed, std::uint64_t update_index,
                   std::size_t workers = 1);

inline Vector project(const Vector& psi, const ParamDomain& domain) { return domain.project(psi); }

// Single pass: update t consumes data point t only.
Trajectory online_cd(const DataView& data, const MarkovKernel& kernel, const CdConfig& cfg);
Trajectory online_cd(const std::vector<Point>& data, const MarkovKernel& kernel, const CdConfig& cfg);

// Epoch loop with full-batch, with-replacement or reshuffled minibatches.
// The step size is constant within an epoch.
Trajectory offline_cd(const DataView& data, const MarkovKernel& kernel, const CdConfig& cfg);
Trajectory offline_cd(const std::vector<Point>& data, const MarkovKernel& kernel, const CdConfig& cfg);

// Batches of epoch `epoch` (1-based) as sorted data indices. Exposed for tests.
std::vector<std::vector<std::size_t>> epoch_batches(const BatchSchedule& batching, std::size_t n, std::size_t epoch,
                                                    std::uint64_t first_update, std::uint64_t seed);

// Mean of the iterates after dropping the first floor(burn_in_fraction * count).
Vector polyak_average(const Trajectory& traj, double burn_in_fraction = 0.0);

// Smallest integer strictly above (1 - beta) log n / (2 |log alpha|).
std::size_t m_schedule(std::size_t n, double beta, double alpha);

}  // namespace cdlab
