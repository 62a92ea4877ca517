#include "cdlab/cd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include "cdlab/errors.hpp"

namespace cdlab {

double StepSchedule::eta(std::size_t t) const {
  if (t == 0) throw InvalidInput("StepSchedule::eta: t starts at 1");
  if (beta == 0.0) return C;
  return C * std::pow(static_cast<double>(t), -beta);
}

void StepSchedule::validate() const {
  // C = 0 is accepted so that frozen-parameter runs can be expressed.
  if (!(C >= 0.0) || !std::isfinite(C)) throw InvalidInput("StepSchedule: C must be finite and >= 0");
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidInput("StepSchedule: beta must lie in [0, 1]");
}

const char* to_string(BatchVariant v) {
  switch (v) {
    case BatchVariant::kOnline: return "online";
    case BatchVariant::kFullBatch: return "full_batch";
    case BatchVariant::kWithReplacement: return "with_replacement";
    case BatchVariant::kReshuffle: return "reshuffle";
  }
  return "unknown";
}

namespace {

void validate_common(const DataView& data, const MarkovKernel& kernel, const CdConfig& cfg) {
  cfg.schedule.validate();
  if (data.size() == 0) throw InvalidInput("CD: empty dataset");
  const Model& model = kernel.model();
  model.check_parameter(cfg.psi0);
  if (cfg.domain.dim() != model.dim()) throw InvalidInput("CD: domain dimension does not match the model");
  if (!cfg.domain.contains(cfg.psi0)) throw InvalidInput("CD: psi0 lies outside the domain");
}

// Runs fn(begin, end) over [0, count) split into contiguous chunks.
template <class Fn>
void parallel_chunks(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count / 32 + 1));
  if (workers == 1) {
    fn(std::size_t{0}, count);
    return;
  }
  std::vector<std::jthread> threads;
  threads.reserve(workers - 1);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t begin = std::min(count, w * chunk);
    const std::size_t end = std::min(count, begin + chunk);
    threads.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(std::size_t{0}, std::min(count, chunk));
}

class TrajectoryBuilder {
 public:
  TrajectoryBuilder(const Vector& psi0, IterateStorage storage, std::size_t reserve) : storage_(storage) {
    sum_ = Vector::Zero(psi0.size());
    traj_.final = psi0;
    if (storage_ == IterateStorage::kEveryUpdate) traj_.iterates.reserve(reserve);
  }

  void record(const Vector& psi, bool projected) {
    traj_.final = psi;
    sum_ += psi;
    ++traj_.update_count;
    if (projected) ++traj_.projection_hits;
    if (storage_ == IterateStorage::kEveryUpdate) traj_.iterates.push_back(psi);
  }

  void epoch_end(const Vector& psi) {
    if (storage_ == IterateStorage::kEpochEnds) traj_.iterates.push_back(psi);
  }

  Trajectory finish() {
    traj_.average = traj_.update_count == 0 ? traj_.final : Vector(sum_ / static_cast<double>(traj_.update_count));
    return std::move(traj_);
  }

 private:
  IterateStorage storage_;
  Vector sum_;
  Trajectory traj_;
};

// psi - eta h projected onto the domain; reports whether projection acted.
bool descend(Vector& psi, const Vector& h, double eta, const ParamDomain& domain) {
  Vector raw = psi - eta * h;
  const bool outside = (raw - domain.center()).norm() > domain.radius();
  psi = outside ? domain.project(raw) : std::move(raw);
  return outside;
}

}  // namespace

Vector cd_gradient(const MarkovKernel& kernel, std::span<const Point> batch, const Vector& psi, std::size_t m,
                   Rng& rng) {
  if (batch.empty()) throw InvalidInput("cd_gradient: empty batch");
  const Model& model = kernel.model();
  model.check_parameter(psi);
  Vector h = Vector::Zero(static_cast<Eigen::Index>(model.dim()));
  Vector phi_x, phi_y;
  for (const Point& x : batch) {
    const Point y = kernel.run(psi, x, m, rng);
    model.statistic_into(x, phi_x);
    model.statistic_into(y, phi_y);
    h += phi_y - phi_x;
  }
  return h / static_cast<double>(batch.size());
}

Vector cd_gradient(const MarkovKernel& kernel, const DataView& data, std::span<const std::size_t> indices,
                   const Vector& psi, std::size_t m, std::uint64_t seed, std::uint64_t update_index,
                   std::size_t workers) {
  if (indices.empty()) throw InvalidInput("cd_gradient: empty batch");
  const Model& model = kernel.model();
  model.check_parameter(psi);
  const auto p = static_cast<Eigen::Index>(model.dim());
  const std::size_t count = indices.size();

  auto chain_difference = [&](std::size_t k, Vector& phi_x, Vector& phi_y) {
    const std::size_t i = indices[k];
    if (i >= data.size()) throw InvalidInput("cd_gradient: data index out of range");
    const Point& x = data.at(i);
    Rng rng(seed, StreamTag::kChain, update_index, i);
    const Point y = kernel.run(psi, x, m, rng);
    model.statistic_into(x, phi_x);
    model.statistic_into(y, phi_y);
  };

  Vector h = Vector::Zero(p);
  if (workers <= 1 || count < 64) {
    Vector phi_x, phi_y;
    for (std::size_t k = 0; k < count; ++k) {
      chain_difference(k, phi_x, phi_y);
      h += phi_y - phi_x;
    }
  } else {
    Matrix diffs(p, static_cast<Eigen::Index>(count));
    parallel_chunks(count, workers, [&](std::size_t begin, std::size_t end) {
      Vector phi_x, phi_y;
      for (std::size_t k = begin; k < end; ++k) {
        chain_difference(k, phi_x, phi_y);
        diffs.col(static_cast<Eigen::Index>(k)) = phi_y - phi_x;
      }
    });
    for (std::size_t k = 0; k < count; ++k) h += diffs.col(static_cast<Eigen::Index>(k));
  }
  return h / static_cast<double>(count);
}

Trajectory online_cd(const DataView& data, const MarkovKernel& kernel, const CdConfig& cfg) {
  validate_common(data, kernel, cfg);
  if (cfg.batching.variant != BatchVariant::kOnline) throw InvalidInput("online_cd: batching must be online");
  const std::size_t n = data.size();
  TrajectoryBuilder builder(cfg.psi0, IterateStorage::kEveryUpdate, n);
  Vector psi = cfg.psi0;
  for (std::size_t t = 1; t <= n; ++t) {
    const std::size_t index = t - 1;
    const Vector h = cd_gradient(kernel, data, std::span<const std::size_t>(&index, 1), psi, cfg.m, cfg.seed, t);
    const bool projected = descend(psi, h, cfg.schedule.eta(t), cfg.domain);
    builder.record(psi, projected);
  }
  return builder.finish();
}

Trajectory online_cd(const std::vector<Point>& data, const MarkovKernel& kernel, const CdConfig& cfg) {
  return online_cd(VectorData(data), kernel, cfg);
}

std::vector<std::vector<std::size_t>> epoch_batches(const BatchSchedule& batching, std::size_t n, std::size_t epoch,
                                                    std::uint64_t first_update, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});

  switch (batching.variant) {
    case BatchVariant::kOnline:
      for (std::size_t i = 0; i < n; ++i) out.push_back({i});
      break;
    case BatchVariant::kFullBatch:
      out.push_back(all);
      break;
    case BatchVariant::kWithReplacement: {
      const std::size_t b = batching.batch_size;
      const std::size_t batches = (n + b - 1) / b;
      for (std::size_t j = 0; j < batches; ++j) {
        // uniform size-b subset, drawn independently for every update
        Rng rng(seed, StreamTag::kBatch, first_update + j);
        std::vector<std::size_t> pool = all;
        for (std::size_t k = 0; k < b; ++k) {
          const auto r = k + static_cast<std::size_t>(rng.index(n - k));
          std::swap(pool[k], pool[r]);
        }
        pool.resize(b);
        std::sort(pool.begin(), pool.end());
        out.push_back(std::move(pool));
      }
      break;
    }
    case BatchVariant::kReshuffle: {
      const std::size_t b = batching.batch_size;
      Rng rng(seed, StreamTag::kBatch, 0, epoch);
      std::vector<std::size_t> perm = all;
      for (std::size_t k = n; k > 1; --k) {
        const auto r = static_cast<std::size_t>(rng.index(k));
        std::swap(perm[k - 1], perm[r]);
      }
      for (std::size_t start = 0; start < n; start += b) {
        std::vector<std::size_t> batch(perm.begin() + static_cast<std::ptrdiff_t>(start),
                                       perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + b)));
        std::sort(batch.begin(), batch.end());
        out.push_back(std::move(batch));
      }
      break;
    }
  }
  return out;
}

Trajectory offline_cd(const DataView& data, const MarkovKernel& kernel, const CdConfig& cfg) {
  validate_common(data, kernel, cfg);
  const std::size_t n = data.size();
  BatchSchedule batching = cfg.batching;
  switch (batching.variant) {
    case BatchVariant::kOnline:
      throw InvalidInput("offline_cd: batching must be full_batch, with_replacement or reshuffle");
    case BatchVariant::kFullBatch:
      batching.batch_size = n;
      break;
    case BatchVariant::kWithReplacement:
    case BatchVariant::kReshuffle:
      if (batching.batch_size == 0 || batching.batch_size > n) {
        throw InvalidInput("offline_cd: batch size must lie in [1, n] (B = " + std::to_string(batching.batch_size) +
                           ", n = " + std::to_string(n) + ")");
      }
      break;
  }
  if (cfg.epochs < 1) throw InvalidInput("offline_cd: epochs must be >= 1");

  const std::size_t per_epoch = (n + batching.batch_size - 1) / batching.batch_size;
  TrajectoryBuilder builder(cfg.psi0, cfg.storage, cfg.storage == IterateStorage::kEveryUpdate
                                                       ? cfg.epochs * per_epoch
                                                       : cfg.epochs);
  Vector psi = cfg.psi0;
  std::uint64_t update = 0;
  for (std::size_t t = 1; t <= cfg.epochs; ++t) {
    const double eta = cfg.schedule.eta(t);
    const auto batches = epoch_batches(batching, n, t, update + 1, cfg.seed);
    for (const auto& batch : batches) {
      ++update;
      const Vector h = cd_gradient(kernel, data, batch, psi, cfg.m, cfg.seed, update, cfg.workers);
      const bool projected = descend(psi, h, eta, cfg.domain);
      builder.record(psi, projected);
    }
    builder.epoch_end(psi);
  }
  return builder.finish();
}

Trajectory offline_cd(const std::vector<Point>& data, const MarkovKernel& kernel, const CdConfig& cfg) {
  return offline_cd(VectorData(data), kernel, cfg);
}

Vector polyak_average(const Trajectory& traj, double burn_in_fraction) {
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
    throw InvalidInput("polyak_average: burn_in_fraction must lie in [0, 1)");
  }
  const std::size_t count = traj.iterates.size();
  const auto skip = static_cast<std::size_t>(std::floor(burn_in_fraction * static_cast<double>(count)));
  if (skip >= count) throw InvalidInput("polyak_average: no iterates left after burn-in");
  Vector sum = Vector::Zero(traj.iterates.front().size());
  for (std::size_t i = skip; i < count; ++i) sum += traj.iterates[i];
  return sum / static_cast<double>(count - skip);
}

std::size_t m_schedule(std::size_t n, double beta, double alpha) {
  if (n < 1) throw InvalidInput("m_schedule: n must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidInput("m_schedule: alpha must lie in (0, 1); no finite m satisfies the bound otherwise");
  }
  if (!(beta > 0.5 && beta < 1.0)) throw InvalidInput("m_schedule: beta must lie in (1/2, 1)");
  const double threshold = (1.0 - beta) * std::log(static_cast<double>(n)) / (2.0 * std::abs(std::log(alpha)));
  return static_cast<std::size_t>(std::floor(threshold)) + 1;
}

}  // namespace cdlab
