#include "clusterq/clustering.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace clusterq {

void ClusterParams::validate() const {
  if (!(tolerance_n > 0.0)) throw std::invalid_argument("clustering: tolerance_n must be > 0");
  if (!(seed_variance > 0.0)) throw std::invalid_argument("clustering: seed_variance must be > 0");
  if (!(variance_floor > 0.0) || variance_floor > seed_variance)
    throw std::invalid_argument("clustering: variance_floor must lie in (0, seed_variance]");
}

Cluster update_stats(const Cluster& cluster, std::span<const double> f, double variance_floor) {
  Cluster out = cluster;
  const double n = static_cast<double>(cluster.count);
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double mu_old = cluster.mean[j];
    const double mu_new = (n * mu_old + f[j]) / (n + 1.0);
    // Sum of squares is recovered with the old mean, centred with the new one.
    const double var_new = std::max(
        0.0, (n * (cluster.raw_variance[j] + mu_old * mu_old) + f[j] * f[j]) / (n + 1.0) - mu_new * mu_new);
    out.mean[j] = mu_new;
    out.raw_variance[j] = var_new;
    out.variance[j] = std::max(var_new, variance_floor);
  }
  out.count = cluster.count + 1;
  return out;
}

ClusterStore::ClusterStore(ClusterParams params, std::size_t dim) : params_(params), dim_(dim) {
  params_.validate();
  if (dim_ == 0) throw std::invalid_argument("clustering: dimension must be positive");
}

Cluster ClusterStore::seed(std::span<const double> f) const {
  Cluster c;
  c.mean.assign(f.begin(), f.end());
  c.variance.assign(dim_, params_.seed_variance);
  c.raw_variance.assign(dim_, 0.0);
  c.count = 1;
  return c;
}

std::size_t ClusterStore::nearest(std::span<const double> f) const {
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < clusters_.size(); ++k) {
    double d2 = 0.0;
    const auto& mu = clusters_[k].mean;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double d = f[j] - mu[j];
      d2 += d * d;
    }
    if (d2 < best_d2) {
      best_d2 = d2;
      best = k;
    }
  }
  return best;
}

bool ClusterStore::gate_open(std::size_t k, std::span<const double> f) const {
  const Cluster& c = clusters_.at(k);
  const bool any = params_.gate == GateMode::kAnyElement;
  for (std::size_t j = 0; j < dim_; ++j) {
    const bool dev = std::abs(f[j] - c.mean[j]) >= params_.tolerance_n * std::sqrt(c.variance[j]);
    if (dev == any) return any;
  }
  return !any;
}

AssignResult ClusterStore::assign(std::span<const double> f) {
  if (f.size() != dim_)
    throw std::invalid_argument("clustering: expected F_e of size " + std::to_string(dim_) +
                                ", got " + std::to_string(f.size()));
  if (clusters_.empty()) {
    clusters_.push_back(seed(f));
    return {0, true};
  }
  const std::size_t win = nearest(f);
  if (gate_open(win, f)) {
    clusters_.push_back(seed(f));
    return {clusters_.size() - 1, true};
  }
  clusters_[win] = update_stats(clusters_[win], f, params_.variance_floor);
  return {win, false};
}

std::vector<std::vector<double>> ClusterStore::means() const {
  std::vector<std::vector<double>> out;
  out.reserve(clusters_.size());
  for (const auto& c : clusters_) out.push_back(c.mean);
  return out;
}

std::uint64_t ClusterStore::total_count() const {
  std::uint64_t n = 0;
  for (const auto& c : clusters_) n += c.count;
  return n;
}

ClusterStore ClusterStore::restore(ClusterParams params, std::size_t dim,
                                   std::vector<Cluster> clusters) {
  ClusterStore s(params, dim);
  for (const auto& c : clusters) {
    if (c.mean.size() != dim || c.variance.size() != dim || c.raw_variance.size() != dim || c.count == 0)
      throw std::invalid_argument("clustering: malformed cluster in snapshot");
  }
  s.clusters_ = std::move(clusters);
  return s;
}

}  // namespace clusterq
