#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace clusterq {

/// Which elements must deviate by at least n*sigma from the winner before an
/// observation seeds a new cluster.
enum class GateMode : std::uint8_t {
  kAllElements,  // every element (default)
  kAnyElement,   // at least one element
};

struct ClusterParams {
  double tolerance_n = 1.0;
  double seed_variance = 1.0;
  double variance_floor = 1e-6;
  GateMode gate = GateMode::kAllElements;

  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;
};

struct Cluster {
  std::vector<double> mean;
  /// Variance the gate compares against: the seed variance while the cluster
  /// has one member, the floored population variance afterwards.
  std::vector<double> variance;
  /// Unfloored population variance of the members.
  std::vector<double> raw_variance;
  std::uint64_t count = 1;
};

/// Running-moment update of one cluster with a new member.
Cluster update_stats(const Cluster& cluster, std::span<const double> f, double variance_floor);

struct AssignResult {
  std::size_t winner = 0;
  bool created = false;
};

/// Online adaptive clustering of F_e vectors. Clusters are never merged or
/// removed, so an index is stable for the lifetime of the store.
class ClusterStore {
 public:
  ClusterStore(ClusterParams params, std::size_t dim);

  AssignResult assign(std::span<const double> f);

  /// Index of the nearest mean (Euclidean; ties to the lowest index).
  std::size_t nearest(std::span<const double> f) const;

  /// True when `f` deviates from cluster `k` enough to seed a new cluster.
  bool gate_open(std::size_t k, std::span<const double> f) const;

  std::vector<std::vector<double>> means() const;

  const std::vector<Cluster>& clusters() const { return clusters_; }
  std::size_t size() const { return clusters_.size(); }
  bool empty() const { return clusters_.empty(); }
  std::size_t dim() const { return dim_; }
  const ClusterParams& params() const { return params_; }
  std::uint64_t total_count() const;

  /// Rebuilds a store from serialized clusters.
  static ClusterStore restore(ClusterParams params, std::size_t dim, std::vector<Cluster> clusters);

 private:
  Cluster seed(std::span<const double> f) const;

  ClusterParams params_;
  std::size_t dim_;
  std::vector<Cluster> clusters_;
};

}  // namespace clusterq
