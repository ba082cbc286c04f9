#include "afbs/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

namespace afbs {
namespace {

using Points = std::vector<std::vector<double>>;

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

Points seed_plus_plus(const Points& points, int k, Rng& rng) {
  const std::size_t n = points.size();
  Points centers;
  std::vector<bool> chosen(n, false);
  std::size_t first = rng.uniform_index(n);
  centers.push_back(points[first]);
  chosen[first] = true;
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(points[i], centers[0]);

  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += chosen[i] ? 0.0 : d2[i];
    std::size_t pick;
    if (total > 0.0) {
      std::vector<double> w(n);
      for (std::size_t i = 0; i < n; ++i) w[i] = chosen[i] ? 0.0 : d2[i];
      pick = static_cast<std::size_t>(rng.categorical(w));
    } else {
      // All remaining points coincide with a center.
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) free.push_back(i);
      pick = free[rng.uniform_index(free.size())];
    }
    chosen[pick] = true;
    centers.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(points[i], centers.back()));
  }
  return centers;
}

double assign(const Points& points, const Points& centers, std::vector<int>& labels) {
  double objective = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double d = sq_dist(points[i], centers[c]);
      if (d < best) {
        best = d;
        best_c = static_cast<int>(c);
      }
    }
    labels[i] = best_c;
    objective += best;
  }
  return objective;
}

// Moves the point farthest from its centroid into each empty cluster. Only
// points whose cluster keeps at least one other member are eligible.
void repair_empty(const Points& points, Points& centers, std::vector<int>& labels,
                  bool relabel) {
  const std::size_t k = centers.size();
  std::vector<int> counts(k, 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] > 0) continue;
    double worst = -1.0;
    std::size_t worst_i = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto li = static_cast<std::size_t>(labels[i]);
      if (counts[li] < 2) continue;
      const double d = sq_dist(points[i], centers[li]);
      if (d > worst) {
        worst = d;
        worst_i = i;
      }
    }
    if (worst < 0.0) break;  // fewer points than clusters; cannot happen when n >= k
    centers[c] = points[worst_i];
    if (relabel) {
      --counts[static_cast<std::size_t>(labels[worst_i])];
      labels[worst_i] = static_cast<int>(c);
      ++counts[c];
    }
  }
}

KMeansResult lloyd(const Points& points, Points centers, const KMeansOptions& opt) {
  const std::size_t n = points.size();
  const std::size_t dim = points[0].size();
  const std::size_t k = centers.size();
  KMeansResult res;
  res.labels.assign(n, 0);

  for (int it = 0; it < opt.max_iterations; ++it) {
    res.objective = assign(points, centers, res.labels);
    res.objective_history.push_back(res.objective);
    res.iterations = it + 1;

    Points next(k, std::vector<double>(dim, 0.0));
    std::vector<int> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto l = static_cast<std::size_t>(res.labels[i]);
      ++counts[l];
      for (std::size_t j = 0; j < dim; ++j) next[l][j] += points[i][j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (auto& v : next[c]) v /= counts[c];
    }
    // Empty clusters keep their old centroid until repaired.
    for (std::size_t c = 0; c < k; ++c)
      if (counts[c] == 0) next[c] = centers[c];
    repair_empty(points, next, res.labels, /*relabel=*/false);

    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) shift = std::max(shift, std::sqrt(sq_dist(next[c], centers[c])));
    centers = std::move(next);
    if (shift <= opt.tolerance) break;
  }
  const double final_objective = assign(points, centers, res.labels);
  if (res.objective_history.empty() || final_objective != res.objective_history.back()) {
    res.objective_history.push_back(final_objective);
  }
  res.objective = final_objective;
  repair_empty(points, centers, res.labels, /*relabel=*/true);
  res.centroids = std::move(centers);
  return res;
}

}  // namespace

ClusterAssignment::ClusterAssignment(std::vector<ClientId> clients, std::vector<int> labels,
                                     std::vector<std::vector<double>> centroids)
    : clients_(std::move(clients)), labels_(std::move(labels)), centroids_(std::move(centroids)) {
  if (clients_.size() != labels_.size()) {
    throw std::invalid_argument("ClusterAssignment: clients/labels size mismatch");
  }
  ClientId max_id = -1;
  for (ClientId c : clients_) {
    if (c < 0) throw std::invalid_argument("ClusterAssignment: negative client id");
    max_id = std::max(max_id, c);
  }
  lookup_.assign(static_cast<std::size_t>(max_id + 1), -1);
  for (std::size_t i = 0; i < clients_.size(); ++i) {
    const int l = labels_[i];
    if (l < 0 || l >= k()) throw std::invalid_argument("ClusterAssignment: label out of range");
    lookup_[static_cast<std::size_t>(clients_[i])] = l;
  }
}

bool ClusterAssignment::contains(ClientId client) const {
  return client >= 0 && static_cast<std::size_t>(client) < lookup_.size() &&
         lookup_[static_cast<std::size_t>(client)] >= 0;
}

int ClusterAssignment::cluster_of(ClientId client) const {
  if (!contains(client)) {
    throw std::out_of_range(fmt::format("client {} has no cluster assignment", client));
  }
  return lookup_[static_cast<std::size_t>(client)];
}

KMeansResult kmeans(const Points& points, const KMeansOptions& opt, std::uint64_t seed) {
  if (opt.k < 1) throw ConfigError("k-means: k must be >= 1");
  if (points.size() < static_cast<std::size_t>(opt.k)) {
    throw ConfigError(
        fmt::format("k-means: {} points cannot form {} clusters", points.size(), opt.k));
  }
  const std::size_t dim = points[0].size();
  for (const auto& p : points) {
    if (p.size() != dim) throw std::invalid_argument("k-means: points differ in dimension");
  }

  KMeansResult best;
  bool have_best = false;
  const int restarts = std::max(1, opt.restarts);
  for (int r = 0; r < restarts; ++r) {
    Rng rng(mix_seed(seed, 0x6b6d, static_cast<std::uint64_t>(r)));
    auto result = lloyd(points, seed_plus_plus(points, opt.k, rng), opt);
    if (!have_best || result.objective < best.objective) {
      best = std::move(result);
      have_best = true;
    }
  }
  return best;
}

ClusterAssignment fit_kmeans(const std::vector<EncryptedDistribution>& encrypted,
                             const KMeansOptions& opt, std::uint64_t seed) {
  if (encrypted.empty()) throw ConfigError("fit_kmeans: no clients to cluster");
  const int d = encrypted.front().source_dim();
  const int p = encrypted.front().target_dim();
  Points points;
  std::vector<ClientId> ids;
  for (const auto& e : encrypted) {
    if (e.source_dim() != d || e.target_dim() != p) {
      throw std::invalid_argument("fit_kmeans: encrypted matrices differ in shape");
    }
    points.push_back(e.flatten());
    ids.push_back(e.client_id);
  }
  auto res = kmeans(points, opt, seed);
  return ClusterAssignment(std::move(ids), std::move(res.labels), std::move(res.centroids));
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("adjusted_rand_index: size mismatch");
  const double n = static_cast<double>(a.size());
  if (a.size() < 2) return 1.0;
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  auto c2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [key, v] : table) index += c2(v);
  for (const auto& [key, v] : rows) sum_rows += c2(v);
  for (const auto& [key, v] : cols) sum_cols += c2(v);
  const double expected = sum_rows * sum_cols / c2(n);
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;  // both partitions trivial and identical in shape
  return (index - expected) / (max_index - expected);
}

}  // namespace afbs
