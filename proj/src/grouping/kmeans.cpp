#include <limits>
#include <random>

#include "dmtl/grouping.hpp"
#include "dmtl/kernels.hpp"

namespace dmtl::grouping {

std::vector<std::vector<data::UserIndex>> GroupAssignment::members() const {
  std::vector<std::vector<data::UserIndex>> out(k);
  for (std::size_t u = 0; u < labels.size(); ++u) out[labels[u]].push_back(static_cast<data::UserIndex>(u));
  return out;
}

double kmeans_objective(const data::FeatureMatrix& features, const std::vector<GroupIndex>& labels,
                        const numerics::Matrix& centroids) {
  double total = 0.0;
  for (std::size_t p = 0; p < labels.size(); ++p) {
    total += kernels::squared_distance(features.row(p), centroids.row(labels[p]));
  }
  return total;
}

namespace {

numerics::Matrix seed_plus_plus(const data::FeatureMatrix& x, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = x.entity_count();
  numerics::Matrix centroids(k, x.dim());
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::size_t first = pick(rng);
  std::copy(x.row(first).begin(), x.row(first).end(), centroids.row(0).begin());
  std::vector<double> d2(n);
  for (std::size_t p = 0; p < n; ++p) d2[p] = kernels::squared_distance(x.row(p), centroids.row(0));

  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t chosen = 0;
    if (total <= 0.0) {
      chosen = pick(rng);
    } else {
      const double target = unit(rng) * total;
      double acc = 0.0;
      chosen = n - 1;
      for (std::size_t p = 0; p < n; ++p) {
        acc += d2[p];
        if (acc > target && d2[p] > 0.0) {
          chosen = p;
          break;
        }
      }
    }
    std::copy(x.row(chosen).begin(), x.row(chosen).end(), centroids.row(c).begin());
    for (std::size_t p = 0; p < n; ++p) {
      d2[p] = std::min(d2[p], kernels::squared_distance(x.row(p), centroids.row(c)));
    }
  }
  return centroids;
}

std::vector<GroupIndex> assign(const data::FeatureMatrix& x, const numerics::Matrix& centroids) {
  std::vector<GroupIndex> labels(x.entity_count());
  for (std::size_t p = 0; p < x.entity_count(); ++p) {
    double best = std::numeric_limits<double>::infinity();
    GroupIndex arg = 0;
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
      const double d = kernels::squared_distance(x.row(p), centroids.row(c));
      if (d < best) {
        best = d;
        arg = static_cast<GroupIndex>(c);
      }
    }
    labels[p] = arg;
  }
  return labels;
}

numerics::Matrix means(const data::FeatureMatrix& x, const std::vector<GroupIndex>& labels, std::size_t k,
                       std::vector<std::size_t>& counts) {
  numerics::Matrix centroids(k, x.dim());
  counts.assign(k, 0);
  for (std::size_t p = 0; p < labels.size(); ++p) {
    kernels::axpy(1.0, x.row(p), centroids.row(labels[p]));
    ++counts[labels[p]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] > 0) kernels::scale(1.0 / static_cast<double>(counts[c]), centroids.row(c));
  }
  return centroids;
}

// Recomputes centroids, moving the farthest point into each empty cluster.
numerics::Matrix update(const data::FeatureMatrix& x, std::vector<GroupIndex>& labels, std::size_t k,
                        const numerics::Matrix& previous) {
  std::vector<std::size_t> counts;
  numerics::Matrix centroids = means(x, labels, k, counts);
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] > 0) continue;
    double worst = 0.0;
    std::size_t far = labels.size();
    for (std::size_t p = 0; p < labels.size(); ++p) {
      if (counts[labels[p]] < 2) continue;
      const double d = kernels::squared_distance(x.row(p), centroids.row(labels[p]));
      if (d > worst) {
        worst = d;
        far = p;
      }
    }
    if (far == labels.size()) {
      // Fewer distinct points than clusters; keep the old centre.
      std::copy(previous.row(c).begin(), previous.row(c).end(), centroids.row(c).begin());
      continue;
    }
    --counts[labels[far]];
    labels[far] = static_cast<GroupIndex>(c);
    counts[c] = 1;
    centroids = means(x, labels, k, counts);
  }
  return centroids;
}

}  // namespace

GroupAssignment kmeans(const data::FeatureMatrix& features, const KMeansOptions& options) {
  const std::size_t n = features.entity_count();
  if (options.k == 0) throw ConfigError("kmeans: k must be at least 1");
  if (options.k > n) {
    throw ConfigError("kmeans: k=" + std::to_string(options.k) + " exceeds the " + std::to_string(n) + " entities");
  }
  if (options.max_iter == 0) throw ConfigError("kmeans: max_iter must be at least 1");

  std::mt19937_64 rng(options.seed);
  GroupAssignment out;
  out.k = options.k;
  numerics::Matrix centroids = seed_plus_plus(features, options.k, rng);
  std::vector<GroupIndex> labels = assign(features, centroids);
  out.objective_history.push_back(kmeans_objective(features, labels, centroids));

  while (true) {
    centroids = update(features, labels, options.k, centroids);
    ++out.iterations;
    out.objective_history.push_back(kmeans_objective(features, labels, centroids));
    if (out.iterations >= options.max_iter) break;
    std::vector<GroupIndex> next = assign(features, centroids);
    if (next == labels) break;
    labels = std::move(next);
    out.objective_history.push_back(kmeans_objective(features, labels, centroids));
  }

  out.labels = std::move(labels);
  out.centroids = std::move(centroids);
  out.objective = out.objective_history.back();
  return out;
}

}  // namespace dmtl::grouping
