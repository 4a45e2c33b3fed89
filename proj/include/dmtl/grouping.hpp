#pragma once

// Group formation over user features and group-level rating aggregation.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dmtl/dataio.hpp"

namespace dmtl::grouping {

using GroupIndex = std::uint32_t;

struct GroupAssignment {
  std::vector<GroupIndex> labels;
  numerics::Matrix centroids;
  std::size_t k = 0;
  /// Within-cluster sum of squared distances for the final labels/centroids.
  double objective = 0.0;
  /// Objective after each Lloyd iteration, first entry after seeding.
  std::vector<double> objective_history;
  std::size_t iterations = 0;

  /// Member lists per group, ascending user index.
  std::vector<std::vector<data::UserIndex>> members() const;
};

struct KMeansOptions {
  std::size_t k = 20;
  std::uint64_t seed = 42;
  std::size_t max_iter = 100;
};

/// Lloyd's algorithm from k-means++ seeding. Stops when no label changes or
/// after max_iter iterations. A cluster that empties is re-seeded with the
/// point farthest from its current centroid.
GroupAssignment kmeans(const data::FeatureMatrix& features, const KMeansOptions& options);

double kmeans_objective(const data::FeatureMatrix& features, const std::vector<GroupIndex>& labels,
                        const numerics::Matrix& centroids);

struct GroupRating {
  GroupIndex group = 0;
  data::ItemIndex item = 0;
  /// Mean of the contributing members' ratings.
  double rating = 0.0;
  /// Members that rated the item, ascending.
  std::vector<data::UserIndex> contributors;

  std::size_t count() const noexcept { return contributors.size(); }
};

struct GroupRatingsTable {
  std::size_t group_count = 0;
  data::RatingScale scale;
  /// Sorted by (group, item).
  std::vector<GroupRating> tuples;

  /// Tuple positions per group.
  std::vector<std::vector<std::size_t>> by_group() const;
};

/// r_{g,i} = mean of the ratings members of g gave item i within `table`.
GroupRatingsTable aggregate_group_ratings(const data::RatingsTable& table, const GroupAssignment& assignment);

struct Projection {
  std::vector<double> x;
  std::vector<double> y;
  /// Variance captured by each of the two components.
  double variance[2] = {0.0, 0.0};
};

/// Scores on the top two principal components of the mean-centred rows.
Projection project_2d(const data::FeatureMatrix& features);

/// CSV `user_id,group,x,y`, one line per user in index order.
std::string projection_csv(const Projection& projection, const GroupAssignment& assignment, const data::IndexMap& users);

}  // namespace dmtl::grouping
