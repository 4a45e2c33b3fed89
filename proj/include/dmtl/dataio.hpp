#pragma once

// Rating dataset ingestion: MovieLens `u.data` and header-driven CSV files,
// contiguous index maps, seeded train/test splits and the interaction-history
// feature vectors fed to clustering and to the network's embedding layers.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dmtl/numerics.hpp"

namespace dmtl::data {

using UserIndex = std::uint32_t;
using ItemIndex = std::uint32_t;

struct RatingScale {
  double min = 1.0;
  double max = 5.0;

  bool contains(double r) const noexcept { return r >= min && r <= max; }
  double clip(double r) const noexcept { return r < min ? min : (r > max ? max : r); }
};

/// One interaction with external ids, as read from a file.
struct RatingRecord {
  std::string user_id;
  std::string item_id;
  double rating = 0.0;
  std::optional<std::int64_t> timestamp;
};

/// One interaction with contiguous indices.
struct Rating {
  UserIndex user = 0;
  ItemIndex item = 0;
  double rating = 0.0;
  std::optional<std::int64_t> timestamp;

  bool operator==(const Rating&) const = default;
};

/// Bijection between external ids and 0..N-1, in order of first appearance.
class IndexMap {
 public:
  std::size_t intern(std::string_view id);
  std::optional<std::size_t> find(std::string_view id) const;
  const std::string& id_of(std::size_t index) const { return ids_.at(index); }
  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

/// Sparse rating store. Splits of one table share its index maps, so feature
/// dimensions and indices stay aligned across train and test.
class RatingsTable {
 public:
  RatingsTable();
  RatingsTable(std::shared_ptr<const IndexMap> users, std::shared_ptr<const IndexMap> items, RatingScale scale);

  /// Builds a table from raw records. Later duplicates of a (user, item) pair
  /// replace earlier ones and are counted in duplicates_dropped().
  static RatingsTable from_records(const std::vector<RatingRecord>& records, RatingScale scale);

  std::size_t user_count() const noexcept { return users_->size(); }
  std::size_t item_count() const noexcept { return items_->size(); }
  std::size_t size() const noexcept { return ratings_.size(); }
  bool empty() const noexcept { return ratings_.empty(); }
  /// Fraction of the user x item matrix left unobserved; 0 for an empty table.
  double sparsity() const noexcept;

  const std::vector<Rating>& ratings() const noexcept { return ratings_; }
  const IndexMap& users() const noexcept { return *users_; }
  const IndexMap& items() const noexcept { return *items_; }
  const std::shared_ptr<const IndexMap>& user_map() const noexcept { return users_; }
  const std::shared_ptr<const IndexMap>& item_map() const noexcept { return items_; }
  const RatingScale& scale() const noexcept { return scale_; }
  std::size_t duplicates_dropped() const noexcept { return duplicates_dropped_; }
  double global_mean() const noexcept;

  /// Same index maps, selected subset of ratings.
  RatingsTable subset(std::vector<Rating> ratings) const;
  /// Rating positions grouped by user (size user_count()).
  std::vector<std::vector<std::size_t>> by_user() const;
  /// Rating positions grouped by item (size item_count()).
  std::vector<std::vector<std::size_t>> by_item() const;

 private:
  std::shared_ptr<const IndexMap> users_;
  std::shared_ptr<const IndexMap> items_;
  RatingScale scale_;
  std::vector<Rating> ratings_;
  std::size_t duplicates_dropped_ = 0;
};

RatingsTable parse_movielens(const std::filesystem::path& path, RatingScale scale = {});
RatingsTable parse_movielens_text(std::string_view text, RatingScale scale = {});
std::string serialize_movielens(const RatingsTable& table);

struct CsvColumns {
  std::string user = "user_id";
  std::string item = "item_id";
  std::string rating = "rating";
  /// Empty means no timestamp column.
  std::string timestamp;
};

RatingsTable parse_generic_csv(const std::filesystem::path& path, const CsvColumns& columns, RatingScale scale = {});
RatingsTable parse_generic_csv_text(std::string_view text, const CsvColumns& columns, RatingScale scale = {});

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 42;
  bool stratified = true;
};

struct Split {
  RatingsTable train;
  RatingsTable test;
};

/// Seeded partition. Stratified mode splits each user's ratings separately
/// and always leaves at least one of them in train.
Split split(const RatingsTable& table, const SplitSpec& spec);

/// One dense feature row per entity.
struct FeatureMatrix {
  numerics::Matrix values;

  std::size_t entity_count() const noexcept { return values.rows(); }
  std::size_t dim() const noexcept { return values.cols(); }
  std::span<const double> row(std::size_t k) const noexcept { return values.row(k); }
  numerics::Vector row_vector(std::size_t k) const;
};

/// Row u = user u's ratings over all items, centred on the mean of the rated
/// entries and scaled to unit L2 norm (left at zero when the centred row is 0).
FeatureMatrix build_user_features(const RatingsTable& train);
/// Column view of the same construction: one row per item over all users.
FeatureMatrix build_item_features(const RatingsTable& train);

}  // namespace dmtl::data
