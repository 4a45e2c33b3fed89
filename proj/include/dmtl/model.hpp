#pragma once

// Deep multi-task network for joint group profiling (classification of the
// group a representation belongs to) and group rating prediction.
//
//   h_u      = ReLU(W_u x_u + b_u)
//   h_i      = ReLU(W_i x_i + b_i)
//   h_concat = W_concat h_u + W_concat h_i + b_concat
//   h_attn   = ReLU(W_attn h_concat + b_attn)
//   alpha    = softmax(W_score h_attn + b_score)
//   h_comb   = h_u + alpha (.) h_i
//   z        = ReLU(W_shared h_comb + b_shared)
//   p        = W_profile z + b_profile                 (group logits)
//   r_hat    = W_rec p + W_item h_i + b_rec
//
// A group is scored by mean-pooling z over its members before both heads.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dmtl/dataio.hpp"
#include "dmtl/grouping.hpp"
#include "dmtl/numerics.hpp"
#include "json.hpp"

namespace dmtl::model {

using numerics::Matrix;
using numerics::Parameter;
using numerics::Vector;

/// Which members represent a group-item tuple during training.
enum class TrainMembers {
  /// Members who rated the item (the tuple's contributors).
  contributors,
  /// The whole group.
  group,
};

struct DmtlConfig {
  std::size_t user_dim = 0;
  std::size_t item_dim = 0;
  std::size_t h1 = 64;
  std::size_t h_attn = 32;
  std::size_t h2 = 64;
  std::size_t classes = 20;
  double lambda = 0.5;
  double learning_rate = 1e-3;
  std::size_t epochs = 30;
  std::size_t batch_size = 128;
  std::uint64_t seed = 42;
  TrainMembers members = TrainMembers::contributors;
  /// Per-epoch seeded subsample cap on the members of one tuple.
  std::size_t max_members = 8;
  /// Starts b_rec at the mean training rating instead of zero.
  bool center_output = true;

  void validate() const;
};

std::string to_string(TrainMembers m);
TrainMembers train_members_from_string(const std::string& s);

struct DmtlParams {
  Parameter w_u, b_u;
  Parameter w_i, b_i;
  Parameter w_concat, b_concat;
  Parameter w_attn, b_attn;
  Parameter w_score, b_score;
  Parameter w_shared, b_shared;
  Parameter w_profile, b_profile;
  Parameter w_rec, w_item, b_rec;

  static DmtlParams init(const DmtlConfig& config);

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  void zero_grad();

  std::size_t classes() const noexcept { return w_profile.value.rows(); }
  std::size_t embedding_dim() const noexcept { return w_u.value.rows(); }
};

/// Every intermediate of one user-item forward pass.
struct ForwardTrace {
  Vector h_u, h_i, h_concat, h_attn, alpha, h_attn_item, h_combined, z;
  Vector logits;
  double rating = 0.0;
};

ForwardTrace forward(const DmtlParams& params, const Vector& x_u, const Vector& x_i);

struct HeadOutput {
  Vector logits;
  double rating = 0.0;
};

/// Both heads applied to a shared representation z and item embedding e_i.
HeadOutput apply_heads(const DmtlParams& params, const Vector& z, const Vector& item_embedding);

/// Mean-pools z across member traces (all on one item) and applies the heads.
HeadOutput aggregate_group(const DmtlParams& params, std::span<const ForwardTrace> traces);

/// One group-item training tuple.
struct Example {
  std::vector<data::UserIndex> members;
  data::ItemIndex item = 0;
  double target = 0.0;
  std::size_t label = 0;
};

struct Features {
  const data::FeatureMatrix& users;
  const data::FeatureMatrix& items;
};

struct LossParts {
  double total = 0.0;
  double rec = 0.0;
  double profile = 0.0;
};

/// Records L = L_rec + lambda * L_profile for a batch on `tape`.
numerics::NodeRef record_loss(numerics::GradTape& tape, DmtlParams& params, std::span<const Example> batch,
                              const Features& features, double lambda, LossParts* parts = nullptr);

/// Value of the joint loss (no gradients).
LossParts loss(const DmtlParams& params, std::span<const Example> batch, const Features& features, double lambda);

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  double rec = 0.0;
  double profile = 0.0;
};

struct TrainResult {
  DmtlParams params;
  std::vector<EpochLog> log;
};

std::vector<Example> make_examples(const grouping::GroupRatingsTable& table, const grouping::GroupAssignment& assignment,
                                   const DmtlConfig& config);

/// Called after every epoch; returning false stops training early.
using EpochCallback = std::function<bool(const EpochLog&, const DmtlParams&)>;

TrainResult train(const DmtlConfig& config, const grouping::GroupRatingsTable& train_table,
                  const grouping::GroupAssignment& assignment, const Features& features,
                  const EpochCallback& on_epoch = {});

/// Caches per-user and per-item embeddings of a fixed parameter set so
/// group/item scoring only evaluates the pairwise layers.
class Scorer {
 public:
  Scorer(const DmtlParams& params, const Features& features);

  Vector pair_z(data::UserIndex user, data::ItemIndex item) const;
  HeadOutput score_group(std::span<const data::UserIndex> members, data::ItemIndex item) const;
  /// Logits averaged over the user's forward passes on `items`.
  Vector member_logits(data::UserIndex user, std::span<const data::ItemIndex> items) const;
  const DmtlParams& params() const noexcept { return params_; }

 private:
  const DmtlParams& params_;
  std::vector<Vector> user_h_, user_proj_;
  std::vector<Vector> item_h_, item_proj_;
};

/// Candidates ordered by score descending, ties by ascending item index; the
/// first min(k, size) are returned.
std::vector<data::ItemIndex> rank_top_k(std::span<const data::ItemIndex> candidates, std::span<const double> scores,
                                        std::size_t k);

std::vector<data::ItemIndex> recommend_top_k(const Scorer& scorer, std::span<const data::UserIndex> members,
                                             std::span<const data::ItemIndex> candidates, std::size_t k);

// Checkpoint: JSON object {"format":"dmtl-checkpoint","version":1,
// "config":{...},"tensors":[{"name","rows","cols","data"}...]}. Doubles are
// written with round-trip precision.
nlohmann::ordered_json config_json(const DmtlConfig& config);
std::string checkpoint_json(const DmtlConfig& config, const DmtlParams& params);
void save_checkpoint(const std::filesystem::path& path, const DmtlConfig& config, const DmtlParams& params);
struct Checkpoint {
  DmtlConfig config;
  DmtlParams params;
};
Checkpoint parse_checkpoint(const std::string& json_text);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dmtl::model
