#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "dmtl/kernels.hpp"
#include "dmtl/model.hpp"

namespace dmtl::model {

using numerics::GradTape;
using numerics::NodeRef;

void DmtlConfig::validate() const {
  if (user_dim == 0 || item_dim == 0) throw ConfigError("DMTL input dimensions must be positive");
  if (h1 == 0 || h_attn == 0 || h2 == 0 || classes == 0) throw ConfigError("DMTL layer widths must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (max_members == 0) throw ConfigError("max_members must be positive");
}

std::string to_string(TrainMembers m) { return m == TrainMembers::contributors ? "contributors" : "group"; }

TrainMembers train_members_from_string(const std::string& s) {
  if (s == "contributors") return TrainMembers::contributors;
  if (s == "group") return TrainMembers::group;
  throw ConfigError("unknown training member mode '" + s + "'");
}

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Vector as_vector(const Parameter& p) {
  return Vector(std::vector<double>(p.value.flat().begin(), p.value.flat().end()));
}

}  // namespace

DmtlParams DmtlParams::init(const DmtlConfig& c) {
  c.validate();
  std::uint64_t k = 0;
  auto w = [&](const char* name, std::size_t rows, std::size_t cols) {
    return Parameter(name, numerics::init_weights(rows, cols, mix(c.seed, k++)));
  };
  auto b = [](const char* name, std::size_t rows) { return Parameter(name, numerics::init_bias(rows)); };
  DmtlParams p;
  p.w_u = w("W_u", c.h1, c.user_dim);
  p.b_u = b("b_u", c.h1);
  p.w_i = w("W_i", c.h1, c.item_dim);
  p.b_i = b("b_i", c.h1);
  p.w_concat = w("W_concat", c.h1, c.h1);
  p.b_concat = b("b_concat", c.h1);
  p.w_attn = w("W_attn", c.h_attn, c.h1);
  p.b_attn = b("b_attn", c.h_attn);
  p.w_score = w("W_score", c.h1, c.h_attn);
  p.b_score = b("b_score", c.h1);
  p.w_shared = w("W_shared", c.h2, c.h1);
  p.b_shared = b("b_shared", c.h2);
  p.w_profile = w("W_profile", c.classes, c.h2);
  p.b_profile = b("b_profile", c.classes);
  p.w_rec = w("W_rec", 1, c.classes);
  p.w_item = w("W_item", 1, c.h1);
  p.b_rec = b("b_rec", 1);
  return p;
}

std::vector<Parameter*> DmtlParams::all() {
  return {&w_u,      &b_u,      &w_i,       &b_i,       &w_concat, &b_concat, &w_attn,  &b_attn, &w_score,
          &b_score,  &w_shared, &b_shared,  &w_profile, &b_profile, &w_rec,   &w_item,  &b_rec};
}

std::vector<const Parameter*> DmtlParams::all() const {
  auto ptrs = const_cast<DmtlParams*>(this)->all();
  return {ptrs.begin(), ptrs.end()};
}

void DmtlParams::zero_grad() {
  for (Parameter* p : all()) p->zero_grad();
}

ForwardTrace forward(const DmtlParams& p, const Vector& x_u, const Vector& x_i) {
  ForwardTrace t;
  t.h_u = numerics::relu(numerics::affine(p.w_u.value, x_u, as_vector(p.b_u)));
  t.h_i = numerics::relu(numerics::affine(p.w_i.value, x_i, as_vector(p.b_i)));
  const Vector zero(p.embedding_dim());
  t.h_concat = numerics::add(numerics::add(numerics::affine(p.w_concat.value, t.h_u, zero),
                                           numerics::affine(p.w_concat.value, t.h_i, zero)),
                             as_vector(p.b_concat));
  t.h_attn = numerics::relu(numerics::affine(p.w_attn.value, t.h_concat, as_vector(p.b_attn)));
  t.alpha = numerics::softmax(numerics::affine(p.w_score.value, t.h_attn, as_vector(p.b_score)));
  t.h_attn_item = numerics::hadamard(t.alpha, t.h_i);
  t.h_combined = numerics::add(t.h_u, t.h_attn_item);
  t.z = numerics::relu(numerics::affine(p.w_shared.value, t.h_combined, as_vector(p.b_shared)));
  HeadOutput head = apply_heads(p, t.z, t.h_i);
  t.logits = std::move(head.logits);
  t.rating = head.rating;
  return t;
}

HeadOutput apply_heads(const DmtlParams& p, const Vector& z, const Vector& item_embedding) {
  HeadOutput out;
  out.logits = numerics::affine(p.w_profile.value, z, as_vector(p.b_profile));
  out.rating = numerics::affine(p.w_rec.value, out.logits, as_vector(p.b_rec))[0] +
               numerics::affine(p.w_item.value, item_embedding, Vector(1))[0];
  return out;
}

HeadOutput aggregate_group(const DmtlParams& p, std::span<const ForwardTrace> traces) {
  if (traces.empty()) throw DomainError("aggregate_group: empty group");
  Vector pooled(traces.front().z.dim());
  for (const ForwardTrace& t : traces) {
    if (t.h_i != traces.front().h_i) throw DomainError("aggregate_group: member traces are on different items");
    kernels::axpy(1.0, t.z.span(), pooled.span());
  }
  kernels::scale(1.0 / static_cast<double>(traces.size()), pooled.span());
  return apply_heads(p, pooled, traces.front().h_i);
}

NodeRef record_loss(GradTape& tape, DmtlParams& p, std::span<const Example> batch, const Features& features,
                    double lambda, LossParts* parts) {
  if (batch.empty()) throw DomainError("loss over an empty batch");
  if (!(lambda >= 0.0)) throw DomainError("lambda must be non-negative");

  struct Embedded {
    NodeRef h;
    NodeRef proj;
  };
  std::unordered_map<data::UserIndex, Embedded> users;
  std::unordered_map<data::ItemIndex, Embedded> items;
  auto user_node = [&](data::UserIndex u) -> const Embedded& {
    auto it = users.find(u);
    if (it != users.end()) return it->second;
    const NodeRef x = tape.constant(features.users.row_vector(u));
    const NodeRef h = tape.relu(tape.affine(p.w_u, x, &p.b_u));
    return users.emplace(u, Embedded{h, tape.affine(p.w_concat, h, nullptr)}).first->second;
  };
  auto item_node = [&](data::ItemIndex i) -> const Embedded& {
    auto it = items.find(i);
    if (it != items.end()) return it->second;
    const NodeRef x = tape.constant(features.items.row_vector(i));
    const NodeRef h = tape.relu(tape.affine(p.w_i, x, &p.b_i));
    return items.emplace(i, Embedded{h, tape.affine(p.w_concat, h, nullptr)}).first->second;
  };

  std::vector<NodeRef> preds, ces, zs;
  std::vector<double> targets;
  preds.reserve(batch.size());
  ces.reserve(batch.size());
  targets.reserve(batch.size());
  for (const Example& ex : batch) {
    if (ex.members.empty()) throw DomainError("training example without members");
    if (ex.label >= p.classes()) {
      throw IndexError("group label " + std::to_string(ex.label) + " >= class count " + std::to_string(p.classes()));
    }
    const Embedded item = item_node(ex.item);
    zs.clear();
    for (data::UserIndex u : ex.members) {
      const Embedded user = user_node(u);
      const NodeRef h_concat = tape.add_bias(tape.add(user.proj, item.proj), p.b_concat);
      const NodeRef h_attn = tape.relu(tape.affine(p.w_attn, h_concat, &p.b_attn));
      const NodeRef alpha = tape.softmax(tape.affine(p.w_score, h_attn, &p.b_score));
      const NodeRef h_comb = tape.add(user.h, tape.hadamard(alpha, item.h));
      zs.push_back(tape.relu(tape.affine(p.w_shared, h_comb, &p.b_shared)));
    }
    const NodeRef z = zs.size() == 1 ? zs.front() : tape.mean(zs);
    const NodeRef logits = tape.affine(p.w_profile, z, &p.b_profile);
    preds.push_back(tape.add(tape.affine(p.w_rec, logits, &p.b_rec), tape.affine(p.w_item, item.h, nullptr)));
    targets.push_back(ex.target);
    ces.push_back(tape.cross_entropy(logits, ex.label));
  }
  const NodeRef rec = tape.mse(preds, targets);
  const NodeRef profile = tape.mean(ces);
  const NodeRef total = tape.add(rec, tape.scale(profile, lambda));
  if (parts != nullptr) {
    parts->rec = tape.scalar(rec);
    parts->profile = tape.scalar(profile);
    parts->total = tape.scalar(total);
  }
  return total;
}

LossParts loss(const DmtlParams& p, std::span<const Example> batch, const Features& features, double lambda) {
  if (batch.empty()) throw DomainError("loss over an empty batch");
  if (!(lambda >= 0.0)) throw DomainError("lambda must be non-negative");
  LossParts parts;
  std::vector<ForwardTrace> traces;
  for (const Example& ex : batch) {
    if (ex.label >= p.classes()) {
      throw IndexError("group label " + std::to_string(ex.label) + " >= class count " + std::to_string(p.classes()));
    }
    const Vector x_i = features.items.row_vector(ex.item);
    traces.clear();
    for (data::UserIndex u : ex.members) traces.push_back(forward(p, features.users.row_vector(u), x_i));
    const HeadOutput out = aggregate_group(p, traces);
    const double d = ex.target - out.rating;
    parts.rec += d * d;
    parts.profile += numerics::cross_entropy_loss(out.logits, ex.label);
  }
  parts.rec /= static_cast<double>(batch.size());
  parts.profile /= static_cast<double>(batch.size());
  parts.total = parts.rec + lambda * parts.profile;
  return parts;
}

Scorer::Scorer(const DmtlParams& params, const Features& features) : params_(params) {
  const Vector zero(params.embedding_dim());
  const Vector b_u = as_vector(params.b_u);
  const Vector b_i = as_vector(params.b_i);
  user_h_.reserve(features.users.entity_count());
  for (std::size_t u = 0; u < features.users.entity_count(); ++u) {
    user_h_.push_back(numerics::relu(numerics::affine_sparse(params.w_u.value, features.users.row_vector(u), b_u)));
    user_proj_.push_back(numerics::affine(params.w_concat.value, user_h_.back(), zero));
  }
  for (std::size_t i = 0; i < features.items.entity_count(); ++i) {
    item_h_.push_back(numerics::relu(numerics::affine_sparse(params.w_i.value, features.items.row_vector(i), b_i)));
    item_proj_.push_back(numerics::affine(params.w_concat.value, item_h_.back(), zero));
  }
}

Vector Scorer::pair_z(data::UserIndex user, data::ItemIndex item) const {
  const DmtlParams& p = params_;
  Vector h_concat = numerics::add(user_proj_.at(user), item_proj_.at(item));
  for (std::size_t k = 0; k < h_concat.dim(); ++k) h_concat[k] += p.b_concat.value.flat()[k];
  const Vector h_attn = numerics::relu(numerics::affine(p.w_attn.value, h_concat, as_vector(p.b_attn)));
  const Vector alpha = numerics::softmax(numerics::affine(p.w_score.value, h_attn, as_vector(p.b_score)));
  const Vector h_comb = numerics::add(user_h_[user], numerics::hadamard(alpha, item_h_[item]));
  return numerics::relu(numerics::affine(p.w_shared.value, h_comb, as_vector(p.b_shared)));
}

HeadOutput Scorer::score_group(std::span<const data::UserIndex> members, data::ItemIndex item) const {
  if (members.empty()) throw DomainError("score_group: empty group");
  Vector pooled(params_.w_shared.value.rows());
  for (data::UserIndex u : members) kernels::axpy(1.0, pair_z(u, item).span(), pooled.span());
  kernels::scale(1.0 / static_cast<double>(members.size()), pooled.span());
  return apply_heads(params_, pooled, item_h_.at(item));
}

Vector Scorer::member_logits(data::UserIndex user, std::span<const data::ItemIndex> items) const {
  if (items.empty()) throw DomainError("member_logits: no items");
  Vector pooled(params_.w_shared.value.rows());
  for (data::ItemIndex i : items) kernels::axpy(1.0, pair_z(user, i).span(), pooled.span());
  kernels::scale(1.0 / static_cast<double>(items.size()), pooled.span());
  return numerics::affine(params_.w_profile.value, pooled, as_vector(params_.b_profile));
}

std::vector<data::ItemIndex> rank_top_k(std::span<const data::ItemIndex> candidates, std::span<const double> scores,
                                        std::size_t k) {
  if (candidates.size() != scores.size()) throw ShapeError("rank_top_k: candidate/score count mismatch");
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return candidates[a] < candidates[b];
  });
  order.resize(std::min(k, order.size()));
  std::vector<data::ItemIndex> out;
  out.reserve(order.size());
  for (std::size_t o : order) out.push_back(candidates[o]);
  return out;
}

std::vector<data::ItemIndex> recommend_top_k(const Scorer& scorer, std::span<const data::UserIndex> members,
                                             std::span<const data::ItemIndex> candidates, std::size_t k) {
  if (k == 0) throw ConfigError("recommend_top_k: K must be at least 1");
  if (candidates.empty()) throw DomainError("recommend_top_k: no candidates");
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (data::ItemIndex i : candidates) scores.push_back(scorer.score_group(members, i).rating);
  return rank_top_k(candidates, scores, k);
}

}  // namespace dmtl::model
