#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "dmtl/model.hpp"

namespace dmtl::model {

std::vector<Example> make_examples(const grouping::GroupRatingsTable& table, const grouping::GroupAssignment& assignment,
                                   const DmtlConfig& config) {
  const auto members = assignment.members();
  std::vector<Example> out;
  out.reserve(table.tuples.size());
  for (const grouping::GroupRating& t : table.tuples) {
    Example ex;
    ex.item = t.item;
    ex.target = t.rating;
    ex.label = t.group;
    ex.members = config.members == TrainMembers::contributors ? t.contributors : members.at(t.group);
    out.push_back(std::move(ex));
  }
  return out;
}

TrainResult train(const DmtlConfig& config, const grouping::GroupRatingsTable& train_table,
                  const grouping::GroupAssignment& assignment, const Features& features,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_table.tuples.empty()) throw DomainError("train: no training tuples");
  if (config.classes != assignment.k) {
    throw ConfigError("DMTL class count " + std::to_string(config.classes) + " differs from group count " +
                      std::to_string(assignment.k));
  }

  TrainResult result{DmtlParams::init(config), {}};
  DmtlParams& params = result.params;
  const std::vector<Example> examples = make_examples(train_table, assignment, config);
  if (config.center_output) {
    double mean = 0.0;
    for (const Example& ex : examples) mean += ex.target;
    params.b_rec.value(0, 0) = mean / static_cast<double>(examples.size());
  }

  const std::vector<Parameter*> tensors = params.all();
  numerics::OptimizerState optimizer({.learning_rate = config.learning_rate}, tensors);
  std::mt19937_64 rng(config.seed ^ 0x5eed5eed5eed5eedULL);

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Example> batch;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochLog log{epoch};
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) {
        Example ex = examples[order[k]];
        if (ex.members.size() > config.max_members) {
          // Partial Fisher-Yates: a fresh member subset each epoch.
          for (std::size_t m = 0; m < config.max_members; ++m) {
            std::uniform_int_distribution<std::size_t> pick(m, ex.members.size() - 1);
            std::swap(ex.members[m], ex.members[pick(rng)]);
          }
          ex.members.resize(config.max_members);
          std::sort(ex.members.begin(), ex.members.end());
        }
        batch.push_back(std::move(ex));
      }

      params.zero_grad();
      numerics::GradTape tape;
      LossParts parts;
      const numerics::NodeRef total = record_loss(tape, params, batch, features, config.lambda, &parts);
      if (!std::isfinite(parts.total)) {
        std::ostringstream msg;
        msg << "non-finite loss in epoch " << epoch << " at learning rate " << config.learning_rate;
        throw DivergenceError(msg.str());
      }
      tape.backward(total);
      optimizer.step(tensors);

      const double w = static_cast<double>(batch.size());
      log.loss += parts.total * w;
      log.rec += parts.rec * w;
      log.profile += parts.profile * w;
    }
    const double n = static_cast<double>(examples.size());
    log.loss /= n;
    log.rec /= n;
    log.profile /= n;
    result.log.push_back(log);
    if (on_epoch && !on_epoch(log, params)) break;
  }
  return result;
}

}  // namespace dmtl::model
