#include <algorithm>
#include <map>

#include "dmtl/grouping.hpp"

namespace dmtl::grouping {

std::vector<std::vector<std::size_t>> GroupRatingsTable::by_group() const {
  std::vector<std::vector<std::size_t>> out(group_count);
  for (std::size_t k = 0; k < tuples.size(); ++k) out[tuples[k].group].push_back(k);
  return out;
}

GroupRatingsTable aggregate_group_ratings(const data::RatingsTable& table, const GroupAssignment& assignment) {
  if (assignment.labels.size() < table.user_count()) {
    throw DomainError("group assignment covers " + std::to_string(assignment.labels.size()) + " users, table has " +
                      std::to_string(table.user_count()));
  }
  struct Acc {
    double sum = 0.0;
    std::vector<data::UserIndex> members;
  };
  std::map<std::pair<GroupIndex, data::ItemIndex>, Acc> cells;
  for (const data::Rating& r : table.ratings()) {
    Acc& acc = cells[{assignment.labels[r.user], r.item}];
    acc.sum += r.rating;
    acc.members.push_back(r.user);
  }

  GroupRatingsTable out;
  out.group_count = assignment.k;
  out.scale = table.scale();
  out.tuples.reserve(cells.size());
  for (auto& [key, acc] : cells) {
    std::sort(acc.members.begin(), acc.members.end());
    GroupRating gr;
    gr.group = key.first;
    gr.item = key.second;
    gr.rating = out.scale.clip(acc.sum / static_cast<double>(acc.members.size()));
    gr.contributors = std::move(acc.members);
    out.tuples.push_back(std::move(gr));
  }
  return out;
}

}  // namespace dmtl::grouping
