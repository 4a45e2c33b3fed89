#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "dmtl/dataio.hpp"

namespace dmtl::data {

std::size_t IndexMap::intern(std::string_view id) {
  std::string key(id);
  auto [it, inserted] = lookup_.try_emplace(key, ids_.size());
  if (inserted) ids_.push_back(std::move(key));
  return it->second;
}

std::optional<std::size_t> IndexMap::find(std::string_view id) const {
  auto it = lookup_.find(std::string(id));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

RatingsTable::RatingsTable()
    : users_(std::make_shared<IndexMap>()), items_(std::make_shared<IndexMap>()) {}

RatingsTable::RatingsTable(std::shared_ptr<const IndexMap> users, std::shared_ptr<const IndexMap> items,
                           RatingScale scale)
    : users_(std::move(users)), items_(std::move(items)), scale_(scale) {}

RatingsTable RatingsTable::from_records(const std::vector<RatingRecord>& records, RatingScale scale) {
  auto users = std::make_shared<IndexMap>();
  auto items = std::make_shared<IndexMap>();
  std::vector<Rating> ratings;
  ratings.reserve(records.size());
  std::unordered_map<std::uint64_t, std::size_t> seen;
  std::size_t dropped = 0;
  for (const RatingRecord& rec : records) {
    if (!scale.contains(rec.rating) || !std::isfinite(rec.rating)) {
      throw ValidationError("rating " + std::to_string(rec.rating) + " for user '" + rec.user_id + "', item '" +
                            rec.item_id + "' is outside the scale [" + std::to_string(scale.min) + "," +
                            std::to_string(scale.max) + "]");
    }
    const auto u = static_cast<UserIndex>(users->intern(rec.user_id));
    const auto i = static_cast<ItemIndex>(items->intern(rec.item_id));
    const std::uint64_t key = (static_cast<std::uint64_t>(u) << 32) | i;
    Rating r{u, i, rec.rating, rec.timestamp};
    auto [it, inserted] = seen.try_emplace(key, ratings.size());
    if (inserted) {
      ratings.push_back(r);
    } else {
      ratings[it->second] = r;
      ++dropped;
    }
  }
  RatingsTable table(std::move(users), std::move(items), scale);
  table.ratings_ = std::move(ratings);
  table.duplicates_dropped_ = dropped;
  return table;
}

double RatingsTable::sparsity() const noexcept {
  const double cells = static_cast<double>(user_count()) * static_cast<double>(item_count());
  if (cells == 0.0) return 0.0;
  return 1.0 - static_cast<double>(ratings_.size()) / cells;
}

double RatingsTable::global_mean() const noexcept {
  if (ratings_.empty()) return 0.5 * (scale_.min + scale_.max);
  double acc = 0.0;
  for (const Rating& r : ratings_) acc += r.rating;
  return acc / static_cast<double>(ratings_.size());
}

RatingsTable RatingsTable::subset(std::vector<Rating> ratings) const {
  RatingsTable t(users_, items_, scale_);
  t.ratings_ = std::move(ratings);
  return t;
}

std::vector<std::vector<std::size_t>> RatingsTable::by_user() const {
  std::vector<std::vector<std::size_t>> out(user_count());
  for (std::size_t k = 0; k < ratings_.size(); ++k) out[ratings_[k].user].push_back(k);
  return out;
}

std::vector<std::vector<std::size_t>> RatingsTable::by_item() const {
  std::vector<std::vector<std::size_t>> out(item_count());
  for (std::size_t k = 0; k < ratings_.size(); ++k) out[ratings_[k].item].push_back(k);
  return out;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

// CSV fields may be double-quoted; quotes inside are doubled.
std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        field.push_back('"');
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::string(trim(field)));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(std::string(trim(field)));
  return out;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    fn(line_no, text.substr(start, end - start));
    start = end + 1;
  }
}

}  // namespace

RatingsTable parse_movielens_text(std::string_view text, RatingScale scale) {
  std::vector<RatingRecord> records;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (trim(line).empty()) return;
    const auto fields = split_fields(line, '\t');
    RatingRecord rec;
    std::int64_t ts = 0;
    if (fields.size() != 4 || trim(fields[0]).empty() || trim(fields[1]).empty() ||
        !parse_number(fields[2], rec.rating) || !parse_number(fields[3], ts)) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 'user<TAB>item<TAB>rating<TAB>timestamp'");
    }
    rec.user_id = std::string(trim(fields[0]));
    rec.item_id = std::string(trim(fields[1]));
    rec.timestamp = ts;
    if (!scale.contains(rec.rating)) {
      throw ValidationError("line " + std::to_string(line_no) + ": rating " + std::string(trim(fields[2])) +
                            " outside scale");
    }
    records.push_back(std::move(rec));
  });
  return RatingsTable::from_records(records, scale);
}

RatingsTable parse_movielens(const std::filesystem::path& path, RatingScale scale) {
  return parse_movielens_text(read_file(path), scale);
}

std::string serialize_movielens(const RatingsTable& table) {
  std::string out;
  out.reserve(table.size() * 24);
  char buf[64];
  for (const Rating& r : table.ratings()) {
    out += table.users().id_of(r.user);
    out += '\t';
    out += table.items().id_of(r.item);
    out += '\t';
    auto res = std::to_chars(buf, buf + sizeof buf, r.rating);
    out.append(buf, res.ptr);
    out += '\t';
    res = std::to_chars(buf, buf + sizeof buf, r.timestamp.value_or(0));
    out.append(buf, res.ptr);
    out += '\n';
  }
  return out;
}

RatingsTable parse_generic_csv_text(std::string_view text, const CsvColumns& columns, RatingScale scale) {
  std::vector<RatingRecord> records;
  std::optional<std::size_t> user_col, item_col, rating_col, ts_col;
  std::size_t width = 0;
  bool have_header = false;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (trim(line).empty()) return;
    const auto fields = split_csv(line);
    if (!have_header) {
      have_header = true;
      width = fields.size();
      auto locate = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t k = 0; k < fields.size(); ++k) {
          if (fields[k] == name) return k;
        }
        return std::nullopt;
      };
      user_col = locate(columns.user);
      item_col = locate(columns.item);
      rating_col = locate(columns.rating);
      std::string missing;
      if (!user_col) missing += " '" + columns.user + "'";
      if (!item_col) missing += " '" + columns.item + "'";
      if (!rating_col) missing += " '" + columns.rating + "'";
      if (!columns.timestamp.empty()) {
        ts_col = locate(columns.timestamp);
        if (!ts_col) missing += " '" + columns.timestamp + "'";
      }
      if (!missing.empty()) throw SchemaError("CSV header lacks column(s):" + missing);
      return;
    }
    if (fields.size() != width) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) + " fields, got " +
                       std::to_string(fields.size()));
    }
    RatingRecord rec;
    rec.user_id = fields[*user_col];
    rec.item_id = fields[*item_col];
    if (rec.user_id.empty() || rec.item_id.empty() || !parse_number(fields[*rating_col], rec.rating)) {
      throw ParseError("line " + std::to_string(line_no) + ": malformed user/item/rating");
    }
    if (ts_col) {
      std::int64_t ts = 0;
      if (!parse_number(fields[*ts_col], ts)) throw ParseError("line " + std::to_string(line_no) + ": bad timestamp");
      rec.timestamp = ts;
    }
    if (!scale.contains(rec.rating)) {
      throw ValidationError("line " + std::to_string(line_no) + ": rating " + fields[*rating_col] + " outside scale");
    }
    records.push_back(std::move(rec));
  });
  if (!have_header) return RatingsTable::from_records({}, scale);
  return RatingsTable::from_records(records, scale);
}

RatingsTable parse_generic_csv(const std::filesystem::path& path, const CsvColumns& columns, RatingScale scale) {
  return parse_generic_csv_text(read_file(path), columns, scale);
}

Split split(const RatingsTable& table, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1), got " + std::to_string(spec.train_fraction));
  }
  if (table.empty()) throw ConfigError("cannot split an empty table");

  std::mt19937_64 rng(spec.seed);
  std::vector<char> in_train(table.size(), 0);
  auto take = [&](std::vector<std::size_t>& positions, std::size_t n_train) {
    std::shuffle(positions.begin(), positions.end(), rng);
    for (std::size_t k = 0; k < n_train; ++k) in_train[positions[k]] = 1;
  };

  if (spec.stratified) {
    for (auto& positions : table.by_user()) {
      if (positions.empty()) continue;
      const auto want = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(positions.size())));
      take(positions, std::clamp<std::size_t>(want, 1, positions.size()));
    }
  } else {
    std::vector<std::size_t> positions(table.size());
    for (std::size_t k = 0; k < positions.size(); ++k) positions[k] = k;
    const auto want = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(table.size())));
    take(positions, want);
  }

  std::vector<Rating> train, test;
  for (std::size_t k = 0; k < table.size(); ++k) {
    (in_train[k] ? train : test).push_back(table.ratings()[k]);
  }
  return Split{table.subset(std::move(train)), table.subset(std::move(test))};
}

}  // namespace dmtl::data
