#include <fstream>
#include <sstream>

#include "json.hpp"

#include "dmtl/model.hpp"

namespace dmtl::model {

using nlohmann::ordered_json;

namespace {

constexpr const char* kFormat = "dmtl-checkpoint";
constexpr int kVersion = 1;

}  // namespace

ordered_json config_json(const DmtlConfig& c) {
  ordered_json j;
  j["user_dim"] = c.user_dim;
  j["item_dim"] = c.item_dim;
  j["h1"] = c.h1;
  j["h_attn"] = c.h_attn;
  j["h2"] = c.h2;
  j["classes"] = c.classes;
  j["lambda"] = c.lambda;
  j["learning_rate"] = c.learning_rate;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["members"] = to_string(c.members);
  j["max_members"] = c.max_members;
  j["center_output"] = c.center_output;
  return j;
}

namespace {

DmtlConfig config_from(const ordered_json& j) {
  DmtlConfig c;
  c.user_dim = j.at("user_dim").get<std::size_t>();
  c.item_dim = j.at("item_dim").get<std::size_t>();
  c.h1 = j.at("h1").get<std::size_t>();
  c.h_attn = j.at("h_attn").get<std::size_t>();
  c.h2 = j.at("h2").get<std::size_t>();
  c.classes = j.at("classes").get<std::size_t>();
  c.lambda = j.at("lambda").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.members = train_members_from_string(j.at("members").get<std::string>());
  c.max_members = j.at("max_members").get<std::size_t>();
  c.center_output = j.at("center_output").get<bool>();
  return c;
}

}  // namespace

std::string checkpoint_json(const DmtlConfig& config, const DmtlParams& params) {
  ordered_json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["config"] = config_json(config);
  ordered_json tensors = ordered_json::array();
  for (const Parameter* p : params.all()) {
    ordered_json t;
    t["name"] = p->name;
    t["rows"] = p->value.rows();
    t["cols"] = p->value.cols();
    t["data"] = std::vector<double>(p->value.flat().begin(), p->value.flat().end());
    tensors.push_back(std::move(t));
  }
  j["tensors"] = std::move(tensors);
  return j.dump();
}

void save_checkpoint(const std::filesystem::path& path, const DmtlConfig& config, const DmtlParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint '" + path.string() + "'");
  out << checkpoint_json(config, params);
}

Checkpoint parse_checkpoint(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat || j.at("version").get<int>() != kVersion) {
      throw SchemaError("checkpoint: unsupported format/version");
    }
    Checkpoint ck{config_from(j.at("config")), {}};
    ck.params = DmtlParams::init(ck.config);
    const auto& tensors = j.at("tensors");
    auto slots = ck.params.all();
    if (tensors.size() != slots.size()) throw SchemaError("checkpoint: expected " + std::to_string(slots.size()) + " tensors");
    for (std::size_t k = 0; k < slots.size(); ++k) {
      const auto& t = tensors[k];
      Parameter& p = *slots[k];
      if (t.at("name").get<std::string>() != p.name || t.at("rows").get<std::size_t>() != p.value.rows() ||
          t.at("cols").get<std::size_t>() != p.value.cols()) {
        throw SchemaError("checkpoint: tensor " + std::to_string(k) + " does not match '" + p.name + "' " +
                          numerics::shape_string(p.value));
      }
      p.value = Matrix(p.value.rows(), p.value.cols(), t.at("data").get<std::vector<double>>());
    }
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("checkpoint: ") + e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace dmtl::model
