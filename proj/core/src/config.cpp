#include "diffscribe/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "diffscribe/errors.hpp"

namespace diffscribe {
namespace {

using nlohmann::json;

template <typename T>
void read_key(const json& obj, const char* key, T& into) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    into = it->get<T>();
  } catch (const json::exception&) {
    throw BadConfigError(std::string("bad value type for key \"") + key + "\"");
  }
}

}  // namespace

RunConfig parse_config_json(const std::string& json_text) {
  json obj;
  try {
    obj = json::parse(json_text);
  } catch (const json::exception& e) {
    throw BadConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw BadConfigError("config root must be a JSON object");

  static const char* kKnownKeys[] = {
      "nl_min_count",  "code_min_count", "lowercase_nl", "d_hidden",    "d_embed",
      "dropout_p",     "learning_rate",  "grad_clip",    "batch_size",  "max_epochs",
      "seed",          "patience",       "log_every",    "variant",     "train_ratio",
      "valid_ratio",   "test_ratio",     "beam_width",   "max_len",     "mask_unk",
      "commits_dir",   "dataset_dir",    "checkpoint",   "out"};
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* k : kKnownKeys)
      if (key == k) {
        known = true;
        break;
      }
    if (!known) throw BadConfigError("unknown config key \"" + key + "\"");
  }

  RunConfig config;
  read_key(obj, "nl_min_count", config.tokenizer.nl_min_count);
  read_key(obj, "code_min_count", config.tokenizer.code_min_count);
  read_key(obj, "lowercase_nl", config.tokenizer.lowercase_nl);
  read_key(obj, "d_hidden", config.hyper.d_hidden);
  read_key(obj, "d_embed", config.hyper.d_embed);
  read_key(obj, "dropout_p", config.hyper.dropout_p);
  read_key(obj, "learning_rate", config.hyper.learning_rate);
  read_key(obj, "grad_clip", config.hyper.grad_clip);
  read_key(obj, "batch_size", config.hyper.batch_size);
  read_key(obj, "max_epochs", config.hyper.max_epochs);
  read_key(obj, "seed", config.hyper.seed);
  read_key(obj, "patience", config.patience);
  read_key(obj, "log_every", config.log_every);
  if (obj.contains("variant")) {
    std::string name;
    read_key(obj, "variant", name);
    config.variant = variant_from_string(name);
  }
  read_key(obj, "train_ratio", config.split_ratios[0]);
  read_key(obj, "valid_ratio", config.split_ratios[1]);
  read_key(obj, "test_ratio", config.split_ratios[2]);
  read_key(obj, "beam_width", config.beam_width);
  read_key(obj, "max_len", config.max_len);
  read_key(obj, "mask_unk", config.mask_unk);
  read_key(obj, "commits_dir", config.commits_dir);
  read_key(obj, "dataset_dir", config.dataset_dir);
  read_key(obj, "checkpoint", config.checkpoint);
  read_key(obj, "out", config.out);

  if (config.tokenizer.nl_min_count < 1 || config.tokenizer.code_min_count < 1)
    throw BadConfigError("min counts must be >= 1");
  if (config.hyper.dropout_p < 0.0 || config.hyper.dropout_p >= 1.0)
    throw BadConfigError("dropout_p must be in [0, 1)");
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BadConfigError("cannot read config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_json(ss.str());
}

std::string config_to_json(const RunConfig& config) {
  json obj;
  obj["nl_min_count"] = config.tokenizer.nl_min_count;
  obj["code_min_count"] = config.tokenizer.code_min_count;
  obj["lowercase_nl"] = config.tokenizer.lowercase_nl;
  obj["d_hidden"] = config.hyper.d_hidden;
  obj["d_embed"] = config.hyper.d_embed;
  obj["dropout_p"] = config.hyper.dropout_p;
  obj["learning_rate"] = config.hyper.learning_rate;
  obj["grad_clip"] = config.hyper.grad_clip;
  obj["batch_size"] = config.hyper.batch_size;
  obj["max_epochs"] = config.hyper.max_epochs;
  obj["seed"] = config.hyper.seed;
  obj["patience"] = config.patience;
  obj["log_every"] = config.log_every;
  obj["variant"] = to_string(config.variant);
  obj["train_ratio"] = config.split_ratios[0];
  obj["valid_ratio"] = config.split_ratios[1];
  obj["test_ratio"] = config.split_ratios[2];
  obj["beam_width"] = config.beam_width;
  obj["max_len"] = config.max_len;
  obj["mask_unk"] = config.mask_unk;
  obj["commits_dir"] = config.commits_dir;
  obj["dataset_dir"] = config.dataset_dir;
  obj["checkpoint"] = config.checkpoint;
  obj["out"] = config.out;
  return obj.dump();
}

}  // namespace diffscribe
