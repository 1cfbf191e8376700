// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/io/config.h"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <set>
#include <sstream>

#include "avse/error.h"
#include "avse/io/bytes.h"

namespace avse::io {

namespace pt = boost::property_tree;

namespace {

// Calls fn(section, key, field) for every configurable field, in file order.
template <typename Config, typename Fn>
void visit(Config &c, Fn &&fn) {
  fn("model", "kernel", c.model.codec.kernel);
  fn("model", "stride", c.model.codec.stride);
  fn("model", "filters", c.model.codec.filters);
  fn("model", "d_emb", c.model.d_emb);
  fn("model", "repeats", c.model.repeats);
  fn("model", "chunk_size", c.model.chunk_size);
  fn("model", "chunk_hop", c.model.chunk_hop);
  fn("model", "rnn_hidden", c.model.rnn_hidden);
  fn("model", "visual_dims", c.model.visual_dims);
  fn("model", "visual_width", c.model.visual_width);
  fn("model", "visual_hidden", c.model.visual_hidden);
  fn("model", "fps", c.model.fps);
  fn("model", "sample_rate", c.model.sample_rate);
  fn("model", "norm_eps", c.model.norm_eps);

  fn("train", "lr_max", c.train.lr_max);
  fn("train", "warmup_n", c.train.warmup_n);
  fn("train", "batch_size", c.train.batch_size);
  fn("train", "max_epochs", c.train.max_epochs);
  fn("train", "plateau_patience", c.train.plateau_patience);
  fn("train", "stop_patience", c.train.stop_patience);
  fn("train", "isam_bypass_prob", c.train.isam_bypass_prob);
  fn("train", "face_dropout_prob", c.train.face_dropout_prob);
  fn("train", "grad_clip", c.train.grad_clip);
  fn("train", "cpu_budget_s", c.train.cpu_budget_s);
  fn("train", "shuffle_target", c.train.shuffle_target);
  fn("train", "seed", c.train.seed);

  fn("data", "speakers", c.data.speakers);
  fn("data", "duration_s", c.data.duration_s);
  fn("data", "overlap", c.data.overlap);
  fn("data", "sparse", c.data.sparse);
  fn("data", "snr_low_db", c.data.snr_low_db);
  fn("data", "snr_high_db", c.data.snr_high_db);
  fn("data", "min_turn", c.data.min_turn);
  fn("data", "fps", c.data.visual.fps);
  fn("data", "identity_dims", c.data.visual.identity_dims);
  fn("data", "noise_dims", c.data.visual.noise_dims);
  fn("data", "noise_amplitude", c.data.visual.noise_amplitude);
  fn("data", "floor_db", c.data.visual.floor_db);
  fn("data", "train_count", c.train_count);
  fn("data", "val_count", c.val_count);
  fn("data", "test_count", c.test_count);
}

std::string to_text(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}
std::string to_text(bool v) { return v ? "true" : "false"; }
template <typename Int>
std::string to_text(Int v) {
  return std::to_string(v);
}

template <typename T>
void parse_value(const std::string &where, const std::string &text, T &out) {
  if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1") {
      out = true;
    } else if (text == "false" || text == "0") {
      out = false;
    } else {
      fail(ErrorCode::kConfig, where + ": expected true or false, got '" + text + "'");
    }
  } else {
    const char *end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, out);
    if (res.ec != std::errc() || res.ptr != end) {
      fail(ErrorCode::kConfig, where + ": cannot parse '" + text + "'");
    }
  }
}

}  // namespace

RunConfig parse_config(const std::string &text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error &e) {
    fail(ErrorCode::kConfig, std::string(e.what()));
  }
  RunConfig config;
  std::set<std::string> known;
  visit(config, [&](const char *section, const char *key, auto &field) {
    const std::string path = std::string(section) + "." + key;
    known.insert(path);
    if (const auto value = tree.get_optional<std::string>(path)) {
      parse_value(path, *value, field);
    }
  });
  for (const auto &[section, entries] : tree) {
    if (entries.empty() && !entries.data().empty()) {
      fail(ErrorCode::kConfig, "key '" + section + "' outside a section");
    }
    for (const auto &[key, value] : entries) {
      if (!known.contains(section + "." + key)) {
        fail(ErrorCode::kConfig, "unknown key '" + key + "' in [" + section + "]");
      }
    }
  }
  config.model.validate();
  config.train.validate();
  config.data.validate();
  if (config.train_count == 0 || config.val_count == 0) {
    fail(ErrorCode::kConfig, "train_count and val_count must be positive");
  }
  return config;
}

std::string format_config(const RunConfig &config) {
  pt::ptree tree;
  RunConfig copy = config;
  visit(copy, [&](const char *section, const char *key, auto &field) {
    tree.put(std::string(section) + "." + key, to_text(field));
  });
  std::ostringstream out;
  pt::ini_parser::write_ini(out, tree);
  return out.str();
}

RunConfig load_config(const std::filesystem::path &path) {
  const auto bytes = read_file(path);
  return parse_config(std::string(bytes.begin(), bytes.end()));
}

void save_config(const std::filesystem::path &path, const RunConfig &config) {
  const std::string text = format_config(config);
  write_file(path, std::span(reinterpret_cast<const unsigned char *>(text.data()), text.size()));
}

}  // namespace avse::io
