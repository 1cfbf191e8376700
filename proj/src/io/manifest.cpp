// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/io/manifest.h"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "avse/error.h"
#include "avse/io/bytes.h"
#include "avse/io/visual_file.h"
#include "avse/io/wav.h"

namespace avse::io {

using nlohmann::json;

namespace {

constexpr double kPeakLimit = 0.99;

double peak_of(const Waveform &w) {
  double p = 0.0;
  for (double v : w) p = std::max(p, std::abs(v));
  return p;
}

Waveform scaled(const Waveform &w, double scale) {
  Waveform out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] * scale;
  return out;
}

}  // namespace

std::string format_record(const ManifestRecord &r) {
  json schedule = json::array();
  for (const auto &track : r.schedule.tracks) {
    json t = json::array();
    for (const auto &iv : track) t.push_back({iv.start, iv.end});
    schedule.push_back(std::move(t));
  }
  json j;
  j["id"] = r.id;
  j["seed"] = r.seed;
  j["length"] = r.length;
  j["scale"] = r.scale;
  j["snrs_db"] = r.snrs_db;
  j["mixture"] = r.mixture;
  j["sources"] = r.sources;
  j["faces"] = r.faces;
  j["schedule"] = std::move(schedule);
  return j.dump();
}

ManifestRecord parse_record(const std::string &line) {
  ManifestRecord r;
  try {
    const json j = json::parse(line);
    r.id = j.at("id").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.length = j.at("length").get<std::size_t>();
    r.scale = j.at("scale").get<double>();
    r.snrs_db = j.at("snrs_db").get<std::vector<double>>();
    r.mixture = j.at("mixture").get<std::string>();
    r.sources = j.at("sources").get<std::vector<std::string>>();
    r.faces = j.at("faces").get<std::vector<std::string>>();
    r.schedule.total_len = r.length;
    for (const auto &t : j.at("schedule")) {
      std::vector<Interval> track;
      for (const auto &iv : t) {
        track.push_back({iv.at(0).get<std::size_t>(), iv.at(1).get<std::size_t>()});
      }
      r.schedule.tracks.push_back(std::move(track));
    }
  } catch (const json::exception &e) {
    fail(ErrorCode::kFormat, std::string("manifest record: ") + e.what());
  }
  const std::size_t n = r.sources.size();
  if (n < 1 || r.faces.size() != n || r.schedule.tracks.size() != n ||
      r.snrs_db.size() + 1 != n) {
    fail(ErrorCode::kFormat, "manifest record " + r.id + ": inconsistent speaker counts");
  }
  for (const auto &track : r.schedule.tracks) {
    for (const auto &iv : track) {
      if (iv.start >= iv.end || iv.end > r.length) {
        fail(ErrorCode::kFormat, "manifest record " + r.id + ": interval out of range");
      }
    }
  }
  return r;
}

std::filesystem::path write_dataset(const std::filesystem::path &dir,
                                    const std::vector<Example> &examples) {
  std::string text;
  for (const auto &ex : examples) {
    double peak = peak_of(ex.sample.mixture);
    for (const auto &s : ex.sample.sources) peak = std::max(peak, peak_of(s));
    ManifestRecord r;
    r.id = ex.id;
    r.seed = ex.seed;
    r.length = ex.length();
    r.scale = peak > kPeakLimit ? kPeakLimit / peak : 1.0;
    r.snrs_db = ex.sample.snrs_db;
    r.schedule = ex.sample.schedule;
    r.mixture = ex.id + "/mixture.wav";
    write_wav(dir / r.mixture, scaled(ex.sample.mixture, r.scale));
    for (std::size_t k = 0; k < ex.speakers(); ++k) {
      r.sources.push_back(ex.id + "/source" + std::to_string(k) + ".wav");
      write_wav(dir / r.sources.back(), scaled(ex.sample.sources[k], r.scale));
      r.faces.push_back(ex.id + "/face" + std::to_string(k) + ".vis");
      write_visual_stream(dir / r.faces.back(), ex.faces[k]);
    }
    text += format_record(r);
    text += '\n';
  }
  const auto path = dir / "manifest.jsonl";
  write_file(path, std::span(reinterpret_cast<const unsigned char *>(text.data()), text.size()));
  return path;
}

ManifestReader::ManifestReader(const std::filesystem::path &path)
    : path_(path), base_(path.parent_path()), in_(path) {
  if (!in_) fail(ErrorCode::kIo, "cannot open manifest " + path.string());
}

std::optional<ManifestRecord> ManifestReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      return parse_record(line);
    } catch (const Error &e) {
      fail(e.code(), path_.string() + ":" + std::to_string(line_no_) + ": " + e.what());
    }
  }
  return std::nullopt;
}

Example load_example(const ManifestRecord &r, const std::filesystem::path &base) {
  Example ex;
  ex.id = r.id;
  ex.seed = r.seed;
  ex.sample.mixture = read_wav(base / r.mixture);
  ex.sample.snrs_db = r.snrs_db;
  ex.sample.schedule = r.schedule;
  for (std::size_t k = 0; k < r.sources.size(); ++k) {
    ex.sample.sources.push_back(read_wav(base / r.sources[k]));
    ex.faces.push_back(read_visual_stream(base / r.faces[k]));
  }
  for (const auto &s : ex.sample.sources) {
    if (s.size() != ex.sample.mixture.size()) {
      fail(ErrorCode::kFormat, "manifest record " + r.id + ": source length differs from mixture");
    }
  }
  if (ex.sample.mixture.size() != r.length) {
    fail(ErrorCode::kFormat, "manifest record " + r.id + ": mixture length differs from record");
  }
  return ex;
}

std::vector<Example> load_manifest(const std::filesystem::path &path) {
  ManifestReader reader(path);
  std::vector<Example> out;
  while (auto r = reader.next()) out.push_back(load_example(*r, reader.base()));
  return out;
}

}  // namespace avse::io
