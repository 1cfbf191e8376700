// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Datasets on disk: one JSON object per line in <dir>/manifest.jsonl, with
// WAV and visual-stream files referenced by paths relative to the manifest.
//
//   {"id":"s0","seed":..,"length":32000,"scale":1.0,"snrs_db":[..],
//    "mixture":"s0/mixture.wav","sources":[..],"faces":[..],
//    "schedule":[[[start,end],..],..]}
//
// Schedules are sample-index intervals [start, end) per speaker.

#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "avse/dataset.h"

namespace avse::io {

struct ManifestRecord {
  std::string id;
  std::uint64_t seed = 0;
  std::size_t length = 0;
  // Common gain applied to every waveform before quantization.
  double scale = 1.0;
  std::vector<double> snrs_db;
  std::string mixture;
  std::vector<std::string> sources;
  std::vector<std::string> faces;
  ActivitySchedule schedule;

  bool operator==(const ManifestRecord &) const = default;
};

std::string format_record(const ManifestRecord &record);
ManifestRecord parse_record(const std::string &line);

// Writes every example's files under `dir` and the manifest last. Waveforms
// are scaled by one common gain per example so that all of them fit the
// 16-bit range.
std::filesystem::path write_dataset(const std::filesystem::path &dir,
                                    const std::vector<Example> &examples);

// Streams records one line at a time.
class ManifestReader {
 public:
  explicit ManifestReader(const std::filesystem::path &path);
  std::optional<ManifestRecord> next();
  const std::filesystem::path &base() const { return base_; }

 private:
  std::filesystem::path path_;
  std::filesystem::path base_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

Example load_example(const ManifestRecord &record, const std::filesystem::path &base);
std::vector<Example> load_manifest(const std::filesystem::path &path);

}  // namespace avse::io
