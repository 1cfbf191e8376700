// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "cli.h"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>

#include "avse/dataset.h"
#include "avse/error.h"
#include "avse/gradsuite.h"
#include "avse/io/checkpoint.h"
#include "avse/io/config.h"
#include "avse/io/manifest.h"
#include "avse/io/visual_file.h"
#include "avse/io/wav.h"
#include "avse/mixsim.h"
#include "avse/trainer.h"

namespace avse::cli {

namespace {

namespace fs = std::filesystem;

// Records evaluated per pass over a streamed manifest.
constexpr std::size_t kEvalChunk = 64;

// --seed, else AVSE_SEED, else `fallback`.
std::uint64_t resolve_seed(const std::optional<std::uint64_t> &flag, std::uint64_t fallback) {
  if (flag) return *flag;
  const char *env = std::getenv("AVSE_SEED");
  if (env == nullptr || *env == '\0') return fallback;
  std::uint64_t v = 0;
  const char *end = env + std::char_traits<char>::length(env);
  const auto [ptr, ec] = std::from_chars(env, end, v);
  if (ec != std::errc() || ptr != end) {
    fail(ErrorCode::kConfig, std::string("AVSE_SEED is not an unsigned integer: '") + env + "'");
  }
  return v;
}

struct SimulateArgs {
  fs::path out;
  std::optional<fs::path> config;
  std::size_t count = 10;
  std::optional<std::size_t> speakers;
  std::optional<double> overlap;
  std::optional<double> duration;
  bool dense = false;
  std::optional<std::uint64_t> seed;
};

int simulate(const SimulateArgs &a, std::ostream &out) {
  io::RunConfig rc = a.config ? io::load_config(*a.config) : io::RunConfig{};
  DataConfig &d = rc.data;
  if (a.speakers) d.speakers = *a.speakers;
  if (a.overlap) d.overlap = *a.overlap;
  if (a.duration) d.duration_s = *a.duration;
  if (a.dense) d.sparse = false;
  d.validate();
  const std::uint64_t seed = resolve_seed(a.seed, 0);
  const auto examples = make_dataset(d, a.count, seed);
  const fs::path manifest = io::write_dataset(a.out, examples);
  out << "wrote " << examples.size() << " mixtures to " << manifest.string() << "\n";
  return 0;
}

struct TrainArgs {
  std::optional<fs::path> config;
  std::optional<fs::path> manifest;
  fs::path model_out;
  std::optional<double> budget;
  std::optional<std::size_t> max_epochs;
  std::optional<std::uint64_t> seed;
};

int train(const TrainArgs &a, std::ostream &out) {
  io::RunConfig rc = a.config ? io::load_config(*a.config) : io::RunConfig{};
  rc.train.seed = resolve_seed(a.seed, rc.train.seed);
  if (a.budget) rc.train.cpu_budget_s = *a.budget;
  if (a.max_epochs) rc.train.max_epochs = *a.max_epochs;
  rc.train.validate();
  rc.model.validate();

  std::vector<Example> train_set, val_set;
  if (a.manifest) {
    std::vector<Example> all = io::load_manifest(*a.manifest);
    if (all.size() < 2) fail(ErrorCode::kConfig, "train: manifest needs at least two mixtures");
    // The last val_count records (at most half) are held out for validation.
    const std::size_t n_val = std::min(rc.val_count, all.size() / 2);
    val_set.assign(std::make_move_iterator(all.end() - static_cast<std::ptrdiff_t>(n_val)),
                   std::make_move_iterator(all.end()));
    all.resize(all.size() - n_val);
    train_set = std::move(all);
  } else {
    rc.data.validate();
    const std::uint64_t data_seed = derive_seed(rc.train.seed, 1);
    train_set = make_dataset(rc.data, rc.train_count, data_seed);
    val_set = make_dataset(rc.data, rc.val_count, data_seed, rc.train_count);
  }

  auto model = init_model<float>(rc.model, rc.train.seed);
  out << "params " << model.parameter_count() << " isam " << model.isam_parameter_count()
      << " train " << train_set.size() << " val " << val_set.size() << "\n";
  TrainState state = init_state(model, rc.train);
  const FitResult res = fit(model, train_set, val_set, rc.train, state, [&](const EpochRecord &r) {
    out << "epoch " << r.epoch << " train_loss " << r.train_loss << " val_loss " << r.val_loss
        << " lr " << r.lr << " cpu_s " << process_cpu_seconds() << "\n";
    out.flush();
  });
  io::save_checkpoint(a.model_out, model);
  out << "best_val_loss " << res.best_val << (res.early_stop ? " early_stop" : "")
      << (res.budget_exhausted ? " budget_exhausted" : "") << "\n";
  out << "saved " << a.model_out.string() << "\n";
  return 0;
}

struct EvalArgs {
  fs::path model;
  fs::path manifest;
  std::vector<std::string> visibility{"1-spk", "2-spk"};
  std::optional<fs::path> csv;
  std::optional<std::uint64_t> seed;
};

int eval(const EvalArgs &a, std::ostream &out) {
  std::vector<Visibility> modes;
  for (const auto &name : a.visibility) modes.push_back(parse_visibility(name));
  auto model = io::load_checkpoint(a.model);
  const std::uint64_t seed = resolve_seed(a.seed, 0);

  std::ofstream csv_file;
  if (a.csv) {
    csv_file.open(*a.csv);
    if (!csv_file) fail(ErrorCode::kIo, "cannot write " + a.csv->string());
  }
  std::ostream &rows_out = a.csv ? csv_file : out;
  rows_out << "sample_id,visibility,si_snri_db,snri_db\n";

  std::map<Visibility, std::pair<double, double>> sums;
  std::size_t samples = 0;
  io::ManifestReader reader(a.manifest);
  std::vector<Example> chunk;
  auto flush = [&] {
    if (chunk.empty()) return;
    for (const MetricsRow &r : evaluate(model, chunk, modes, seed)) {
      rows_out << r.sample_id << ',' << visibility_name(r.mode) << ',' << r.si_snri_db << ','
               << r.snri_db << '\n';
      sums[r.mode].first += r.si_snri_db;
      sums[r.mode].second += r.snri_db;
    }
    samples += chunk.size();
    chunk.clear();
  };
  while (auto record = reader.next()) {
    chunk.push_back(io::load_example(*record, reader.base()));
    if (chunk.size() == kEvalChunk) flush();
  }
  flush();
  if (samples == 0) fail(ErrorCode::kFormat, "eval: manifest " + a.manifest.string() + " is empty");

  out << (a.csv ? "" : "\n") << "visibility,mean_si_snri_db,mean_snri_db,samples\n";
  for (Visibility mode : modes) {
    const auto [si, snr] = sums[mode];
    out << visibility_name(mode) << ',' << si / static_cast<double>(samples) << ','
        << snr / static_cast<double>(samples) << ',' << samples << '\n';
  }
  return 0;
}

struct ExtractArgs {
  fs::path model;
  fs::path mixture;
  std::vector<fs::path> faces;
  fs::path out_dir;
  std::optional<bool> bypass;
};

int extract_cmd(const ExtractArgs &a, std::ostream &out) {
  auto model = io::load_checkpoint(a.model);
  const std::vector<double> mix = io::read_wav(a.mixture);
  std::vector<VisualStream> streams;
  for (const auto &p : a.faces) streams.push_back(io::read_visual_stream(p));
  std::vector<const VisualStream *> ptrs;
  for (const auto &s : streams) ptrs.push_back(&s);
  // A single face has no co-occurring faces to attend to.
  const bool bypass = a.bypass.value_or(streams.size() == 1);
  const std::vector<float> mix32(mix.begin(), mix.end());
  const auto est = extract<float>(model, mix32, ptrs, bypass);
  fs::create_directories(a.out_dir);
  for (std::size_t k = 0; k < est.size(); ++k) {
    const fs::path p = a.out_dir / ("speaker" + std::to_string(k) + ".wav");
    io::write_wav(p, std::vector<double>(est[k].begin(), est[k].end()));
    out << "wrote " << p.string() << "\n";
  }
  return 0;
}

struct GradcheckArgs {
  std::size_t seeds = 3;
  double tolerance = 1e-4;
};

int gradcheck(const GradcheckArgs &a, std::ostream &out) {
  SuiteOptions options;
  options.seeds = a.seeds;
  options.tolerance = a.tolerance;
  std::size_t failed = 0, total = 0;
  double seconds = 0.0;
  run_gradient_suite(options, [&](const SuiteCase &c) {
    ++total;
    seconds += c.seconds;
    if (!c.report.pass) ++failed;
    out << (c.report.pass ? "pass " : "FAIL ") << c.name << " seed " << c.seed
        << " max_rel_error " << c.report.max_rel_error() << " seconds " << c.seconds << "\n";
    for (const auto &entry : c.report.entries) {
      if (entry.max_rel_error < c.report.tolerance) continue;
      out << "  " << entry.name << "[" << entry.worst_index << "] analytic " << entry.analytic
          << " numeric " << entry.numeric << "\n";
    }
    out.flush();
  });
  out << "gradcheck " << total - failed << "/" << total << " passed in " << seconds << " s\n";
  if (failed > 0) {
    fail(ErrorCode::kEvaluation, std::to_string(failed) + " gradient check case(s) failed");
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Audio-visual target speaker extraction with inter-speaker attention", "avse"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto *s = app.add_subcommand("simulate", "Write a synthetic mixture dataset and manifest");
  s->add_option("--out", sim.out, "Output directory")->required();
  s->add_option("--config", sim.config, "INI file whose [data] section sets defaults")
      ->check(CLI::ExistingFile);
  s->add_option("--count", sim.count, "Number of mixtures")->check(CLI::PositiveNumber);
  s->add_option("--speakers", sim.speakers, "Speakers per mixture");
  s->add_option("--overlap", sim.overlap, "Overlap fraction of sparse mixtures");
  s->add_option("--duration", sim.duration, "Mixture length in seconds");
  s->add_flag("--dense", sim.dense, "All speakers active throughout");
  s->add_option("--seed", sim.seed, "Dataset seed (default: AVSE_SEED or 0)");

  TrainArgs tr;
  auto *t = app.add_subcommand("train", "Train an extractor");
  t->add_option("--config", tr.config, "INI run configuration")->check(CLI::ExistingFile);
  t->add_option("--manifest", tr.manifest, "Training manifest; synthesized in-process if omitted")
      ->check(CLI::ExistingFile);
  t->add_option("--out", tr.model_out, "Checkpoint path")->required();
  t->add_option("--budget", tr.budget, "CPU-second budget");
  t->add_option("--epochs", tr.max_epochs, "Maximum epochs");
  t->add_option("--seed", tr.seed, "Training seed (default: AVSE_SEED or the config value)");

  EvalArgs ev;
  auto *e = app.add_subcommand("eval", "Evaluate target-speaker metrics per visibility mode");
  e->add_option("--model", ev.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  e->add_option("--manifest", ev.manifest, "Evaluation manifest")->required()->check(CLI::ExistingFile);
  e->add_option("--visibility", ev.visibility, "Modes: 1-spk, 2-spk, 3-spk")->delimiter(',');
  e->add_option("--csv", ev.csv, "Write per-sample rows here instead of stdout");
  e->add_option("--seed", ev.seed, "Seed for the shown interferer in 2-spk mode");

  ExtractArgs ex;
  auto *x = app.add_subcommand("extract", "Extract each face's speaker from a mixture");
  x->add_option("--model", ex.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  x->add_option("--mixture", ex.mixture, "Mixture WAV")->required()->check(CLI::ExistingFile);
  x->add_option("--face", ex.faces, "Visual stream files, target first")
      ->required()
      ->check(CLI::ExistingFile);
  x->add_option("--out-dir", ex.out_dir, "Directory for speaker<k>.wav")->required();
  x->add_option("--bypass", ex.bypass, "Skip inter-speaker attention (default: one face)");

  GradcheckArgs gc;
  auto *g = app.add_subcommand("gradcheck", "Run the finite-difference gradient suite");
  g->add_option("--seeds", gc.seeds, "Random draws per operation")->check(CLI::PositiveNumber);
  g->add_option("--tolerance", gc.tolerance, "Maximum relative error");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError &pe) {
    std::string msg = pe.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: usage: " << msg << "\n";
    return kUsage;
  }

  try {
    if (s->parsed()) return simulate(sim, out);
    if (t->parsed()) return train(tr, out);
    if (e->parsed()) return eval(ev, out);
    if (x->parsed()) return extract_cmd(ex, out);
    return gradcheck(gc, out);
  } catch (const Error &ex_err) {
    std::string msg = ex_err.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << error_code_name(ex_err.code()) << ": " << msg << "\n";
    return kFailure;
  } catch (const std::exception &ex_err) {
    err << "error: internal: " << ex_err.what() << "\n";
    return kFailure;
  }
}

}  // namespace avse::cli
