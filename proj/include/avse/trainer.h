// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Training loop: Adam with a linear warmup, plateau halving and early
// stopping; ISAM bypass and co-occurring face dropout as augmentation.

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "avse/dataset.h"
#include "avse/extractor.h"
#include "avse/metrics.h"

namespace avse {

struct TrainConfig {
  double lr_max = 1e-3;
  std::size_t warmup_n = 15000;
  std::size_t batch_size = 8;
  std::size_t max_epochs = 100;
  std::size_t plateau_patience = 6;
  std::size_t stop_patience = 10;
  double isam_bypass_prob = 0.5;
  double face_dropout_prob = 0.25;
  // Global gradient-norm clip; 0 disables it.
  double grad_clip = 0.0;
  // Process CPU seconds after which training stops; 0 disables it.
  double cpu_budget_s = 0.0;
  // Draw the target speaker of each training example at random.
  bool shuffle_target = true;
  std::uint64_t seed = 0;

  void validate() const;
};

// Linear warmup to lr_at(warmup_n), then held and scaled by the plateau
// multiplier: lr_max * 1000 / 8 * step * warmup_n^-1.5 during warmup.
double lr_at(std::size_t step, const TrainConfig &config, double multiplier);

// Epoch-level schedule state. The multiplier halves after plateau_patience
// epochs without improvement; training stops after plateau_patience +
// stop_patience such epochs in a row.
class PlateauTracker {
 public:
  struct Update {
    bool improved = false;
    bool halved = false;
    bool stop = false;
  };

  PlateauTracker() = default;
  PlateauTracker(std::size_t plateau_patience, std::size_t stop_patience)
      : plateau_patience_(plateau_patience), stop_patience_(stop_patience) {}

  Update observe(double val_loss);

  double multiplier() const { return multiplier_; }
  double best() const { return best_; }
  std::size_t since_improvement() const { return since_improvement_; }
  std::size_t since_halving() const { return since_halving_; }

 private:
  std::size_t plateau_patience_ = 6;
  std::size_t stop_patience_ = 10;
  double best_ = std::numeric_limits<double>::infinity();
  double multiplier_ = 1.0;
  std::size_t since_improvement_ = 0;
  std::size_t since_halving_ = 0;
};

struct VisibilityDraw {
  bool isam_bypass = false;
  std::vector<bool> present;  // target first, then interferers
};

VisibilityDraw sample_visibility(std::size_t n_interferers, const TrainConfig &config,
                                 std::mt19937_64 &rng);

struct TrainState {
  std::size_t step = 0;
  std::vector<std::vector<float>> adam_m, adam_v;
  PlateauTracker plateau;
  std::size_t epoch = 0;
};

TrainState init_state(ExtractorModel<float> &model, const TrainConfig &config);

// One example's contribution to a batch.
struct BatchItem {
  const Example *example = nullptr;
  std::size_t target = 0;
  VisibilityDraw visibility;
};

struct Batch {
  ExtractRequest<float> request;
  core::Tensor<float> refs;    // [G, L]
  std::vector<float> weights;  // per face, averaging present speakers per mixture
  std::vector<std::size_t> target_row;  // per mixture
};

Batch make_batch(const std::vector<BatchItem> &items);

// One Adam step (0.9, 0.999, 1e-8) over the parameters that hold gradients;
// `step` counts from 1 and gradients are multiplied by grad_scale.
void adam_update(const std::vector<core::Tensor<float> *> &params,
                 std::vector<std::vector<float>> &m, std::vector<std::vector<float>> &v,
                 std::size_t step, double lr, double grad_scale = 1.0);

// Forward, loss, backward and one Adam update; returns the loss.
double train_step(ExtractorModel<float> &model, const Batch &batch, TrainState &state,
                  const TrainConfig &config);

// Mean over examples of the 1-spk (bypass) and all-faces losses.
double validation_loss(ExtractorModel<float> &model, const std::vector<Example> &val,
                       std::size_t batch_size);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
  double multiplier = 1.0;
};

struct FitResult {
  std::vector<EpochRecord> history;
  double best_val = std::numeric_limits<double>::infinity();
  bool early_stop = false;
  bool budget_exhausted = false;
};

// Trains until early stop, max_epochs or the CPU budget; the model is left
// at the best-validation parameters.
FitResult fit(ExtractorModel<float> &model, const std::vector<Example> &train,
              const std::vector<Example> &val, const TrainConfig &config, TrainState &state,
              const std::function<void(const EpochRecord &)> &on_epoch = {});

// Target-speaker metrics for each example under each visibility mode. In
// 2-spk mode the shown interferer is drawn with a seed derived from `seed`
// and the example's own seed, so results do not depend on batching.
std::vector<MetricsRow> evaluate(ExtractorModel<float> &model, const std::vector<Example> &data,
                                 const std::vector<Visibility> &modes, std::uint64_t seed,
                                 std::size_t batch_size = 8);

double process_cpu_seconds();

}  // namespace avse
