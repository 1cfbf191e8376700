// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/trainer.h"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <numeric>

#include "avse/core/ops.h"
#include "avse/error.h"

namespace avse {

using core::Tensor;

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void TrainConfig::validate() const {
  if (!(lr_max > 0.0)) fail(ErrorCode::kConfig, "train: lr_max must be positive");
  if (warmup_n < 1) fail(ErrorCode::kConfig, "train: warmup_n must be at least 1");
  if (batch_size < 1) fail(ErrorCode::kConfig, "train: batch_size must be at least 1");
  if (max_epochs < 1) fail(ErrorCode::kConfig, "train: max_epochs must be at least 1");
  if (!is_probability(isam_bypass_prob) || !is_probability(face_dropout_prob)) {
    fail(ErrorCode::kConfig, "train: probabilities must lie in [0, 1]");
  }
  if (grad_clip < 0.0 || cpu_budget_s < 0.0) {
    fail(ErrorCode::kConfig, "train: grad_clip and cpu_budget_s must be non-negative");
  }
}

double lr_at(std::size_t step, const TrainConfig &config, double multiplier) {
  if (step < 1) fail(ErrorCode::kContract, "lr_at: step must be at least 1");
  const double n = static_cast<double>(config.warmup_n);
  const auto warm = [&](double s) { return config.lr_max * 1000.0 / 8.0 * s * std::pow(n, -1.5); };
  if (step <= config.warmup_n) return warm(static_cast<double>(step));
  return warm(n) * multiplier;
}

PlateauTracker::Update PlateauTracker::observe(double val_loss) {
  Update u;
  if (val_loss < best_) {
    best_ = val_loss;
    since_improvement_ = 0;
    since_halving_ = 0;
    u.improved = true;
    return u;
  }
  ++since_improvement_;
  ++since_halving_;
  if (since_halving_ >= plateau_patience_) {
    multiplier_ *= 0.5;
    since_halving_ = 0;
    u.halved = true;
  }
  u.stop = since_improvement_ >= plateau_patience_ + stop_patience_;
  return u;
}

VisibilityDraw sample_visibility(std::size_t n_interferers, const TrainConfig &config,
                                 std::mt19937_64 &rng) {
  if (n_interferers < 1) fail(ErrorCode::kContract, "sample_visibility: no interferer");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  VisibilityDraw draw;
  draw.present.assign(n_interferers + 1, false);
  draw.present[0] = true;
  draw.isam_bypass = unit(rng) < config.isam_bypass_prob;
  if (draw.isam_bypass) return draw;
  for (std::size_t k = 1; k <= n_interferers; ++k) {
    draw.present[k] = unit(rng) >= config.face_dropout_prob;
  }
  return draw;
}

TrainState init_state(ExtractorModel<float> &model, const TrainConfig &config) {
  config.validate();
  TrainState state;
  for (const auto &[name, p] : model.named_parameters()) {
    state.adam_m.emplace_back(p->size(), 0.0f);
    state.adam_v.emplace_back(p->size(), 0.0f);
  }
  state.plateau = PlateauTracker(config.plateau_patience, config.stop_patience);
  return state;
}

Batch make_batch(const std::vector<BatchItem> &items) {
  if (items.empty()) fail(ErrorCode::kContract, "make_batch: empty batch");
  const std::size_t len = items[0].example->length();
  Batch batch;
  std::vector<float> mixtures, refs;
  std::vector<const VisualStream *> faces;
  for (std::size_t b = 0; b < items.size(); ++b) {
    const auto &item = items[b];
    const Example &ex = *item.example;
    if (ex.length() != len) {
      fail(ErrorCode::kAlignment, "make_batch: examples differ in length");
    }
    const std::size_t n = ex.speakers();
    if (item.target >= n || item.visibility.present.size() != n) {
      fail(ErrorCode::kContract, "make_batch: visibility does not match example " + ex.id);
    }
    mixtures.insert(mixtures.end(), ex.sample.mixture.begin(), ex.sample.mixture.end());
    // Speakers in presentation order: the target, then the other speakers
    // in index order, which `present` addresses as 1, 2, ...
    std::vector<std::size_t> shown{item.target};
    for (std::size_t k = 0, slot = 1; k < n; ++k) {
      if (k == item.target) continue;
      if (item.visibility.present[slot++]) shown.push_back(k);
    }
    batch.target_row.push_back(faces.size());
    for (std::size_t k : shown) {
      faces.push_back(&ex.faces[k]);
      batch.request.owner.push_back(b);
      refs.insert(refs.end(), ex.sample.sources[k].begin(), ex.sample.sources[k].end());
      batch.weights.push_back(1.0f / static_cast<float>(shown.size() * items.size()));
    }
    batch.request.isam_bypass.push_back(item.visibility.isam_bypass);
  }
  batch.request.mixtures = Tensor<float>::from({items.size(), len}, std::move(mixtures));
  batch.request.faces = stack_streams<float>(faces);
  batch.refs = Tensor<float>::from({faces.size(), len}, std::move(refs));
  return batch;
}

void adam_update(const std::vector<Tensor<float> *> &params, std::vector<std::vector<float>> &m,
                 std::vector<std::vector<float>> &v, std::size_t step, double lr,
                 double grad_scale) {
  if (m.size() != params.size() || v.size() != params.size() || step < 1) {
    fail(ErrorCode::kContract, "adam_update: moment buffers do not match the parameters");
  }
  const double t = static_cast<double>(step);
  const double c1 = 1.0 - std::pow(kBeta1, t);
  const double c2 = 1.0 - std::pow(kBeta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<float> &p = *params[i];
    if (!p.has_grad()) continue;
    const auto g = p.grad();
    auto w = p.mutable_data();
    auto &mi = m[i];
    auto &vi = v[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = g[j] * grad_scale;
      mi[j] = static_cast<float>(kBeta1 * mi[j] + (1.0 - kBeta1) * gj);
      vi[j] = static_cast<float>(kBeta2 * vi[j] + (1.0 - kBeta2) * gj * gj);
      w[j] = static_cast<float>(w[j] - lr * (mi[j] / c1) / (std::sqrt(vi[j] / c2) + kAdamEps));
    }
  }
}

double train_step(ExtractorModel<float> &model, const Batch &batch, TrainState &state,
                  const TrainConfig &config) {
  auto params = model.named_parameters();
  for (auto &[name, p] : params) p->zero_grad();
  const Tensor<float> est = extract_batch(model, batch.request);
  const Tensor<float> loss = weighted_neg_si_snr(est, batch.refs, batch.weights);
  const double value = loss.item();
  if (!std::isfinite(value)) {
    fail(ErrorCode::kNonFinite, "training loss is not finite at step " +
                                    std::to_string(state.step + 1));
  }
  loss.backward();

  double scale = 1.0;
  if (config.grad_clip > 0.0) {
    double sq = 0.0;
    for (const auto &[name, p] : params) {
      for (float g : p->grad()) sq += static_cast<double>(g) * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > config.grad_clip) scale = config.grad_clip / norm;
  }

  ++state.step;
  std::vector<Tensor<float> *> tensors;
  for (auto &[name, p] : params) tensors.push_back(p);
  adam_update(tensors, state.adam_m, state.adam_v, state.step,
              lr_at(state.step, config, state.plateau.multiplier()), scale);
  return value;
}

namespace {

template <typename Fn>
void for_batches(std::size_t count, std::size_t batch_size, Fn &&fn) {
  for (std::size_t start = 0; start < count; start += batch_size) {
    fn(start, std::min(count, start + batch_size));
  }
}

VisibilityDraw all_faces(std::size_t speakers) {
  return {false, std::vector<bool>(speakers, true)};
}

VisibilityDraw target_only(std::size_t speakers) {
  VisibilityDraw d{true, std::vector<bool>(speakers, false)};
  d.present[0] = true;
  return d;
}

}  // namespace

double validation_loss(ExtractorModel<float> &model, const std::vector<Example> &val,
                       std::size_t batch_size) {
  if (val.empty()) fail(ErrorCode::kContract, "validation set is empty");
  core::NoGradGuard no_grad;
  double total = 0.0;
  for (int mode = 0; mode < 2; ++mode) {
    for_batches(val.size(), batch_size, [&](std::size_t a, std::size_t b) {
      std::vector<BatchItem> items;
      for (std::size_t i = a; i < b; ++i) {
        const std::size_t n = val[i].speakers();
        items.push_back({&val[i], 0, mode == 0 ? target_only(n) : all_faces(n)});
      }
      const Batch batch = make_batch(items);
      const Tensor<float> est = extract_batch(model, batch.request);
      // Batch weights average within the batch; rescale to a sum over examples.
      total += weighted_neg_si_snr(est, batch.refs, batch.weights).item() *
               static_cast<double>(b - a);
    });
  }
  return total / (2.0 * static_cast<double>(val.size()));
}

double process_cpu_seconds() {
  return static_cast<double>(std::clock()) / CLOCKS_PER_SEC;
}

FitResult fit(ExtractorModel<float> &model, const std::vector<Example> &train,
              const std::vector<Example> &val, const TrainConfig &config, TrainState &state,
              const std::function<void(const EpochRecord &)> &on_epoch) {
  config.validate();
  if (train.empty() || val.empty()) fail(ErrorCode::kContract, "fit: empty dataset");
  const std::size_t len = train[0].length();
  for (const auto *set : {&train, &val}) {
    for (const auto &ex : *set) {
      if (ex.length() != len || ex.faces.empty() ||
          ex.faces[0].dims != model.config.visual_dims) {
        fail(ErrorCode::kDimension, "fit: example " + ex.id +
                                        " does not match the dataset/model geometry");
      }
    }
  }
  std::mt19937_64 rng(config.seed);
  FitResult result;
  auto params = model.named_parameters();
  std::vector<std::vector<float>> best(params.size());
  auto snapshot = [&] {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto v = params[i].second->data();
      best[i].assign(v.begin(), v.end());
    }
  };
  snapshot();

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const double start_cpu = process_cpu_seconds();
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for_batches(order.size(), config.batch_size, [&](std::size_t a, std::size_t b) {
      if (result.budget_exhausted) return;
      if (config.cpu_budget_s > 0.0 &&
          process_cpu_seconds() - start_cpu >= config.cpu_budget_s) {
        result.budget_exhausted = true;
        return;
      }
      std::vector<BatchItem> items;
      for (std::size_t i = a; i < b; ++i) {
        const Example &ex = train[order[i]];
        const std::size_t n = ex.speakers();
        std::size_t target = 0;
        if (config.shuffle_target) target = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        items.push_back({&ex, target, sample_visibility(n - 1, config, rng)});
      }
      loss_sum += train_step(model, make_batch(items), state, config);
      ++steps;
    });
    if (steps == 0) break;
    ++state.epoch;
    EpochRecord rec;
    rec.epoch = state.epoch;
    rec.train_loss = loss_sum / static_cast<double>(steps);
    rec.val_loss = validation_loss(model, val, config.batch_size);
    const auto update = state.plateau.observe(rec.val_loss);
    if (update.improved) snapshot();
    rec.multiplier = state.plateau.multiplier();
    rec.lr = lr_at(std::max<std::size_t>(state.step, 1), config, rec.multiplier);
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (update.stop) {
      result.early_stop = true;
      break;
    }
    if (result.budget_exhausted) break;
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = params[i].second->mutable_data();
    std::copy(best[i].begin(), best[i].end(), dst.begin());
  }
  result.best_val = state.plateau.best();
  return result;
}

std::vector<MetricsRow> evaluate(ExtractorModel<float> &model, const std::vector<Example> &data,
                                 const std::vector<Visibility> &modes, std::uint64_t seed,
                                 std::size_t batch_size) {
  core::NoGradGuard no_grad;
  std::vector<MetricsRow> rows;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (Visibility mode : modes) rows.push_back({data[i].id, mode, 0.0, 0.0});
  }
  for (std::size_t mi = 0; mi < modes.size(); ++mi) {
    const Visibility mode = modes[mi];
    for_batches(data.size(), batch_size, [&](std::size_t a, std::size_t b) {
      std::vector<BatchItem> items;
      for (std::size_t i = a; i < b; ++i) {
        const std::size_t n = data[i].speakers();
        VisibilityDraw draw;
        if (mode == Visibility::kOne) {
          draw = target_only(n);
        } else if (mode == Visibility::kTwo) {
          draw = {false, std::vector<bool>(n, false)};
          draw.present[0] = true;
          std::mt19937_64 pick(derive_seed(seed, data[i].seed));
          draw.present[1 + std::uniform_int_distribution<std::size_t>(0, n - 2)(pick)] = true;
        } else {
          if (n < 3) {
            fail(ErrorCode::kConfig, "3-spk visibility needs mixtures with at least 3 speakers");
          }
          draw = {false, std::vector<bool>(n, false)};
          for (std::size_t k = 0; k < 3; ++k) draw.present[k] = true;
        }
        items.push_back({&data[i], 0, draw});
      }
      const Batch batch = make_batch(items);
      const Tensor<float> est = extract_batch(model, batch.request);
      const std::size_t len = data[a].length();
      for (std::size_t i = a; i < b; ++i) {
        const auto row = est.data().subspan(batch.target_row[i - a] * len, len);
        const std::vector<double> e(row.begin(), row.end());
        const Improvement imp =
            improvement(data[i].sample.sources[0], e, data[i].sample.mixture);
        MetricsRow &out = rows[i * modes.size() + mi];
        out.si_snri_db = imp.si_snri;
        out.snri_db = imp.snri;
      }
    });
  }
  return rows;
}

}  // namespace avse
