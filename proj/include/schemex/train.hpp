#pragma once

// Teacher-forced training with circle loss and AdamW.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <thread>
#include <vector>

#include "schemex/data.hpp"
#include "schemex/engine.hpp"
#include "schemex/metrics.hpp"
#include "schemex/model.hpp"
#include "schemex/optim.hpp"

namespace schemex {

struct TrainConfig {
  ModelDims dims;  // dims.vocab is taken from the vocab
  OptimizerConfig optimizer;
  EngineConfig engine;
  std::size_t epochs = 50;
  std::size_t batch_size = 4;
  std::uint64_t seed = 13;
  double init_std = 0.02;
  std::size_t eval_every = 1;  // 0 disables the per-epoch training F1
  bool early_stop = false;     // stop once training path F1 reaches 1
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0;
  bool evaluated = false;
  MetricReport train_paths;
};

struct TrainResult {
  Model<float> model;
  std::vector<EpochLog> log;
};

template <class T>
std::vector<std::vector<Path>> predict_all(const Model<T>& m, const Schema& schema, const Vocab& vocab,
                                           const std::vector<Example>& data, const EngineConfig& cfg,
                                           std::size_t jobs = 1) {
  std::vector<std::vector<Path>> out(data.size());
  auto work = [&](std::size_t begin, std::size_t stride) {
    ModelScorer<T> scorer(m);
    for (std::size_t i = begin; i < data.size(); i += stride)
      out[i] = as_paths(extract(schema, vocab, scorer, data[i].text, cfg));
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, data.size()));
  if (jobs == 1) {
    work(0, 1);
    return out;
  }
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(work, w, jobs);
  return out;
}

inline std::vector<std::vector<Path>> gold_all(const std::vector<Example>& data) {
  std::vector<std::vector<Path>> out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back(maximal_paths(ex.paths));
  return out;
}

inline TrainResult train(const std::vector<Example>& data, const Schema& schema, const Vocab& vocab,
                         const TrainConfig& cfg, const std::function<void(const EpochLog&)>& on_epoch = {}) {
  for (const auto& ex : data) check_alignment(ex);

  ModelDims dims = cfg.dims;
  dims.vocab = vocab.size();
  TrainResult result{init_model<float>(dims, cfg.seed, cfg.init_std), {}};
  Model<float>& model = result.model;

  std::vector<std::vector<SupervisedQuery>> sup;
  sup.reserve(data.size());
  for (const auto& ex : data) sup.push_back(supervision(schema, vocab, ex.paths, ex.text, cfg.engine));

  const std::size_t batch = std::max<std::size_t>(1, cfg.batch_size);
  const std::size_t steps_per_epoch = (data.size() + batch - 1) / batch;
  const std::size_t total_steps = steps_per_epoch * cfg.epochs;
  AdamW<float> opt(dims, cfg.optimizer);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  const auto gold = gold_all(data);
  const KeySpec path_spec = metric_for_task(Task::Path);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t step = 0;
  Model<float> grad = zero_model<float>(dims);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0;
    for (std::size_t b = 0; b < order.size(); b += batch) {
      for (auto* g : param_list(grad)) g->setZero();
      for (std::size_t k = b; k < std::min(order.size(), b + batch); ++k)
        for (const auto& sq : sup[order[k]]) epoch_loss += loss_and_grad(model, sq.query, sq.target, grad);
      opt.step(model, grad, scheduled_lr(cfg.optimizer, step, total_steps));
      ++step;
    }

    EpochLog log{epoch, epoch_loss, false, {}};
    if (cfg.eval_every > 0 && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs)) {
      log.evaluated = true;
      log.train_paths = evaluate_paths(gold, predict_all(model, schema, vocab, data, cfg.engine), path_spec, &schema);
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
    if (cfg.early_stop && log.evaluated && log.train_paths.f1 == 1.0) break;
  }
  return result;
}

}  // namespace schemex
