// SPDX-License-Identifier: Apache-2.0
#include "tanet/train/trainer.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "tanet/data/augment.hpp"
#include "tanet/io/checkpoint.hpp"

namespace tanet::train {

namespace fs = std::filesystem;

namespace {

std::string shortest(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

fs::path checkpoint_path(const fs::path& dir, std::size_t step) {
  char name[40];
  std::snprintf(name, sizeof name, "checkpoint_%06zu.tant", step);
  return dir / name;
}

// Cycles through seeded permutations of [0, n).
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::mt19937_64& rng) : rng_(rng), order_(n) {
    for (std::size_t i = 0; i < n; ++i) order_[i] = i;
    cursor_ = n;
  }
  std::size_t next() {
    if (cursor_ == order_.size()) {
      data::seeded_shuffle(order_, rng_);
      cursor_ = 0;
    }
    return order_[cursor_++];
  }

 private:
  std::mt19937_64& rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_;
};

}  // namespace

losses::LossConfig loss_config_for(nn::Variant variant, losses::LossConfig base) {
  base.fft_enabled = nn::features(variant).fft_loss;
  return base;
}

std::string format_loss_csv(const std::vector<LossPoint>& curve) {
  std::string out = "step,loss,lr\n";
  for (const auto& p : curve) {
    out += std::to_string(p.step) + "," + shortest(p.loss) + "," + shortest(p.lr) + "\n";
  }
  return out;
}

std::pair<double, double> smoothed_endpoints(const std::vector<LossPoint>& curve,
                                             std::size_t window) {
  if (curve.empty()) throw UsageError("smoothed_endpoints on an empty curve");
  const std::size_t w = std::max<std::size_t>(1, std::min(window, curve.size()));
  double head = 0, tail = 0;
  for (std::size_t i = 0; i < w; ++i) {
    head += curve[i].loss;
    tail += curve[curve.size() - 1 - i].loss;
  }
  return {head / static_cast<double>(w), tail / static_cast<double>(w)};
}

template <std::floating_point T>
TrainResult train(nn::TANetModel<T>& model, const std::vector<data::Sample>& samples,
                  TrainState<T>& state, const TrainOptions& options) {
  TrainResult result;
  const bool persist = !options.out_dir.empty();
  if (persist) {
    std::error_code ec;
    fs::create_directories(options.out_dir, ec);
    if (ec) throw IoError("cannot create " + options.out_dir.string() + ": " + ec.message());
  }
  auto flush_curve = [&] {
    if (persist) write_text(options.out_dir / "loss.csv", format_loss_csv(result.curve));
  };
  if (options.steps == 0) {
    if (persist) {
      io::save_checkpoint(options.out_dir / "model.tant", model);
      flush_curve();
    }
    return result;
  }
  if (samples.empty()) throw UsageError("training set is empty");
  if (options.batch == 0) throw ParameterError("batch must be >= 1");
  state.loss.validate();
  state.total_steps = state.step + options.steps;
  (void)cosine_lr(0, state.total_steps, state.lr0, state.lr_min);  // validates the schedule

  std::mt19937_64 rng(state.seed);
  BatchSampler sampler(samples.size(), rng);
  const auto& params = model.parameters().parameters();
  std::vector<Tensor<T>> degraded(options.batch), clean(options.batch);

  result.curve.reserve(options.steps);
  const std::size_t first = state.step;
  for (std::size_t s = 0; s < options.steps; ++s) {
    for (std::size_t b = 0; b < options.batch; ++b) {
      const data::Sample& sample = samples[sampler.next()];
      const data::SpatialTransform t = data::sample_transform(
          sample.clean.shape().height(), sample.clean.shape().width(), options.crop, rng);
      degraded[b] = tensor_cast<T>(data::apply_transform(sample.degraded, t));
      clean[b] = tensor_cast<T>(data::apply_transform(sample.clean, t));
    }
    const std::span<const Tensor<T>> dview(degraded), cview(clean);
    const Var<T> input = Var<T>::constant(stack_batch(dview));
    const Var<T> target = Var<T>::constant(stack_batch(cview));

    const double lr = cosine_lr(state.step, state.total_steps, state.lr0, state.lr_min);
    model.parameters().zero_grad();
    double loss_value;
    {
      Tape<T> tape;
      const Var<T> loss = losses::total_loss(model.forward(input), target, state.loss);
      loss_value = static_cast<double>(loss.value()[0]);
      if (!std::isfinite(loss_value)) {
        flush_curve();
        throw NumericError("non-finite loss at step " + std::to_string(state.step) +
                           (persist ? "; last checkpoint kept in " + options.out_dir.string() : ""));
      }
      tape.backward(loss);
    }
    try {
      adam_step(params, state, lr);
    } catch (const NumericError&) {
      flush_curve();
      throw;
    }
    result.curve.push_back({state.step - 1, loss_value, lr});

    const std::size_t done = state.step - first;
    if (options.log && options.log_every > 0 && (done % options.log_every == 0 || done == 1)) {
      char line[96];
      std::snprintf(line, sizeof line, "step %6zu/%zu  loss %.6f  lr %.3e\n", state.step,
                    state.total_steps, loss_value, lr);
      *options.log << line << std::flush;
    }
    if (persist && options.checkpoint_every > 0 && done % options.checkpoint_every == 0 &&
        done != options.steps) {
      io::save_checkpoint(checkpoint_path(options.out_dir, state.step), model);
    }
  }
  model.parameters().zero_grad();
  if (persist) {
    io::save_checkpoint(options.out_dir / "model.tant", model);
    flush_curve();
  }
  return result;
}

template TrainResult train(nn::TANetModel<float>&, const std::vector<data::Sample>&,
                           TrainState<float>&, const TrainOptions&);
template TrainResult train(nn::TANetModel<double>&, const std::vector<data::Sample>&,
                           TrainState<double>&, const TrainOptions&);

}  // namespace tanet::train
