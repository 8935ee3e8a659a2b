// SPDX-License-Identifier: Apache-2.0
// tanet: synthesize weather data, train, restore, evaluate and ablate.
//
// Exit codes: 0 success, 1 check failed or numeric abort, 2 I/O error,
// 3 bad arguments or shapes, 4 missing or corrupt checkpoint.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "tanet/data/dataset.hpp"
#include "tanet/data/image.hpp"
#include "tanet/data/scenes.hpp"
#include "tanet/io/checkpoint.hpp"
#include "tanet/io/run_config.hpp"
#include "tanet/train/ablation.hpp"
#include "tanet/train/evaluate.hpp"
#include "tanet/train/gradcheck.hpp"

namespace fs = std::filesystem;
using namespace tanet;

namespace {

enum Exit : int { kOk = 0, kFailed = 1, kIo = 2, kUsage = 3, kCheckpoint = 4 };

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", path, "key = value run configuration file");
    cmd->add_option("--set", overrides, "override one key, e.g. --set steps=500");
  }

  io::RunConfig resolve() const {
    io::RunConfig config = path.empty() ? io::RunConfig{} : io::load_run_config(path);
    for (const auto& o : overrides) io::apply_override(config, o);
    config.validate();
    return config;
  }
};

// Prints the resolved config and mirrors it into out_dir.
void echo_config(const io::RunConfig& config, bool write) {
  const std::string text = io::format_run_config(config);
  std::cout << text << std::flush;
  if (write) {
    ensure_dir(config.out_dir);
    write_text(config.out_dir / "config.txt", text);
  }
}

std::vector<data::Sample> load_split(const fs::path& manifest) {
  auto samples = data::load_samples(data::read_manifest(manifest));
  if (samples.empty()) throw IoError("manifest " + manifest.string() + " lists no pairs");
  return samples;
}

int cmd_scenes(const fs::path& out, std::size_t count, std::size_t size, std::uint64_t seed) {
  std::cout << "out = " << out.generic_string() << "\ncount = " << count << "\nsize = " << size
            << "\nseed = " << seed << "\n";
  if (count == 0 || size == 0) throw UsageError("count and size must be >= 1");
  data::write_scenes(out, count, size, seed);
  std::cout << "wrote " << count << " scenes to " << out.generic_string() << "\n";
  return kOk;
}

int cmd_synth(const fs::path& clean_dir, const fs::path& out_dir, const data::DatasetOptions& o) {
  std::cout << "clean_dir = " << clean_dir.generic_string() << "\nout_dir = " << out_dir.generic_string()
            << "\nper_kind = " << o.per_kind << "\nsplit = " << o.split_ratio << "\nseed = " << o.seed
            << "\n";
  const data::DatasetManifest m = data::build_dataset(clean_dir, out_dir, o);
  const auto tr = data::count_kinds(m.train), te = data::count_kinds(m.test);
  std::printf("manifest haze/rain/snow: %zu/%zu/%zu\n", tr[0] + te[0], tr[1] + te[1], tr[2] + te[2]);
  std::printf("train %zu (%zu/%zu/%zu)  test %zu (%zu/%zu/%zu)\n", m.train.size(), tr[0], tr[1], tr[2],
              m.test.size(), te[0], te[1], te[2]);
  return kOk;
}

int cmd_train(const ConfigArgs& args) {
  const io::RunConfig config = args.resolve();
  echo_config(config, true);
  const auto train_set = load_split(config.data_dir / "train.txt");
  nn::TANetModel<float> model(config.network());
  std::cout << "params " << model.param_count() << "\n";
  train::TrainState<float> state;
  state.lr0 = config.lr0;
  state.lr_min = config.lr_min;
  state.seed = config.seed;
  state.loss = config.loss();
  train::TrainOptions options = config.train_options();
  options.log = &std::cout;
  const auto result = train::train(model, train_set, state, options);
  if (!result.curve.empty()) {
    const auto [head, tail] = train::smoothed_endpoints(result.curve, 50);
    std::printf("smoothed loss %.6f -> %.6f\n", head, tail);
  }
  const fs::path test_manifest = config.data_dir / "test.txt";
  if (fs::exists(test_manifest)) {
    const auto report = train::evaluate(model, load_split(test_manifest), {false, 0});
    const std::string table = train::format_eval_table(report);
    std::cout << table;
    write_text(config.out_dir / "eval.txt", table);
    write_text(config.out_dir / "eval.csv", train::format_eval_csv(report));
  }
  std::cout << "checkpoint " << (config.out_dir / "model.tant").generic_string() << "\n";
  return kOk;
}

int cmd_restore(const fs::path& checkpoint, const fs::path& input, const fs::path& output) {
  std::cout << "checkpoint = " << checkpoint.generic_string() << "\ninput = " << input.generic_string()
            << "\noutput = " << output.generic_string() << "\n";
  const auto model = io::load_checkpoint<float>(checkpoint);
  const data::Image image = data::read_image(input);
  const auto restored = train::restore_image(model, tensor_cast<float>(image));
  data::write_image(output, tensor_cast<double>(restored));
  std::printf("restored %zux%zu\n", image.shape().width(), image.shape().height());
  return kOk;
}

int cmd_eval(const fs::path& checkpoint, const fs::path& manifest, const fs::path& out_dir, bool timing) {
  std::cout << "checkpoint = " << checkpoint.generic_string() << "\nmanifest = " << manifest.generic_string()
            << "\nout_dir = " << out_dir.generic_string() << "\ntiming = " << (timing ? "true" : "false")
            << "\n";
  const auto model = io::load_checkpoint<float>(checkpoint);
  const auto report = train::evaluate(model, load_split(manifest), {timing, 3});
  const std::string table = train::format_eval_table(report);
  std::cout << table;
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    write_text(out_dir / "eval.txt", table);
    write_text(out_dir / "eval.csv", train::format_eval_csv(report));
  }
  return kOk;
}

int cmd_ablate(const ConfigArgs& args) {
  const io::RunConfig config = args.resolve();
  echo_config(config, true);
  const fs::path train_manifest = config.data_dir / "train.txt";
  const fs::path test_manifest = config.data_dir / "test.txt";
  const auto train_set = load_split(train_manifest);
  const auto test_set = load_split(test_manifest);
  const std::string hash = data::manifest_file_hash(train_manifest) + "-" +
                           data::manifest_file_hash(test_manifest);
  train::AblationOptions options;
  options.train = config.train_options();
  options.train.log = &std::cout;
  options.train.log_every = 500;
  options.lr0 = config.lr0;
  options.lr_min = config.lr_min;
  options.seed = config.seed;
  options.loss = config.loss();
  const auto table = train::run_ablation(config.network(), train_set, test_set, hash, options);
  const std::string text = train::format_ablation_table(table);
  std::cout << text;
  write_text(config.out_dir / "ablation.txt", text);
  write_text(config.out_dir / "ablation.csv", train::format_ablation_csv(table));
  return kOk;
}

int cmd_gradcheck(const ConfigArgs& args, bool verbose) {
  const io::RunConfig config = args.resolve();
  echo_config(config, false);
  train::GradCheckOptions options;
  options.seed = config.seed + 1;
  const auto reports = train::run_gradcheck_suite(config.network(), options);
  std::cout << train::format_gradcheck(reports, verbose);
  for (const auto& r : reports) {
    if (!r.pass()) return kFailed;
  }
  return kOk;
}

int cmd_params(const ConfigArgs& args, bool full_scale) {
  io::RunConfig config = args.resolve();
  if (full_scale) {
    const nn::NetworkConfig n = nn::full_scale_config();
    config.base_channels = n.base_channels;
    config.num_tabs = n.num_tabs;
  }
  echo_config(config, false);
  const std::size_t count = nn::count_parameters(config.network());
  std::printf("params %zu (%.3f M)\n", count, static_cast<double>(count) / 1e6);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adverse-weather image restoration: data synthesis, training and evaluation"};
  app.require_subcommand(1);

  fs::path scenes_out;
  std::size_t scenes_count = 100, scenes_size = 96;
  std::uint64_t scenes_seed = 0;
  auto* scenes = app.add_subcommand("scenes", "generate procedural clean scenes");
  scenes->add_option("--out", scenes_out, "output directory")->required();
  scenes->add_option("--count", scenes_count, "number of images")->capture_default_str();
  scenes->add_option("--size", scenes_size, "square image size in px")->capture_default_str();
  scenes->add_option("--seed", scenes_seed)->capture_default_str();

  fs::path synth_clean, synth_out;
  data::DatasetOptions synth_options;
  auto* synth = app.add_subcommand("synth", "synthesize haze/rain/snow pairs and manifests");
  synth->add_option("--clean-dir", synth_clean, "directory of clean .png/.ppm images")->required();
  synth->add_option("--out-dir", synth_out, "output directory")->required();
  synth->add_option("--per-kind", synth_options.per_kind, "pairs per weather kind")->capture_default_str();
  synth->add_option("--split", synth_options.split_ratio, "training share of clean images")
      ->capture_default_str();
  synth->add_option("--seed", synth_options.seed)->capture_default_str();

  ConfigArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model from data_dir/train.txt");
  train_args.attach(train_cmd);

  fs::path restore_ckpt, restore_in, restore_out;
  auto* restore = app.add_subcommand("restore", "restore one image");
  restore->add_option("--checkpoint", restore_ckpt)->required();
  restore->add_option("--input", restore_in)->required();
  restore->add_option("--output", restore_out)->required();

  fs::path eval_ckpt, eval_manifest, eval_out;
  bool eval_no_timing = false;
  auto* eval = app.add_subcommand("eval", "per-kind PSNR of a checkpoint on a manifest");
  eval->add_option("--checkpoint", eval_ckpt)->required();
  eval->add_option("--manifest", eval_manifest)->required();
  eval->add_option("--out-dir", eval_out, "also write eval.txt and eval.csv here");
  eval->add_flag("--no-timing", eval_no_timing, "skip the 256x256 inference timing");

  ConfigArgs ablate_args;
  auto* ablate = app.add_subcommand("ablate", "train and evaluate Net1..Net5 under one budget");
  ablate_args.attach(ablate);

  ConfigArgs grad_args;
  bool grad_verbose = false;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  grad_args.attach(gradcheck);
  gradcheck->add_flag("-v,--verbose", grad_verbose, "one line per parameter tensor");

  ConfigArgs params_args;
  bool params_full = false;
  auto* params = app.add_subcommand("params", "parameter count of a configuration");
  params_args.attach(params);
  params->add_flag("--full-scale", params_full, "use the ~9M-parameter width and depth");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*scenes) return cmd_scenes(scenes_out, scenes_count, scenes_size, scenes_seed);
    if (*synth) return cmd_synth(synth_clean, synth_out, synth_options);
    if (*train_cmd) return cmd_train(train_args);
    if (*restore) return cmd_restore(restore_ckpt, restore_in, restore_out);
    if (*eval) return cmd_eval(eval_ckpt, eval_manifest, eval_out, !eval_no_timing);
    if (*ablate) return cmd_ablate(ablate_args);
    if (*gradcheck) return cmd_gradcheck(grad_args, grad_verbose);
    if (*params) return cmd_params(params_args, params_full);
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kCheckpoint;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kFailed;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  }
  return kUsage;
}
