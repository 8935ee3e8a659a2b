// SPDX-License-Identifier: Apache-2.0
// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// when any selected criterion fails. Long criteria (5-7, 9) train models and
// leave their checkpoints and reports under --work.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "tanet/data/dataset.hpp"
#include "tanet/fft.hpp"
#include "tanet/data/scenes.hpp"
#include "tanet/data/synth.hpp"
#include "tanet/io/checkpoint.hpp"
#include "tanet/losses.hpp"
#include "tanet/train/ablation.hpp"
#include "tanet/train/evaluate.hpp"
#include "tanet/train/gradcheck.hpp"
#include "tanet/train/optim.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace tanet;
using tanet::testing::max_abs_diff;
using tanet::testing::random_tensor;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

// ---- 1: gradient correctness ----

Outcome gradients() {
  const auto t0 = Clock::now();
  const auto reports = train::run_gradcheck_suite(nn::desk_config());
  const double secs = seconds_since(t0);
  Outcome o;
  double worst = 0;
  std::set<std::string> names;
  for (const auto& r : reports) {
    o.pass = o.pass && r.pass() && r.checked() > 0;
    worst = std::max(worst, r.max_rel_error());
    names.insert(r.name);
  }
  for (const char* need : {"LPA", "GSA", "GDA", "TAB", "charbonnier", "fft_loss", "model 2-TAB"}) {
    bool found = false;
    for (const auto& n : names) found = found || n.find(need) != std::string::npos;
    if (!found) {
      o.pass = false;
      o.detail += std::string("missing ") + need + "; ";
    }
  }
  o.pass = o.pass && secs <= 120.0;
  o.detail += fmt("%zu checks, max rel err %.2e (tol 1e-4), %.1f s", reports.size(), worst, secs);
  return o;
}

// ---- 2: kernel oracles ----

Outcome oracles() {
  const auto t0 = Clock::now();
  double conv_err = 0, strip_err = 0, fft_err = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed * 7919 + 1);
    std::uniform_int_distribution<std::size_t> dim(1, 8), ch(1, 4), pick(0, 3);
    const std::size_t h = dim(rng), w = dim(rng), ci = ch(rng), co = ch(rng);
    const std::size_t kernels[4][2] = {{1, 1}, {3, 3}, {1, 3}, {3, 1}};
    const auto [kh, kw] = kernels[pick(rng)];
    const std::size_t stride = 1 + pick(rng) % 2;
    const auto x = random_tensor(Shape(1, h, w, ci), rng);
    const auto wt = random_tensor(Shape::kernel(kh, kw, ci, co), rng);
    const auto b = random_tensor(Shape::vector(co), rng);
    const auto y = ops::conv2d(Var<double>::constant(x), Var<double>::constant(wt),
                               Var<double>::constant(b), {stride, kh / 2, kw / 2});
    conv_err = std::max(conv_err, max_abs_diff(y.value(), tanet::testing::naive_conv(x, wt, b, stride, kh / 2, kw / 2)));
  }
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed * 104729 + 2);
    std::uniform_int_distribution<std::size_t> dim(1, 8), ch(1, 4);
    const auto x = random_tensor(Shape(1, dim(rng), dim(rng), ch(rng)), rng);
    const Shape& s = x.shape();
    const auto hp = ops::strip_pool_h(Var<double>::constant(x)).value();
    const auto vp = ops::strip_pool_v(Var<double>::constant(x)).value();
    for (std::size_t c = 0; c < s.channels(); ++c) {
      for (std::size_t j = 0; j < s.width(); ++j) {
        double acc = 0;
        for (std::size_t i = 0; i < s.height(); ++i) acc += x.at(0, i, j, c);
        strip_err = std::max(strip_err, std::abs(acc / s.height() - hp.at(0, 0, j, c)));
      }
      for (std::size_t i = 0; i < s.height(); ++i) {
        double acc = 0;
        for (std::size_t j = 0; j < s.width(); ++j) acc += x.at(0, i, j, c);
        strip_err = std::max(strip_err, std::abs(acc / s.width() - vp.at(0, i, 0, c)));
      }
    }
  }
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed * 15485863 + 3);
    std::uniform_int_distribution<std::size_t> dim(1, 8), ch(1, 4);
    const auto x = random_tensor(Shape(1, dim(rng), dim(rng), ch(rng)), rng);
    const auto g = fft2d(x);
    const Shape& s = x.shape();
    for (std::size_t u = 0; u < s.height(); ++u)
      for (std::size_t v = 0; v < s.width(); ++v)
        for (std::size_t c = 0; c < s.channels(); ++c) {
          const auto ref = tanet::testing::naive_dft_bin(x, 0, c, u, v);
          const std::size_t i = x.offset(0, u, v, c);
          fft_err = std::max({fft_err, std::abs(g.re[i] - ref.real()), std::abs(g.im[i] - ref.imag())});
        }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = conv_err <= 1e-10 && strip_err <= 1e-10 && fft_err <= 1e-10 && secs <= 60.0;
  o.detail = fmt("conv2d %.1e, strip pool %.1e, fft2d %.1e (tol 1e-10, 100 seeds each), %.2f s",
                 conv_err, strip_err, fft_err, secs);
  return o;
}

// ---- 3: fixtures ----

Outcome fixtures() {
  Outcome o;
  nn::ParameterStore<double> store(1);
  const auto tab = nn::TABlock<double>::create(store, "tab", 8);
  for (const auto& p : store.parameters()) {
    if (p.name.ends_with(".gamma")) continue;
    Var<double> v = p.var;
    for (auto& x : v.mutable_value().data()) x = 0.0;
  }
  std::mt19937_64 rng(3);
  const Var<double> f = Var<double>::constant(random_tensor(Shape(2, 6, 6, 8), rng));
  const auto out = tab.forward(f).value();
  bool tab_ok = true;
  for (std::size_t i = 0; i < out.size(); ++i) tab_ok = tab_ok && out[i] == 2.0 * f.value()[i];

  const Var<double> img = Var<double>::constant(random_tensor(Shape(1, 16, 16, 3), rng, 0, 1));
  const double charb = losses::charbonnier(img, img, 1e-3).value()[0];
  const double fftl = losses::fft_loss(img, img).value()[0];
  const Var<float> imgf = Var<float>::constant(tensor_cast<float>(img.value()));
  const float charbf = losses::charbonnier(imgf, imgf, 1e-3f).value()[0];
  const double lr_start = train::cosine_lr(0, 2000, 1e-4, 1e-7);
  const double lr_end = train::cosine_lr(2000, 2000, 1e-4, 1e-7);

  o.pass = tab_ok && charb == 1e-3 && charbf == 1e-3f && fftl == 0.0 && lr_start == 1e-4 &&
           lr_end == 1e-7;
  o.detail = fmt("tab(zero weights) == 2f: %s; charbonnier(o,o) = %.17g; fft_loss(o,o) = %g; "
                 "lr(0) = %g, lr(T) = %g",
                 tab_ok ? "exact" : "MISMATCH", charb, fftl, lr_start, lr_end);
  return o;
}

// ---- 4: identity at init ----

std::vector<data::Sample> synthetic_samples(std::size_t per_kind, std::size_t size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<data::Sample> out;
  for (data::WeatherKind kind : data::kAllKinds) {
    for (std::size_t i = 0; i < per_kind; ++i) {
      data::Sample s;
      s.kind = kind;
      s.clean = data::generate_scene(size, size, rng());
      s.degraded = data::degrade(s.clean, data::random_spec(kind, rng));
      out.push_back(std::move(s));
    }
  }
  return out;
}

Outcome identity() {
  Outcome o;
  bool bitwise = true;
  for (nn::Variant v : nn::kAllVariants) {
    nn::NetworkConfig cfg = nn::desk_config();
    cfg.variant = v;
    const nn::TANetModel<float> model(cfg);
    std::mt19937_64 rng(static_cast<std::uint64_t>(v));
    const Tensor<float> x = tensor_cast<float>(random_tensor(Shape(1, 64, 64, 3), rng, 0, 1));
    const auto y = model.forward(Var<float>::constant(x)).value();
    for (std::size_t i = 0; i < y.size(); ++i) bitwise = bitwise && y[i] == x[i];
  }
  const nn::TANetModel<float> model(nn::desk_config());
  const auto report = train::evaluate(model, synthetic_samples(4, 40, 11), {false, 0});
  bool exact = report.average_restored == report.average_degraded;
  for (const auto& k : report.kinds) exact = exact && k && k->psnr_restored == k->psnr_degraded;
  o.pass = bitwise && exact;
  o.detail = fmt("forward(x) == x bitwise for Net1..Net5: %s; eval restored %.6f dB == degraded %.6f dB: %s",
                 bitwise ? "yes" : "NO", report.average_restored, report.average_degraded,
                 exact ? "yes" : "NO");
  return o;
}

// ---- 5: single-pair overfit ----

struct OverfitResult {
  Outcome outcome;
  std::string report;  // compared across runs
};

OverfitResult overfit(const fs::path& dir) {
  const auto t0 = Clock::now();
  nn::NetworkConfig cfg;
  cfg.base_channels = 8;
  cfg.num_tabs = 1;
  cfg.seed = 5;
  nn::TANetModel<float> model(cfg);

  data::Sample pair;
  pair.kind = data::WeatherKind::kRain;
  pair.clean = data::generate_scene(32, 32, 21);
  std::mt19937_64 rng(22);
  pair.degraded = data::degrade(pair.clean, data::random_spec(pair.kind, rng));
  const std::vector<data::Sample> set = {pair};

  train::TrainState<float> state;
  state.lr0 = 1e-3;
  state.lr_min = 1e-6;
  state.seed = 5;
  train::TrainOptions opts;
  opts.steps = 500;
  opts.batch = 1;
  opts.crop = 32;
  opts.checkpoint_every = 0;
  opts.out_dir = dir;
  train::train(model, set, state, opts);
  const auto report = train::evaluate(model, set, {false, 0});
  const double secs = seconds_since(t0);
  const double gain = report.average_delta();
  OverfitResult r;
  r.report = train::format_eval_table(report);
  write_text(dir / "eval.txt", r.report);
  r.outcome.pass = gain >= 3.0 && secs <= 300.0;
  r.outcome.detail = fmt("degraded %.3f dB -> restored %.3f dB, gain %.3f dB (need >= 3), %zu params, %.1f s",
                         report.average_degraded, report.average_restored, gain, model.param_count(), secs);
  return r;
}

// ---- 6, 7: desk-scale training and ablation ----

struct DeskData {
  std::vector<data::Sample> train_set;
  std::vector<data::Sample> test_set;
  std::string hash;
};

DeskData desk_data(const fs::path& dir) {
  data::write_scenes(dir / "clean", 100, 96, 0);
  data::DatasetOptions opts;
  opts.per_kind = 100;
  opts.split_ratio = 0.9;
  opts.seed = 0;
  data::build_dataset(dir / "clean", dir / "data", opts);
  DeskData d;
  d.train_set = data::load_samples(data::read_manifest(dir / "data" / "train.txt"));
  d.test_set = data::load_samples(data::read_manifest(dir / "data" / "test.txt"));
  d.hash = data::manifest_file_hash(dir / "data" / "train.txt") + "-" +
           data::manifest_file_hash(dir / "data" / "test.txt");
  return d;
}

train::AblationOptions desk_options(const fs::path& out, std::vector<nn::Variant> variants) {
  train::AblationOptions opts;
  opts.train.steps = 2000;
  opts.train.batch = 4;
  opts.train.crop = 64;
  opts.train.checkpoint_every = 500;
  opts.train.out_dir = out;
  opts.train.log = &std::cerr;
  opts.train.log_every = 500;
  opts.seed = 0;
  opts.variants = std::move(variants);
  return opts;
}

struct DeskResult {
  Outcome desk;
  Outcome ablation;
  double net5_gain = 0;
  std::vector<std::string> files;  // relative paths compared across runs
};

std::optional<double> pinned_reference(const fs::path& file) {
  std::ifstream in(file);
  std::string key;
  double value;
  while (in >> key >> value) {
    if (key == "desk_net5_gain_db") return value;
  }
  return std::nullopt;
}

DeskResult desk_and_ablation(const fs::path& dir) {
  DeskResult r;
  const DeskData d = desk_data(dir);
  std::fprintf(stderr, "desk data: %zu train / %zu test pairs, manifest %s\n", d.train_set.size(),
               d.test_set.size(), d.hash.c_str());

  const nn::NetworkConfig base = nn::desk_config();
  const auto t0 = Clock::now();
  const auto net5 = train::run_ablation(base, d.train_set, d.test_set, d.hash,
                                        desk_options(dir / "ablation", {nn::Variant::kNet5}));
  const double net5_secs = seconds_since(t0);

  // Full per-kind report of the criterion-6 model.
  const auto model = io::load_checkpoint<float>(dir / "ablation" / "Net5" / "model.tant");
  const auto report = train::evaluate(model, d.test_set, {false, 0});
  write_text(dir / "desk_eval.txt", train::format_eval_table(report));
  r.net5_gain = report.average_delta();
  const auto counts = data::count_kinds(data::read_manifest(dir / "data" / "train.txt"));
  const bool data_ok = d.train_set.size() + d.test_set.size() == 300 && counts[0] == counts[1] &&
                       counts[1] == counts[2];
  r.desk.pass = data_ok && r.net5_gain >= 1.0 && net5_secs <= 1200.0;
  r.desk.detail = fmt("%zu pairs, Net5 2000 steps: degraded %.3f dB -> restored %.3f dB, gain %.3f dB "
                      "(need >= 1); haze %+.3f rain %+.3f snow %+.3f; %.0f s",
                      d.train_set.size() + d.test_set.size(), report.average_degraded,
                      report.average_restored, r.net5_gain, report.kinds[0]->delta(),
                      report.kinds[1]->delta(), report.kinds[2]->delta(), net5_secs);

  const auto rest = train::run_ablation(
      base, d.train_set, d.test_set, d.hash,
      desk_options(dir / "ablation",
                   {nn::Variant::kNet1, nn::Variant::kNet2, nn::Variant::kNet3, nn::Variant::kNet4}));
  train::AblationTable table = rest;
  table.rows.push_back(net5.rows.front());
  write_text(dir / "ablation.txt", train::format_ablation_table(table));
  write_text(dir / "ablation.csv", train::format_ablation_csv(table));
  std::cout << train::format_ablation_table(table);
  const double gap = table.row(nn::Variant::kNet5).average - table.row(nn::Variant::kNet1).average;
  r.ablation.pass = gap >= 0.3 && table.rows.size() == 5;
  r.ablation.detail = fmt("Net5 %.3f dB - Net1 %.3f dB = %+.3f dB (need >= +0.3)",
                          table.row(nn::Variant::kNet5).average, table.row(nn::Variant::kNet1).average, gap);

  r.files = {"data/train.txt", "data/test.txt", "desk_eval.txt", "ablation.txt", "ablation.csv"};
  for (nn::Variant v : nn::kAllVariants) {
    const std::string sub = "ablation/" + std::string(nn::to_string(v)) + "/";
    r.files.push_back(sub + "model.tant");
    r.files.push_back(sub + "checkpoint_000500.tant");
    r.files.push_back(sub + "loss.csv");
  }
  return r;
}

// ---- 8: parameter count ----

Outcome param_count() {
  const nn::NetworkConfig cfg = nn::full_scale_config();
  const std::size_t n = nn::TANetModel<float>(cfg).param_count();
  Outcome o;
  o.pass = n >= 8'100'000 && n <= 9'900'000 && n == nn::count_parameters(cfg);
  o.detail = fmt("base_channels %zu, num_tabs %zu: %zu params (%.3f M, need 8.1-9.9 M)", cfg.base_channels,
                 cfg.num_tabs, n, n / 1e6);
  return o;
}

void print(int id, const char* title, const Outcome& o) {
  std::printf("criterion %d %-28s %s  %s\n", id, title, o.pass ? "PASS" : "FAIL", o.detail.c_str());
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria 1-9"};
  std::string work = "acceptance_work";
  std::string reference;
  std::vector<int> only;
  app.add_option("--work", work, "scratch directory for data, checkpoints and reports");
  app.add_option("--reference", reference, "file holding the pinned desk-scale gain");
  app.add_option("--only", only, "run just these criteria (9 implies 5-7)");
  CLI11_PARSE(app, argc, argv);
  auto want = [&](int id) {
    return only.empty() || std::find(only.begin(), only.end(), id) != only.end() ||
           (id >= 5 && id <= 7 && std::find(only.begin(), only.end(), 9) != only.end());
  };

  const fs::path root = fs::absolute(work);
  std::error_code ec;
  fs::remove_all(root, ec);
  fs::create_directories(root);
  bool all = true;
  auto record = [&](int id, const char* title, const Outcome& o) {
    print(id, title, o);
    all = all && o.pass;
  };

  try {
    if (want(1)) record(1, "gradient correctness", gradients());
    if (want(2)) record(2, "kernel oracles", oracles());
    if (want(3)) record(3, "regression fixtures", fixtures());
    if (want(4)) record(4, "identity at init", identity());

    std::optional<OverfitResult> fit;
    if (want(5)) {
      fit = overfit(root / "run_a" / "overfit");
      record(5, "single-pair overfit", fit->outcome);
    }
    std::optional<DeskResult> desk;
    if (want(6) || want(7)) {
      desk = desk_and_ablation(root / "run_a");
      record(6, "desk-scale end-to-end", desk->desk);
      if (!reference.empty()) {
        if (const auto pinned = pinned_reference(reference)) {
          std::printf("  reference: pinned Net5 gain %.4f dB, this run %.4f dB (drift %+.4f dB)\n", *pinned,
                      desk->net5_gain, desk->net5_gain - *pinned);
        }
      }
      record(7, "desk-scale ablation", desk->ablation);
    }
    if (want(8)) record(8, "parameter count", param_count());

    if (want(9)) {
      Outcome o;
      std::vector<std::string> differing;
      const auto fit_b = overfit(root / "run_b" / "overfit");
      for (const char* f : {"model.tant", "loss.csv"}) {
        if (slurp(root / "run_a" / "overfit" / f) != slurp(root / "run_b" / "overfit" / f))
          differing.push_back(std::string("overfit/") + f);
      }
      if (fit_b.report != fit->report) differing.push_back("overfit report");
      const auto desk_b = desk_and_ablation(root / "run_b");
      for (const auto& f : desk->files) {
        const std::string a = slurp(root / "run_a" / f), b = slurp(root / "run_b" / f);
        if (a.empty() || a != b) differing.push_back(f);
      }
      o.pass = differing.empty();
      o.detail = fmt("second run of criteria 5-7: %zu files compared, %zu differ", desk->files.size() + 3,
                     differing.size());
      for (const auto& f : differing) o.detail += " " + f;
      record(9, "determinism", o);
    }
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%s\n", all ? "ALL SELECTED CRITERIA PASS" : "SOME CRITERIA FAIL");
  return all ? 0 : 1;
}
