// SPDX-License-Identifier: Apache-2.0
#include "tanet/train/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "tanet/losses.hpp"

namespace tanet::train {

namespace {

using nn::uniform01;

double evaluate_loss(const std::function<Var<double>()>& loss, std::uint64_t* signature) {
  KinkProbe probe;
  const double value = loss().value()[0];
  *signature = probe.signature();
  return value;
}

Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo, double hi) {
  Tensor<double> t(shape);
  for (auto& v : t.data()) v = lo + (hi - lo) * uniform01(rng);
  return t;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// sum(out * weights): a generic scalar head with a dense gradient.
Var<double> project(const Var<double>& out, const Var<double>& weights) {
  return ops::sum(ops::mul(out, weights));
}

}  // namespace

bool GradCheckReport::pass() const {
  return std::all_of(groups.begin(), groups.end(), [](const GroupResult& g) { return g.pass; });
}

double GradCheckReport::max_rel_error() const {
  double m = 0;
  for (const auto& g : groups) m = std::max(m, g.max_rel_error);
  return m;
}

std::size_t GradCheckReport::checked() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.checked;
  return n;
}

std::size_t GradCheckReport::skipped() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.skipped;
  return n;
}

GradCheckReport check_gradients(const std::string& name, const std::function<Var<double>()>& loss,
                                const std::vector<nn::NamedParameter<double>>& params,
                                const GradCheckOptions& options) {
  for (const auto& p : params) Var<double>(p.var).zero_grad();
  std::uint64_t base_signature = 0;
  {
    Tape<double> tape;
    KinkProbe probe;
    const Var<double> value = loss();
    base_signature = probe.signature();
    tape.backward(value);
  }

  GradCheckReport report{name, {}};
  std::mt19937_64 rng(options.seed);
  for (const auto& p : params) {
    GroupResult group;
    group.group = p.name;
    Var<double> var = p.var;
    const Tensor<double> analytic = var.grad();
    const std::size_t n = analytic.size();

    std::set<std::size_t> coords;
    if (n <= options.samples_per_tensor + 1) {
      for (std::size_t i = 0; i < n; ++i) coords.insert(i);
    } else {
      std::size_t arg = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (std::abs(analytic[i]) > std::abs(analytic[arg])) arg = i;
      }
      coords.insert(arg);
      while (coords.size() < options.samples_per_tensor + 1) {
        coords.insert(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
      }
    }

    for (std::size_t i : coords) {
      double& x = var.mutable_value()[i];
      const double saved = x;
      std::uint64_t sig_plus = 0, sig_minus = 0;
      x = saved + options.h;
      const double f_plus = evaluate_loss(loss, &sig_plus);
      x = saved - options.h;
      const double f_minus = evaluate_loss(loss, &sig_minus);
      x = saved;
      if (sig_plus != base_signature || sig_minus != base_signature) {
        ++group.skipped;
        continue;
      }
      const double numeric = (f_plus - f_minus) / (2.0 * options.h);
      const double abs_err = std::abs(numeric - analytic[i]);
      const double scale = std::max({std::abs(numeric), std::abs(analytic[i]),
                                     options.abs_floor / options.tolerance});
      const double rel_err = abs_err / scale;
      group.max_abs_error = std::max(group.max_abs_error, abs_err);
      group.max_rel_error = std::max(group.max_rel_error, rel_err);
      if (rel_err > options.tolerance) group.pass = false;
      ++group.checked;
    }
    report.groups.push_back(group);
  }
  for (const auto& p : params) Var<double>(p.var).zero_grad();
  return report;
}

void randomize_parameters(const std::vector<nn::NamedParameter<double>>& params, std::mt19937_64& rng) {
  for (const auto& p : params) {
    Var<double> var = p.var;
    const Shape& s = var.shape();
    const bool is_vector = s[0] == 1 && s[1] == 1 && s[2] == 1;
    double lo = -0.5, hi = 0.5;
    if (ends_with(p.name, ".gamma")) {
      lo = 0.75;
      hi = 1.25;
    } else if (!is_vector) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(s[0] * s[1] * s[2]));
      lo = -bound;
      hi = bound;
    }
    for (auto& v : var.mutable_value().data()) v = lo + (hi - lo) * uniform01(rng);
  }
}

std::vector<GradCheckReport> run_gradcheck_suite(const nn::NetworkConfig& config,
                                                 const GradCheckOptions& options) {
  std::vector<GradCheckReport> reports;
  std::mt19937_64 rng(options.seed);
  using P = nn::NamedParameter<double>;

  auto module_check = [&](const std::string& name, Shape shape, auto build) {
    nn::ParameterStore<double> store(rng());
    auto module = build(store);
    std::vector<P> params = store.parameters();
    randomize_parameters(params, rng);
    const Var<double> input = Var<double>::parameter(random_tensor(shape, rng, -1.0, 1.0));
    const Var<double> weights = Var<double>::constant(random_tensor(shape, rng, -1.0, 1.0));
    params.push_back({"input", input});
    reports.push_back(check_gradients(
        name, [&] { return project(module.forward(input), weights); }, params, options));
  };

  module_check("LPA 4x4x2", Shape(1, 4, 4, 2),
               [](auto& s) { return nn::LPAModule<double>::create(s, "lpa"); });
  module_check("GSA 5x4x2", Shape(1, 5, 4, 2),
               [](auto& s) { return nn::GSAModule<double>::create(s, "gsa", 2); });
  module_check("GDA 4x4x4", Shape(1, 4, 4, 4),
               [](auto& s) { return nn::GDAModule<double>::create(s, "gda", 4); });
  module_check("TAB 4x4x4", Shape(1, 4, 4, 4),
               [](auto& s) { return nn::TABlock<double>::create(s, "tab", 4); });

  {
    const Shape shape(1, 6, 5, 3);
    const Var<double> restored = Var<double>::parameter(random_tensor(shape, rng, 0.0, 1.0));
    const Var<double> target = Var<double>::constant(random_tensor(shape, rng, 0.0, 1.0));
    const std::vector<P> params{{"restored", restored}};
    reports.push_back(check_gradients(
        "charbonnier 6x5x3", [&] { return losses::charbonnier(restored, target, 1e-3); }, params, options));
    reports.push_back(check_gradients(
        "fft_loss 6x5x3", [&] { return losses::fft_loss(restored, target); }, params, options));
    const Var<double> restored8 = Var<double>::parameter(random_tensor(Shape(2, 8, 8, 3), rng, 0.0, 1.0));
    const Var<double> target8 = Var<double>::constant(random_tensor(Shape(2, 8, 8, 3), rng, 0.0, 1.0));
    reports.push_back(check_gradients(
        "total_loss 2x8x8x3", [&] { return losses::total_loss(restored8, target8, losses::LossConfig{}); },
        {{"restored", restored8}}, options));
  }

  {
    nn::NetworkConfig c = config;
    c.variant = nn::Variant::kNet5;
    nn::TANetModel<double> model(c);
    std::vector<P> params = model.parameters().parameters();
    randomize_parameters(params, rng);
    const Var<double> image = Var<double>::parameter(random_tensor(Shape(1, 8, 8, 3), rng, 0.0, 1.0));
    const Var<double> target = Var<double>::constant(random_tensor(Shape(1, 8, 8, 3), rng, 0.0, 1.0));
    params.push_back({"input", image});
    const std::string name = "model " + std::to_string(c.num_tabs) + "-TAB B=" +
                             std::to_string(c.base_channels) + " 8x8x3";
    reports.push_back(check_gradients(
        name, [&] { return losses::total_loss(model.forward(image), target, losses::LossConfig{}); },
        params, options));
  }
  return reports;
}

std::string format_gradcheck(const std::vector<GradCheckReport>& reports, bool per_group) {
  std::string out;
  char line[200];
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-32s %s  max_rel %.3e  checked %zu  skipped %zu  groups %zu\n",
                  r.name.c_str(), r.pass() ? "PASS" : "FAIL", r.max_rel_error(), r.checked(), r.skipped(),
                  r.groups.size());
    out += line;
    if (!per_group) continue;
    for (const auto& g : r.groups) {
      std::snprintf(line, sizeof line, "    %-44s %s  rel %.3e  abs %.3e  n %zu  skip %zu\n", g.group.c_str(),
                    g.pass ? "ok  " : "FAIL", g.max_rel_error, g.max_abs_error, g.checked, g.skipped);
      out += line;
    }
  }
  return out;
}

}  // namespace tanet::train
