// SPDX-License-Identifier: Apache-2.0
#include "tanet/train/ablation.hpp"

#include <cstdio>

namespace tanet::train {

const AblationRow& AblationTable::row(nn::Variant v) const {
  for (const auto& r : rows) {
    if (r.variant == v) return r;
  }
  throw UsageError("variant " + std::string(nn::to_string(v)) + " not in the ablation table");
}

AblationTable run_ablation(const nn::NetworkConfig& base, const std::vector<data::Sample>& train_set,
                           const std::vector<data::Sample>& test_set, const std::string& manifest_hash,
                           const AblationOptions& options) {
  AblationTable table;
  table.manifest_hash = manifest_hash;
  table.steps = options.train.steps;
  for (nn::Variant variant : options.variants) {
    nn::TANetModel<float> model = nn::build_ablation_variant<float>(base, variant);
    TrainState<float> state;
    state.lr0 = options.lr0;
    state.lr_min = options.lr_min;
    state.seed = options.seed;
    state.loss = loss_config_for(variant, options.loss);
    TrainOptions topts = options.train;
    if (!topts.out_dir.empty()) topts.out_dir /= std::string(nn::to_string(variant));
    if (topts.log) *topts.log << "== " << nn::to_string(variant) << " (" << model.param_count() << " params)\n";
    const TrainResult result = train(model, train_set, state, topts);

    EvalOptions eopts;
    eopts.time_inference = false;
    const EvalReport report = evaluate(model, test_set, eopts);
    AblationRow row;
    row.variant = variant;
    row.params = model.param_count();
    for (std::size_t k = 0; k < 3; ++k) {
      row.psnr[k] = report.kinds[k] ? report.kinds[k]->psnr_restored : 0.0;
    }
    row.average = report.average_restored;
    row.degraded_average = report.average_degraded;
    row.final_loss = result.curve.empty() ? 0.0 : result.curve.back().loss;
    table.rows.push_back(row);
  }
  return table;
}

std::string format_ablation_table(const AblationTable& table) {
  std::string out = "manifest " + table.manifest_hash + "  steps " + std::to_string(table.steps) + "\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %9s %9s %9s %9s %10s\n", "variant", "haze", "rain", "snow",
                "average", "params");
  out += line;
  for (const auto& r : table.rows) {
    std::snprintf(line, sizeof line, "%-8s %9.4f %9.4f %9.4f %9.4f %10zu\n",
                  std::string(nn::to_string(r.variant)).c_str(), r.psnr[0], r.psnr[1], r.psnr[2],
                  r.average, r.params);
    out += line;
  }
  if (!table.rows.empty()) {
    std::snprintf(line, sizeof line, "%-8s %39.4f\n", "input", table.rows.front().degraded_average);
    out += line;
  }
  return out;
}

std::string format_ablation_csv(const AblationTable& table) {
  std::string out = "variant,haze,rain,snow,average,params,final_loss,manifest_hash\n";
  char line[200];
  for (const auto& r : table.rows) {
    std::snprintf(line, sizeof line, "%s,%.6f,%.6f,%.6f,%.6f,%zu,%.8g,%s\n",
                  std::string(nn::to_string(r.variant)).c_str(), r.psnr[0], r.psnr[1], r.psnr[2],
                  r.average, r.params, r.final_loss, table.manifest_hash.c_str());
    out += line;
  }
  return out;
}

}  // namespace tanet::train
