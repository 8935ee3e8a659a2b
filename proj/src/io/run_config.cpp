// SPDX-License-Identifier: Apache-2.0
#include "tanet/io/run_config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace tanet::io {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename Number>
Number parse_number(std::string_view value, std::string_view key) {
  Number out{};
  const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || end != value.data() + value.size()) {
    throw UsageError("invalid value '" + std::string(value) + "' for " + std::string(key));
  }
  return out;
}

bool parse_bool(std::string_view value, std::string_view key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw UsageError("invalid value '" + std::string(value) + "' for " + std::string(key) +
                   " (expected true or false)");
}

std::string shortest(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

void assign(RunConfig& c, std::string_view key, std::string_view value) {
  if (key == "base_channels") c.base_channels = parse_number<std::size_t>(value, key);
  else if (key == "num_tabs") c.num_tabs = parse_number<std::size_t>(value, key);
  else if (key == "crop") c.crop = parse_number<std::size_t>(value, key);
  else if (key == "batch") c.batch = parse_number<std::size_t>(value, key);
  else if (key == "steps") c.steps = parse_number<std::size_t>(value, key);
  else if (key == "lr0") c.lr0 = parse_number<double>(value, key);
  else if (key == "lr_min") c.lr_min = parse_number<double>(value, key);
  else if (key == "lambda_fft") c.lambda_fft = parse_number<double>(value, key);
  else if (key == "epsilon") c.epsilon = parse_number<double>(value, key);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(value, key);
  else if (key == "variant") c.variant = nn::parse_variant(value);
  else if (key == "use_global_residual") c.use_global_residual = parse_bool(value, key);
  else if (key == "data_dir") c.data_dir = std::string(value);
  else if (key == "out_dir") c.out_dir = std::string(value);
  else throw UsageError("unknown config key '" + std::string(key) + "'");
}

std::pair<std::string_view, std::string_view> split_assignment(std::string_view line) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) throw UsageError("expected 'key = value'");
  const auto key = trim(line.substr(0, eq));
  const auto value = trim(line.substr(eq + 1));
  if (key.empty()) throw UsageError("missing key before '='");
  if (value.empty()) throw UsageError("missing value for " + std::string(key));
  return {key, value};
}

}  // namespace

nn::NetworkConfig RunConfig::network() const {
  nn::NetworkConfig n;
  n.base_channels = base_channels;
  n.num_tabs = num_tabs;
  n.use_global_residual = use_global_residual;
  n.seed = seed;
  n.variant = variant;
  return n;
}

losses::LossConfig RunConfig::loss() const {
  losses::LossConfig l;
  l.epsilon = epsilon;
  l.lambda_fft = lambda_fft;
  return train::loss_config_for(variant, l);
}

train::TrainOptions RunConfig::train_options() const {
  train::TrainOptions t;
  t.steps = steps;
  t.batch = batch;
  t.crop = crop;
  t.out_dir = out_dir;
  return t;
}

void RunConfig::validate() const {
  network().validate();
  loss().validate();
  if (crop == 0 || crop % 4 != 0) throw ParameterError("crop must be a positive multiple of 4");
  if (batch == 0) throw ParameterError("batch must be >= 1");
  if (!(lr_min > 0.0 && lr0 > lr_min)) throw ParameterError("learning rates need lr0 > lr_min > 0");
}

RunConfig parse_run_config(std::string_view text, const std::string& source) {
  RunConfig config;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    try {
      const auto [key, value] = split_assignment(line);
      if (!seen.insert(std::string(key)).second) {
        throw UsageError("key '" + std::string(key) + "' given twice");
      }
      assign(config, key, value);
    } catch (const UsageError& e) {
      throw UsageError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

void apply_override(RunConfig& config, std::string_view assignment) {
  const auto [key, value] = split_assignment(assignment);
  assign(config, key, value);
}

std::string format_run_config(const RunConfig& c) {
  std::string out;
  auto line = [&](std::string_view key, const std::string& value) {
    out += std::string(key) + " = " + value + "\n";
  };
  line("base_channels", std::to_string(c.base_channels));
  line("num_tabs", std::to_string(c.num_tabs));
  line("crop", std::to_string(c.crop));
  line("batch", std::to_string(c.batch));
  line("steps", std::to_string(c.steps));
  line("lr0", shortest(c.lr0));
  line("lr_min", shortest(c.lr_min));
  line("lambda_fft", shortest(c.lambda_fft));
  line("epsilon", shortest(c.epsilon));
  line("seed", std::to_string(c.seed));
  line("variant", std::string(nn::to_string(c.variant)));
  line("use_global_residual", c.use_global_residual ? "true" : "false");
  line("data_dir", c.data_dir.generic_string());
  line("out_dir", c.out_dir.generic_string());
  return out;
}

}  // namespace tanet::io
