#include "dascd/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace dascd {

void RunConfig::validate() const {
  encoder.validate();
  loss_cfg.validate();
  synthetic.validate();
  if (!(lr > 0.0)) throw ContractError("config: lr must be positive");
  if (batch_size == 0) throw ContractError("config: batch_size must be positive");
  if (threshold && !(*threshold >= 0.0)) throw ContractError("config: threshold must be >= 0");
  if (synthetic.image_size % encoder.stride() != 0) {
    throw ContractError("config: image_size " + std::to_string(synthetic.image_size) +
                        " is not divisible by the encoder stride " + std::to_string(encoder.stride()));
  }
}

double RunConfig::decision_threshold() const {
  if (threshold) return *threshold;
  if (loss == LossKind::contrastive) return loss_cfg.m2 / 2.0;
  return (loss_cfg.m1 + loss_cfg.m2) / 2.0;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad(std::string_view key, std::string_view value, const char* expected) {
  throw ContractError("config: bad value '" + std::string(value) + "' for " + std::string(key) + " (expected " +
                      expected + ")");
}

double to_double(std::string_view key, std::string_view v) {
  const std::string s(v);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    bad(key, v, "a number");
  }
  if (used != s.size()) bad(key, v, "a number");
  return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad(key, v, "a non-negative integer");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "1" || v == "on" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "off" || v == "false" || v == "no") return false;
  bad(key, v, "on/off");
}

std::vector<std::string> to_list(std::string_view v) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    items.push_back(trim(v.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return items;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  auto& s = c.synthetic;
  if (key == "channels") {
    c.encoder.channels.clear();
    for (const auto& item : to_list(v)) c.encoder.channels.push_back(to_uint(key, item));
  } else if (key == "downsample") {
    c.encoder.downsample.clear();
    for (const auto& item : to_list(v)) c.encoder.downsample.push_back(to_bool(key, item));
  } else if (key == "kernel_size") {
    c.encoder.kernel_size = to_uint(key, v);
  } else if (key == "spatial_attention") {
    c.attention.spatial = to_bool(key, v);
  } else if (key == "channel_attention") {
    c.attention.channel = to_bool(key, v);
  } else if (key == "loss") {
    if (v == "wdmc") c.loss = LossKind::wdmc;
    else if (v == "contrastive") c.loss = LossKind::contrastive;
    else bad(key, v, "wdmc or contrastive");
  } else if (key == "metric") {
    c.metric = parse_metric(v);
  } else if (key == "m1") {
    c.loss_cfg.m1 = to_double(key, v);
  } else if (key == "m2") {
    c.loss_cfg.m2 = to_double(key, v);
  } else if (key == "w1") {
    c.loss_cfg.w1 = to_double(key, v);
  } else if (key == "w2") {
    c.loss_cfg.w2 = to_double(key, v);
  } else if (key == "lambda1") {
    c.loss_cfg.lambda1 = to_double(key, v);
  } else if (key == "lambda2") {
    c.loss_cfg.lambda2 = to_double(key, v);
  } else if (key == "lambda3") {
    c.loss_cfg.lambda3 = to_double(key, v);
  } else if (key == "reduction") {
    if (v == "mean") c.loss_cfg.reduction = Reduction::mean;
    else if (v == "sum") c.loss_cfg.reduction = Reduction::sum;
    else bad(key, v, "mean or sum");
  } else if (key == "weight_mode") {
    if (v == "dataset") c.weight_mode = WeightMode::dataset;
    else if (v == "manual") c.weight_mode = WeightMode::manual;
    else bad(key, v, "dataset or manual");
  } else if (key == "lr") {
    c.lr = to_double(key, v);
  } else if (key == "batch_size") {
    c.batch_size = to_uint(key, v);
  } else if (key == "epochs") {
    c.epochs = to_uint(key, v);
  } else if (key == "seed") {
    c.seed = to_uint(key, v);
  } else if (key == "threshold") {
    if (v == "auto") c.threshold.reset();
    else c.threshold = to_double(key, v);
  } else if (key == "image_size") {
    s.image_size = to_uint(key, v);
  } else if (key == "n_shapes") {
    s.n_shapes = to_uint(key, v);
  } else if (key == "n_static") {
    s.n_static = to_uint(key, v);
  } else if (key == "shape_kinds") {
    s.rectangles = s.discs = false;
    for (const auto& item : to_list(v)) {
      if (item == "rectangle") s.rectangles = true;
      else if (item == "disc") s.discs = true;
      else bad(key, item, "rectangle and/or disc");
    }
  } else if (key == "brightness") {
    s.brightness = to_double(key, v);
  } else if (key == "gain") {
    s.gain = to_double(key, v);
  } else if (key == "noise") {
    s.noise = to_double(key, v);
  } else if (key == "min_changed") {
    s.min_changed = to_double(key, v);
  } else if (key == "max_changed") {
    s.max_changed = to_double(key, v);
  } else if (key == "n_train") {
    c.n_train = to_uint(key, v);
  } else if (key == "n_val") {
    c.n_val = to_uint(key, v);
  } else if (key == "n_test") {
    c.n_test = to_uint(key, v);
  } else if (key == "manifest") {
    c.manifest = v;
  } else {
    throw ContractError("config: unknown key '" + std::string(key) + "'");
  }
}

RunConfig parse_config(std::string_view text, RunConfig cfg) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ContractError("config line " + std::to_string(lineno) + ": expected key=value, got '" + t + "'");
    }
    apply_setting(cfg, trim(std::string_view(t).substr(0, eq)), std::string_view(t).substr(eq + 1));
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string to_text(const RunConfig& c) {
  std::ostringstream os;
  auto list = [](const auto& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) out += ',';
      if constexpr (std::is_same_v<std::decay_t<decltype(xs)>, std::vector<bool>>) {
        out += xs[i] ? "on" : "off";
      } else {
        out += std::to_string(xs[i]);
      }
    }
    return out;
  };
  const auto& s = c.synthetic;
  std::string kinds;
  if (s.rectangles) kinds = "rectangle";
  if (s.discs) kinds += kinds.empty() ? "disc" : ",disc";
  os << "channels=" << list(c.encoder.channels) << '\n'
     << "downsample=" << list(c.encoder.downsample) << '\n'
     << "kernel_size=" << c.encoder.kernel_size << '\n'
     << "spatial_attention=" << (c.attention.spatial ? "on" : "off") << '\n'
     << "channel_attention=" << (c.attention.channel ? "on" : "off") << '\n'
     << "loss=" << (c.loss == LossKind::wdmc ? "wdmc" : "contrastive") << '\n'
     << "metric=" << to_string(c.metric) << '\n'
     << "m1=" << fmt(c.loss_cfg.m1) << '\n'
     << "m2=" << fmt(c.loss_cfg.m2) << '\n'
     << "w1=" << fmt(c.loss_cfg.w1) << '\n'
     << "w2=" << fmt(c.loss_cfg.w2) << '\n'
     << "lambda1=" << fmt(c.loss_cfg.lambda1) << '\n'
     << "lambda2=" << fmt(c.loss_cfg.lambda2) << '\n'
     << "lambda3=" << fmt(c.loss_cfg.lambda3) << '\n'
     << "reduction=" << (c.loss_cfg.reduction == Reduction::mean ? "mean" : "sum") << '\n'
     << "weight_mode=" << (c.weight_mode == WeightMode::dataset ? "dataset" : "manual") << '\n'
     << "lr=" << fmt(c.lr) << '\n'
     << "batch_size=" << c.batch_size << '\n'
     << "epochs=" << c.epochs << '\n'
     << "seed=" << c.seed << '\n'
     << "threshold=" << (c.threshold ? fmt(*c.threshold) : std::string("auto")) << '\n'
     << "image_size=" << s.image_size << '\n'
     << "n_shapes=" << s.n_shapes << '\n'
     << "n_static=" << s.n_static << '\n'
     << "shape_kinds=" << kinds << '\n'
     << "brightness=" << fmt(s.brightness) << '\n'
     << "gain=" << fmt(s.gain) << '\n'
     << "noise=" << fmt(s.noise) << '\n'
     << "min_changed=" << fmt(s.min_changed) << '\n'
     << "max_changed=" << fmt(s.max_changed) << '\n'
     << "n_train=" << c.n_train << '\n'
     << "n_val=" << c.n_val << '\n'
     << "n_test=" << c.n_test << '\n';
  if (!c.manifest.empty()) os << "manifest=" << c.manifest << '\n';
  return os.str();
}

}  // namespace dascd
