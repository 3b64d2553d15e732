#include "varprune/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "varprune/datasets.hpp"
#include "varprune/errors.hpp"

namespace varprune {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      const auto part = trim(s.substr(start, i - start));
      if (!part.empty()) parts.emplace_back(part);
      start = i + 1;
    }
  }
  return parts;
}

double parse_double(std::string_view v, const std::string& key) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError(key + ": cannot parse '" + std::string(v) + "' as a number");
  return out;
}

std::uint64_t parse_u64(std::string_view v, const std::string& key) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError(key + ": cannot parse '" + std::string(v) + "' as an unsigned integer");
  return out;
}

bool parse_bool(std::string_view v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + std::string(v) + "'");
}

std::vector<double> parse_double_list(std::string_view v, const std::string& key) {
  std::vector<double> out;
  for (const auto& part : split(v, ',')) out.push_back(parse_double(part, key));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

std::vector<PruneGroup> parse_groups(std::string_view v, const std::string& key) {
  std::vector<PruneGroup> groups;
  for (const auto& chunk : split(v, ';')) {
    const auto fields = std::count(chunk.begin(), chunk.end(), ':');
    if (fields != 2)
      throw ConfigError(key + ": group '" + chunk + "' must be name:skew:members");
    const auto c1 = chunk.find(':');
    const auto c2 = chunk.find(':', c1 + 1);
    PruneGroup g;
    g.name = std::string(trim(chunk.substr(0, c1)));
    const auto skew = trim(std::string_view(chunk).substr(c1 + 1, c2 - c1 - 1));
    if (!skew.empty()) g.skew = parse_double(skew, key);
    for (const auto& m : split(std::string_view(chunk).substr(c2 + 1), '|'))
      g.members.push_back(m);
    if (g.name.empty()) throw ConfigError(key + ": group name missing in '" + chunk + "'");
    if (g.members.empty())
      throw ConfigError(key + ": group '" + g.name + "' lists no members");
    groups.push_back(std::move(g));
  }
  if (groups.empty()) throw ConfigError(key + ": no groups listed");
  return groups;
}

}  // namespace

Net parse_layer_list(std::string_view text) {
  Net net;
  for (const auto& token : split(text, ',')) {
    if (token == "relu") net.push_back(LayerSpec::act(Activation::relu));
    else if (token == "tanh") net.push_back(LayerSpec::act(Activation::tanh_fn));
    else if (token == "sigmoid") net.push_back(LayerSpec::act(Activation::sigmoid));
    else if (token == "identity") net.push_back(LayerSpec::act(Activation::identity));
    else if (token.starts_with("dense:")) {
      const auto dims = split(std::string_view(token).substr(6), ':');
      if (dims.size() != 2)
        throw ConfigError("model.layers: dense layer must be dense:IN:OUT, got '" +
                          token + "'");
      net.push_back(LayerSpec::dense(parse_u64(dims[0], "model.layers"),
                                     parse_u64(dims[1], "model.layers")));
    } else {
      throw ConfigError("model.layers: unknown layer token '" + token + "'");
    }
  }
  if (net.empty()) throw ConfigError("model.layers: no layers listed");
  return net;
}

ExperimentConfig parse_config_text(std::string_view text, const std::string& source) {
  ExperimentConfig cfg;
  std::unordered_set<std::string> seen;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                           : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(source + ":" + std::to_string(line_no) +
                        ": expected key = value, got '" + std::string(line) + "'");
    const std::string key{trim(line.substr(0, eq))};
    const std::string_view value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second)
      throw ConfigError(source + ": duplicate key '" + key + "'");

    if (key == "model.layers") cfg.layers = parse_layer_list(value);
    else if (key == "model.prune_biases") cfg.prune_biases = parse_bool(value, key);
    else if (key == "data.kind") cfg.data.kind = std::string(value);
    else if (key == "data.n") cfg.data.n = parse_u64(value, key);
    else if (key == "data.noise") cfg.data.noise = parse_double(value, key);
    else if (key == "data.k") cfg.data.k = parse_u64(value, key);
    else if (key == "data.spread") cfg.data.spread = parse_double(value, key);
    else if (key == "data.grid_w") cfg.data.grid_w = parse_u64(value, key);
    else if (key == "data.grid_h") cfg.data.grid_h = parse_u64(value, key);
    else if (key == "data.n_samples") cfg.data.n_samples = parse_u64(value, key);
    else if (key == "data.eval_n") cfg.data.eval_n = parse_u64(value, key);
    else if (key == "train.eta0") cfg.train.eta0 = parse_double(value, key);
    else if (key == "train.momentum") cfg.train.momentum = parse_double(value, key);
    else if (key == "train.lambda") cfg.lambdas = parse_double_list(value, key);
    else if (key == "train.batch_size") cfg.train.batch_size = parse_u64(value, key);
    else if (key == "train.epochs") cfg.train.epochs = parse_u64(value, key);
    else if (key == "train.rho") cfg.train.rho = parse_double(value, key);
    else if (key == "train.optimizer") {
      if (value == "sgd") cfg.train.optimizer = OptimizerKind::sgd;
      else if (value == "sam") cfg.train.optimizer = OptimizerKind::sam;
      else throw ConfigError(key + ": expected sgd or sam, got '" + std::string(value) + "'");
    } else if (key == "train.schedule") {
      if (value == "constant") cfg.train.schedule.kind = ScheduleKind::constant;
      else if (value == "step_decay") cfg.train.schedule.kind = ScheduleKind::step_decay;
      else if (value == "dynamic_tuning") cfg.train.schedule.kind = ScheduleKind::dynamic_tuning;
      else if (value == "inv_sqrt") cfg.train.schedule.kind = ScheduleKind::inv_sqrt;
      else throw ConfigError(key + ": unknown schedule '" + std::string(value) + "'");
    } else if (key == "train.schedule.factor") {
      cfg.train.schedule.decay_factor = parse_double(value, key);
    } else if (key == "train.schedule.period") {
      cfg.train.schedule.period = parse_u64(value, key);
    } else if (key == "train.schedule.c") {
      cfg.train.schedule.c = parse_double(value, key);
    } else if (key == "reg.r") {
      cfg.reg.r = parse_double(value, key);
    } else if (key == "reg.epsilon") {
      cfg.reg.epsilon = parse_double(value, key);
    } else if (key == "reg.include") {
      if (value != "prunable" && value != "all")
        throw ConfigError(key + ": expected prunable or all, got '" + std::string(value) + "'");
      cfg.reg_include = std::string(value);
    } else if (key == "prune.rates") {
      cfg.prune_rates = parse_double_list(value, key);
    } else if (key == "prune.scope") {
      if (value != "global" && value != "groups")
        throw ConfigError(key + ": expected global or groups, got '" + std::string(value) + "'");
      cfg.prune_scope = std::string(value);
    } else if (key == "prune.groups") {
      cfg.prune_groups = parse_groups(value, key);
    } else if (key == "seeds") {
      cfg.seeds.clear();
      for (const auto& part : split(value, ',')) cfg.seeds.push_back(parse_u64(part, key));
    } else if (key == "output_dir") {
      cfg.output_dir = std::string(value);
    } else {
      throw ConfigError(source + ": unknown key '" + key + "'");
    }
  }

  validate(cfg);
  return cfg;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.layers.empty()) throw ConfigError("model.layers: required");
  validate_net(cfg.layers);

  if (cfg.data.kind == "two_moons") {
    if (cfg.data.n < 2) throw ConfigError("data.n: two_moons needs n >= 2");
  } else if (cfg.data.kind == "blobs") {
    if (cfg.data.n < 2) throw ConfigError("data.n: blobs needs n >= 2");
    if (cfg.data.k < 1 || cfg.data.k > cfg.data.n)
      throw ConfigError("data.k: must lie in [1, data.n]");
  } else if (cfg.data.kind == "shapes") {
    if (cfg.data.grid_w == 0 || cfg.data.grid_h == 0)
      throw ConfigError("data.grid_w/data.grid_h: must be positive");
    if (cfg.data.n_samples == 0) throw ConfigError("data.n_samples: must be >= 1");
  } else {
    throw ConfigError("data.kind: expected two_moons, blobs or shapes, got '" +
                      cfg.data.kind + "'");
  }

  validate(cfg.train);
  if (cfg.lambdas.empty()) throw ConfigError("train.lambda: empty list");
  for (double l : cfg.lambdas)
    if (l < 0.0) throw ConfigError("train.lambda: values must be >= 0");
  if (!(cfg.reg.r > 0.0)) throw ConfigError("reg.r: must be > 0");
  if (!(cfg.reg.epsilon > 0.0)) throw ConfigError("reg.epsilon: must be > 0");
  for (double p : cfg.prune_rates)
    if (!(p >= 0.0) || p >= 1.0) throw ConfigError("prune.rates: values must lie in [0, 1)");
  if (cfg.prune_scope == "groups" && cfg.prune_groups.empty())
    throw ConfigError("prune.groups: required when prune.scope = groups");
  if (cfg.seeds.empty()) throw ConfigError("seeds: at least one seed required");
  if (cfg.output_dir.empty()) throw ConfigError("output_dir: must not be empty");
}

PruneSpec ExperimentConfig::prune_spec(double rate) const {
  PruneSpec spec;
  spec.rate = rate;
  if (prune_scope == "groups") spec.groups = prune_groups;
  return spec;
}

RegConfig ExperimentConfig::reg_config(double lambda) const {
  RegConfig r = reg;
  r.lambda = lambda;
  if (reg_include == "all")
    r.include = [](const ParamEntry&) { return true; };
  return r;
}

Dataset ExperimentConfig::make_train_data(RngState& rng) const {
  if (data.kind == "two_moons") return gen_two_moons(data.n, data.noise, rng);
  if (data.kind == "blobs") return gen_blobs(data.n, data.k, data.spread, rng);
  return gen_shapes(data.grid_w, data.grid_h, data.n_samples, rng);
}

Dataset ExperimentConfig::make_eval_data(RngState& rng) const {
  const std::size_t base = data.kind == "shapes" ? data.n_samples : data.n;
  const std::size_t n = data.eval_n > 0 ? data.eval_n : std::max<std::size_t>(2, base / 4);
  if (data.kind == "two_moons") return gen_two_moons(n, data.noise, rng);
  if (data.kind == "blobs") return gen_blobs(n, data.k, data.spread, rng);
  return gen_shapes(data.grid_w, data.grid_h, n, rng);
}

}  // namespace varprune
