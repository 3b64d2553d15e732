#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "varprune/checkpoint.hpp"
#include "varprune/datasets.hpp"
#include "varprune/errors.hpp"
#include "varprune/experiment.hpp"

using namespace varprune;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "varprune_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<char> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ExperimentConfig small_config(const fs::path& out_dir) {
  ExperimentConfig cfg = parse_config_text(
      "model.layers = dense:2:8, tanh, dense:8:2\n"
      "data.kind = two_moons\n"
      "data.n = 80\n"
      "data.noise = 0.15\n"
      "data.eval_n = 40\n"
      "train.eta0 = 0.2\n"
      "train.momentum = 0.9\n"
      "train.lambda = 0, 1e-4\n"
      "train.batch_size = 16\n"
      "train.epochs = 6\n"
      "prune.rates = 0, 0.3, 0.6, 0.9\n"
      "seeds = 1, 2, 3, 4, 5\n",
      "test");
  cfg.output_dir = out_dir.string();
  return cfg;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("sweep row counting and ordering") {
  const auto dir = fresh_dir("counting");
  const ExperimentConfig cfg = small_config(dir);
  const auto outputs = run_experiment(cfg);
  CHECK(outputs.diverged_runs == 0);
  // 2 lambdas x 5 seeds x 4 rates, one accuracy metric each.
  CHECK(outputs.rows.size() == 40);
  for (std::size_t i = 1; i < outputs.rows.size(); ++i) {
    const auto& a = outputs.rows[i - 1];
    const auto& b = outputs.rows[i];
    const auto key_a = std::make_tuple(a.lambda, a.seed, a.prune_rate);
    const auto key_b = std::make_tuple(b.lambda, b.seed, b.prune_rate);
    CHECK(key_a <= key_b);
  }
  CHECK(fs::exists(dir / "sweep.csv"));
  // One checkpoint, training log and histogram per (lambda, seed).
  std::size_t checkpoints = 0;
  for (const auto& entry : fs::directory_iterator(dir))
    checkpoints += entry.path().extension() == ".varw";
  CHECK(checkpoints == 10);
}

TEST_CASE("empty rate list produces training outputs only") {
  const auto dir = fresh_dir("norates");
  ExperimentConfig cfg = small_config(dir);
  cfg.prune_rates.clear();
  cfg.lambdas = {0.0};
  cfg.seeds = {1};
  const auto outputs = run_experiment(cfg);
  CHECK(outputs.rows.empty());
  CHECK(fs::exists(dir / "sweep.csv"));
  CHECK(fs::exists(dir / "checkpoint_lambda0_seed1.varw"));
  CHECK(fs::exists(dir / "train_lambda0_seed1.csv"));
  CHECK(fs::exists(dir / "hist_lambda0_seed1.csv"));
}

TEST_CASE("rate zero reproduces the dense evaluation exactly") {
  const auto dir = fresh_dir("ratezero");
  ExperimentConfig cfg = small_config(dir);
  cfg.lambdas = {1e-4};
  cfg.seeds = {3};
  cfg.prune_rates = {0.0, 0.5};
  const auto outputs = run_experiment(cfg);
  REQUIRE(outputs.rows.size() == 2);
  CHECK(outputs.rows[0].prune_rate == 0.0);
  CHECK(outputs.rows[0].metric_value == outputs.rows[0].dense_metric);
}

TEST_CASE("identical configs produce byte-identical outputs") {
  const auto dir_a = fresh_dir("determinism_a");
  const auto dir_b = fresh_dir("determinism_b");
  ExperimentConfig cfg_a = small_config(dir_a);
  cfg_a.lambdas = {1e-4};
  cfg_a.seeds = {7, 8};
  ExperimentConfig cfg_b = cfg_a;
  cfg_b.output_dir = dir_b.string();
  run_experiment(cfg_a);
  run_experiment(cfg_b);
  for (const auto& entry : fs::directory_iterator(dir_a)) {
    const auto other = dir_b / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(read_bytes(entry.path()) == read_bytes(other));
  }
}

TEST_CASE("prune_sweep emits one row per rate per metric, sorted") {
  RngState rng(5);
  const Dataset data = gen_shapes(8, 8, 6, rng);
  const Net net = {LayerSpec::dense(64, 16), LayerSpec::act(Activation::tanh_fn),
                   LayerSpec::dense(16, 64)};
  RngState init(6);
  const ParamSet params = init_params(net, init);
  const std::vector<double> rates = {0.6, 0.0, 0.3};
  const auto rows = prune_sweep(params, net, rates, PruneSpec{}, data, "sgd", 0.0, 1);
  REQUIRE(rows.size() == 9);  // 3 rates x {f1, tversky, hausdorff}
  CHECK(rows[0].prune_rate == 0.0);
  CHECK(rows.back().prune_rate == 0.6);
  for (std::size_t i = 0; i < 3; ++i) CHECK(rows[i].metric_value == rows[i].dense_metric);
}

TEST_CASE("segmentation pipeline trains end to end") {
  const auto dir = fresh_dir("segmentation");
  ExperimentConfig cfg = parse_config_text(
      "model.layers = dense:64:24, tanh, dense:24:64\n"
      "data.kind = shapes\n"
      "data.grid_w = 8\n"
      "data.grid_h = 8\n"
      "data.n_samples = 24\n"
      "data.eval_n = 8\n"
      "train.eta0 = 0.5\n"
      "train.lambda = 1e-5\n"
      "train.batch_size = 8\n"
      "train.epochs = 10\n"
      "prune.rates = 0, 0.5\n"
      "seeds = 1\n",
      "test");
  cfg.output_dir = dir.string();
  const auto outputs = run_experiment(cfg);
  CHECK(outputs.rows.size() == 6);  // 2 rates x 3 metrics
  bool saw_hausdorff = false;
  for (const auto& row : outputs.rows) {
    if (row.metric_name == "hausdorff") saw_hausdorff = true;
    if (row.metric_name == "f1") {
      CHECK(row.metric_value >= 0.0);
      CHECK(row.metric_value <= 1.0);
    }
  }
  CHECK(saw_hausdorff);
}

TEST_CASE("number formatting round trips") {
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(1e-4) == "1e-04");
  const double v = 0.1234567890123456789;
  CHECK(std::stod(format_number(v)) == v);
}

}  // TEST_SUITE
