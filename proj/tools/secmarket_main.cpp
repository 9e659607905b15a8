/*
 * Copyright 2026 The secmarket Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "secmarket/errors.h"
#include "secmarket/harness.h"
#include "secmarket/maskrecovery.h"
#include "secmarket/prng.h"

namespace {

using secmarket::ExperimentConfig;
using secmarket::RunResult;

ExperimentConfig resolve_config(const std::string& path) {
  if (path == "defaults") return secmarket::default_config();
  return secmarket::parse_config_file(path);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw secmarket::DataError("cannot write " + path.string());
  }
  out << text;
}

std::vector<std::string> split_values(const std::string& csv) {
  std::vector<std::string> values;
  std::stringstream ss(csv);
  std::string field;
  while (std::getline(ss, field, ',')) {
    if (!field.empty()) values.push_back(field);
  }
  return values;
}

nlohmann::json summary_json(const ExperimentConfig& config,
                            const RunResult& result) {
  nlohmann::json j;
  j["dataset"] = config.dataset;
  j["seed"] = config.seed;
  j["iterations"] = config.iterations;
  j["PL"] = config.PL;
  j["R"] = config.R;
  j["N"] = config.N;
  j["mu"] = config.mu;
  j["adversary_kind"] = config.adversary_kind;
  j["attack_rate"] = config.attack_rate;
  j["pretrain_accuracy"] = result.pretrain_accuracy;
  j["final_accuracy"] = result.final_accuracy;
  nlohmann::json accs = nlohmann::json::array();
  for (const auto& row : result.rows) accs.push_back(row.accuracy);
  j["iteration_accuracies"] = accs;
  return j;
}

int cmd_run(const std::string& config_path, std::uint64_t seed, bool has_seed,
            const std::string& out_dir) {
  ExperimentConfig config = resolve_config(config_path);
  if (has_seed) config.seed = seed;
  const RunResult result = secmarket::run_session(config);

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path out(out_dir);
  write_file(out / "metrics.csv", secmarket::metrics_csv(result.rows));
  write_file(out / "events.log", result.events_log);
  write_file(out / "timings.csv", secmarket::timings_csv(result.timings));
  write_file(out / "summary.json", summary_json(config, result).dump(2) + "\n");

  std::printf("pretrain accuracy %.4f, final accuracy %.4f after %d "
              "iterations; outputs in %s\n",
              result.pretrain_accuracy, result.final_accuracy,
              static_cast<int>(result.rows.size()), out_dir.c_str());
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& param,
              const std::string& values_csv, std::uint64_t seed, bool has_seed,
              const std::string& out_dir) {
  ExperimentConfig config = resolve_config(config_path);
  if (has_seed) config.seed = seed;
  const auto values = split_values(values_csv);
  const auto result = secmarket::sweep(config, param, values);

  std::filesystem::create_directories(out_dir);
  write_file(std::filesystem::path(out_dir) / "sweep.csv", result.csv);
  for (const auto& [value, accuracy] : result.final_accuracies) {
    std::printf("%s=%s final accuracy %.4f\n", param.c_str(), value.c_str(),
                accuracy);
  }
  std::printf("sweep written to %s/sweep.csv\n", out_dir.c_str());
  return 0;
}

int cmd_verify_recovery(std::uint64_t seed, int trials) {
  using secmarket::LayerGrads;
  double max_rel = 0.0;
  for (int t = 0; t < trials; ++t) {
    secmarket::SplitMix64 rng(secmarket::derive_seed(seed, 0x7265ULL,
                                                     static_cast<std::uint64_t>(t)));
    const std::size_t n_clients = 1 + rng.next_below(8);
    const std::size_t n_mask = 1 + rng.next_below(4);
    std::vector<std::size_t> shapes(1 + rng.next_below(4));
    for (auto& s : shapes) s = 1 + rng.next_below(32);

    const auto bundle = secmarket::gen_bundle(
        n_clients, n_mask, shapes,
        secmarket::derive_seed(seed, static_cast<std::uint64_t>(t)));

    std::vector<LayerGrads> grads(n_clients);
    for (std::size_t k = 0; k < n_clients; ++k) {
      grads[k].resize(shapes.size());
      for (std::size_t l = 0; l < shapes.size(); ++l) {
        grads[k][l].resize(shapes[l]);
        for (auto& v : grads[k][l]) v = rng.next_uniform(-1.0, 1.0);
      }
    }
    std::vector<LayerGrads> encrypted(n_clients);
    for (std::size_t k = 0; k < n_clients; ++k) {
      encrypted[k] = secmarket::encrypt_gradient(grads[k], bundle, k);
    }
    const LayerGrads enc_agg =
        secmarket::weighted_sum(encrypted, bundle.weights);
    const LayerGrads recovered = secmarket::recover(enc_agg, bundle);
    const LayerGrads expected = secmarket::weighted_sum(grads, bundle.weights);

    for (std::size_t l = 0; l < shapes.size(); ++l) {
      for (std::size_t d = 0; d < shapes[l]; ++d) {
        const double denom = std::max(std::abs(expected[l][d]), 1e-12);
        max_rel = std::max(
            max_rel, std::abs(recovered[l][d] - expected[l][d]) / denom);
      }
    }
  }
  const bool pass = max_rel < 1e-9;
  std::printf("recovery identity over %d random bundles: max relative error "
              "%.3e -> %s\n",
              trials, max_rel, pass ? "PASS" : "FAIL");
  return pass ? 0 : 1;
}

int cmd_gas_report(std::size_t dim, double mu) {
  std::printf("gas units by phase (dim=%zu, mu=%.2f, m=1)\n", dim, mu);
  std::printf("%-24s %10s %10s %14s %18s\n", "sweep", "Register",
              "PubKeyInt", "ModelAggregate", "OutlierSuppression");
  auto report = [&](const std::string& label, int rounds, int group) {
    try {
      const auto session = secmarket::gas_probe(rounds, group, mu, 1, dim);
      const auto& meter = session.gas_report();
      std::printf("%-24s %10llu %10llu %14llu %18llu\n", label.c_str(),
                  static_cast<unsigned long long>(
                      meter.count(secmarket::GasPhase::kRegister)),
                  static_cast<unsigned long long>(
                      meter.count(secmarket::GasPhase::kPubKeyInteract)),
                  static_cast<unsigned long long>(
                      meter.count(secmarket::GasPhase::kModelAggregate)),
                  static_cast<unsigned long long>(
                      meter.count(secmarket::GasPhase::kOutlierSuppression)));
    } catch (const secmarket::Error& e) {
      std::printf("%-24s %s\n", label.c_str(), e.what());
    }
  };
  for (int rounds : {2, 4, 6, 8}) {
    report("R=" + std::to_string(rounds) + " N=4", rounds, 4);
  }
  for (int group : {2, 4, 6, 8}) {
    report("R=6 N=" + std::to_string(group), 6, group);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"secmarket: deterministic secure federated data market "
               "simulator"};
  app.require_subcommand(1);

  std::string config_path = "defaults";
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  std::string param, values_csv;
  int trials = 100;
  std::size_t dim = 64;
  double mu = 0.25;

  auto* run = app.add_subcommand("run", "run one experiment configuration");
  run->add_option("--config", config_path,
                  "config file path, or 'defaults' for the bundled preset");
  auto* run_seed = run->add_option("--seed", seed, "override the config seed");
  run->add_option("--out", out_dir, "output directory");

  auto* sw = app.add_subcommand("sweep", "run one experiment per value of a "
                                         "config parameter");
  sw->add_option("--config", config_path,
                 "config file path, or 'defaults' for the bundled preset");
  sw->add_option("--param", param, "config key to sweep")->required();
  sw->add_option("--values", values_csv, "comma-separated values")->required();
  auto* sw_seed = sw->add_option("--seed", seed, "override the config seed");
  sw->add_option("--out", out_dir, "output directory");

  auto* vr = app.add_subcommand("verify-recovery",
                                "check the encrypted-gradient recovery "
                                "identity on random bundles");
  vr->add_option("--seed", seed, "base seed");
  vr->add_option("--trials", trials, "number of random bundles");

  auto* gr = app.add_subcommand("gas-report",
                                "metered gas of contract-only sessions over "
                                "R and N sweeps");
  gr->add_option("--dim", dim, "public model dimension");
  gr->add_option("--mu", mu, "assumed corrupted fraction");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(config_path, seed, run_seed->count() > 0, out_dir);
    }
    if (sw->parsed()) {
      return cmd_sweep(config_path, param, values_csv, seed,
                       sw_seed->count() > 0, out_dir);
    }
    if (vr->parsed()) {
      return cmd_verify_recovery(seed, trials);
    }
    if (gr->parsed()) {
      return cmd_gas_report(dim, mu);
    }
  } catch (const secmarket::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
