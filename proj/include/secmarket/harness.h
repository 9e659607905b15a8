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

#ifndef SECMARKET_HARNESS_H_
#define SECMARKET_HARNESS_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "secmarket/adversary.h"
#include "secmarket/contract.h"
#include "secmarket/dataset.h"
#include "secmarket/model.h"

namespace secmarket {

// Experiment parameters. Config files are flat key=value text with '#'
// comments; keys match the field names below exactly. The field spellings
// follow the market's design-parameter notation.
struct ExperimentConfig {
  // Contract parameters.
  std::uint64_t M0 = 24;       // data points per contributor
  std::uint64_t B = 8;         // local batch size
  int R = 8;                   // aggregation rounds per contract
  int N = 4;                   // contributors per round
  double mu = 0.25;            // assumed corrupted round fraction
  int m = 0;                   // accepted rounds; 0 = default_select_count
  std::uint64_t reward_deposit = 1000000;
  std::uint64_t timeout_ticks = 100;
  // Pipeline parameters.
  int MOPreEp = 20;   // owner pre-training epochs
  int MOEp = 2;       // owner adaptation epochs per iteration
  int DOEp = 2;       // contributor local epochs
  int DONum = 64;     // contributor population
  int PL = 3;         // trailing layers published as the public model
  double Frag = 0.5;  // fraction of contributors sampled per iteration
  int iterations = 10;
  double lr = 0.05;
  std::vector<int> arch = {64, 48, 32, 16, 10};
  // "digits" (bundled 8x8 digit images, features scaled to [0,1]),
  // "synthetic" (Gaussian mixture), or a dataset file path.
  std::string dataset = "digits";
  std::uint64_t mo_share = 0;  // owner's sample count; 0 = M0/2
  std::uint64_t seed = 42;
  // Adversary.
  std::string adversary_kind = "none";  // none | random_update | drop_out
  double attack_rate = 0.0;
  std::uint64_t adversary_seed = 0;  // 0 = derived from seed
  double payload_correlation = 0.8;
};

ExperimentConfig default_config();

// Sets one field by its config-file key. Throws ConfigError on an unknown
// key or an unparsable value.
void apply_param(ExperimentConfig& config, const std::string& key,
                 const std::string& value);

// Parses a key=value config file on top of the defaults.
ExperimentConfig parse_config_file(const std::string& path);

// One row per contract execution. All fields are deterministic; wall-clock
// timings are reported separately (RunResult::timings) because they cannot
// be part of the reproducible output contract.
struct MetricsRow {
  int iteration = 0;
  double accuracy = 0.0;
  std::array<std::uint64_t, kGasPhaseCount> gas{};
  int rounds_failed = 0;
  int p_size = 0;
  int p_prime_size = 0;
  std::uint64_t reward_share = 0;
  std::uint64_t rewards_paid = 0;
  std::uint64_t refund = 0;
  std::string status;  // ok | aborted | baseline
};

// Wall-clock milliseconds per iteration, attributed to the contract phases.
struct IterationTiming {
  int iteration = 0;
  std::array<double, kGasPhaseCount> phase_ms{};
  double total_ms = 0.0;
};

struct RunResult {
  std::vector<MetricsRow> rows;
  std::vector<IterationTiming> timings;
  std::string events_log;
  double pretrain_accuracy = 0.0;
  double final_accuracy = 0.0;
};

// CSV with the fixed header
// iteration,accuracy,gas_register,gas_pubkeyinteract,gas_modelaggregate,
// gas_outliersuppression,rounds_failed,p_size,p_prime_size,reward_share,
// rewards_paid,refund,status
std::string metrics_csv(std::span<const MetricsRow> rows);

std::string timings_csv(std::span<const IterationTiming> timings);

// Disjoint seeded partition of `all`: one stratified M0-sample share per
// contributor, a strictly smaller owner share, and the remainder as the test
// set. Throws DataError if `all` is too small.
struct Partition {
  std::vector<Dataset> owners;
  Dataset mo;
  Dataset test;
};

Partition partition_iid(const Dataset& all, int do_num, std::uint64_t m0,
                        std::uint64_t mo_share, std::uint64_t seed);

// Loads the configured dataset ("digits" resolves to the bundled file).
Dataset load_experiment_dataset(const ExperimentConfig& config);

// Runs the full pipeline: owner pre-training, then `iterations` contract
// executions (sample contributors, deploy, R rounds of register/mask/
// submit/finalize, suppression, payment, public-model update, owner
// adaptation, evaluation). PL=0 skips the market entirely (owner-only
// baseline). Deterministic per config.
RunResult run_session(const ExperimentConfig& config);

// One run_session per value of `param`, with per-value derived seeds.
// Returns a CSV keyed by (param, value, iteration).
struct SweepResult {
  std::string csv;
  std::vector<std::pair<std::string, double>> final_accuracies;
};

SweepResult sweep(const ExperimentConfig& config, const std::string& param,
                  std::span<const std::string> values);

// Drives a contract-only session (no training: zero payloads) to measure
// gas scaling; every round succeeds. Returns the finished session.
ContractSession gas_probe(int rounds, int group, double mu, int m,
                          std::size_t dim);

}  // namespace secmarket

#endif  // SECMARKET_HARNESS_H_
