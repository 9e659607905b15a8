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

#include "secmarket/harness.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include "secmarket/errors.h"
#include "secmarket/krum.h"
#include "secmarket/prng.h"

#ifndef SECMARKET_DATA_DIR
#define SECMARKET_DATA_DIR "data"
#endif

namespace secmarket {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const std::int64_t v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' needs an integer, got '" +
                      value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' needs a number, got '" +
                      value + "'");
  }
}

Address contributor_address(std::size_t index) {
  return static_cast<Address>(index + 1);
}

}  // namespace

ExperimentConfig default_config() { return ExperimentConfig{}; }

void apply_param(ExperimentConfig& config, const std::string& key,
                 const std::string& value) {
  if (key == "M0") {
    config.M0 = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "B") {
    config.B = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "R") {
    config.R = static_cast<int>(parse_int(key, value));
  } else if (key == "N") {
    config.N = static_cast<int>(parse_int(key, value));
  } else if (key == "mu") {
    config.mu = parse_double(key, value);
  } else if (key == "m") {
    config.m = static_cast<int>(parse_int(key, value));
  } else if (key == "reward_deposit") {
    config.reward_deposit = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "timeout_ticks") {
    config.timeout_ticks = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "MOPreEp") {
    config.MOPreEp = static_cast<int>(parse_int(key, value));
  } else if (key == "MOEp") {
    config.MOEp = static_cast<int>(parse_int(key, value));
  } else if (key == "DOEp") {
    config.DOEp = static_cast<int>(parse_int(key, value));
  } else if (key == "DONum") {
    config.DONum = static_cast<int>(parse_int(key, value));
  } else if (key == "PL") {
    config.PL = static_cast<int>(parse_int(key, value));
  } else if (key == "Frag") {
    config.Frag = parse_double(key, value);
  } else if (key == "iterations") {
    config.iterations = static_cast<int>(parse_int(key, value));
  } else if (key == "lr") {
    config.lr = parse_double(key, value);
  } else if (key == "arch") {
    std::vector<int> widths;
    std::stringstream ss(value);
    std::string field;
    while (std::getline(ss, field, ',')) {
      widths.push_back(static_cast<int>(parse_int(key, trim(field))));
    }
    if (widths.size() < 2) {
      throw ConfigError("config: arch needs at least two widths");
    }
    config.arch = std::move(widths);
  } else if (key == "dataset") {
    config.dataset = value;
  } else if (key == "mo_share") {
    config.mo_share = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "seed") {
    config.seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "adversary_kind") {
    if (value != "none" && value != "random_update" && value != "drop_out") {
      throw ConfigError("config: adversary_kind must be none, random_update "
                        "or drop_out");
    }
    config.adversary_kind = value;
  } else if (key == "attack_rate") {
    config.attack_rate = parse_double(key, value);
  } else if (key == "adversary_seed") {
    config.adversary_seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "payload_correlation") {
    config.payload_correlation = parse_double(key, value);
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("config: cannot open " + path);
  }
  ExperimentConfig config = default_config();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: " + path + ":" + std::to_string(line_no) +
                        ": expected key=value");
    }
    apply_param(config, trim(stripped.substr(0, eq)),
                trim(stripped.substr(eq + 1)));
  }
  return config;
}

namespace {

std::string format_row(const MetricsRow& row) {
  std::string line = std::to_string(row.iteration);
  line += "," + format_double(row.accuracy);
  for (auto g : row.gas) line += "," + std::to_string(g);
  line += "," + std::to_string(row.rounds_failed);
  line += "," + std::to_string(row.p_size);
  line += "," + std::to_string(row.p_prime_size);
  line += "," + std::to_string(row.reward_share);
  line += "," + std::to_string(row.rewards_paid);
  line += "," + std::to_string(row.refund);
  line += "," + row.status;
  return line;
}

constexpr const char* kMetricsHeader =
    "iteration,accuracy,gas_register,gas_pubkeyinteract,gas_modelaggregate,"
    "gas_outliersuppression,rounds_failed,p_size,p_prime_size,reward_share,"
    "rewards_paid,refund,status";

}  // namespace

std::string metrics_csv(std::span<const MetricsRow> rows) {
  std::string out = kMetricsHeader;
  out += "\n";
  for (const auto& row : rows) {
    out += format_row(row);
    out += "\n";
  }
  return out;
}

std::string timings_csv(std::span<const IterationTiming> timings) {
  std::string out =
      "iteration,register_ms,pubkeyinteract_ms,modelaggregate_ms,"
      "outliersuppression_ms,total_ms\n";
  for (const auto& t : timings) {
    out += std::to_string(t.iteration);
    for (double ms : t.phase_ms) out += "," + format_double(ms);
    out += "," + format_double(t.total_ms);
    out += "\n";
  }
  return out;
}

Partition partition_iid(const Dataset& all, int do_num, std::uint64_t m0,
                        std::uint64_t mo_share, std::uint64_t seed) {
  if (do_num < 1 || m0 < 1) {
    throw ConfigError("partition_iid: need do_num >= 1 and M0 >= 1");
  }
  if (mo_share == 0) mo_share = std::max<std::uint64_t>(m0 / 2, 1);
  if (mo_share >= m0) {
    throw ConfigError("partition_iid: owner share must be smaller than M0");
  }
  const std::uint64_t needed =
      static_cast<std::uint64_t>(do_num) * m0 + mo_share + 1;
  if (all.samples.size() < needed) {
    throw DataError("partition_iid: dataset of " +
                    std::to_string(all.samples.size()) +
                    " samples cannot cover " + std::to_string(needed));
  }

  int n_classes = 0;
  for (const auto& s : all.samples) n_classes = std::max(n_classes, s.y + 1);
  std::vector<std::vector<std::size_t>> pools(
      static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < all.samples.size(); ++i) {
    pools[static_cast<std::size_t>(all.samples[i].y)].push_back(i);
  }
  for (std::size_t c = 0; c < pools.size(); ++c) {
    const auto order = shuffled_indices(
        pools[c].size(), derive_seed(seed, stream_tag("class"), c));
    std::vector<std::size_t> shuffled(pools[c].size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      shuffled[i] = pools[c][order[i]];
    }
    pools[c] = std::move(shuffled);
  }

  // Global round-robin over the class pools keeps every share stratified.
  std::size_t cursor = 0;
  std::vector<std::size_t> cursors(pools.size(), 0);
  auto deal_one = [&]() -> std::size_t {
    for (std::size_t tries = 0; tries < pools.size(); ++tries) {
      const std::size_t c = cursor % pools.size();
      cursor++;
      if (cursors[c] < pools[c].size()) {
        return pools[c][cursors[c]++];
      }
    }
    throw DataError("partition_iid: pools exhausted");
  };

  Partition part;
  part.owners.resize(static_cast<std::size_t>(do_num));
  for (int d = 0; d < do_num; ++d) {
    auto& ds = part.owners[static_cast<std::size_t>(d)];
    ds.owner_tag = "do" + std::to_string(d + 1);
    for (std::uint64_t i = 0; i < m0; ++i) {
      ds.samples.push_back(all.samples[deal_one()]);
    }
  }
  part.mo.owner_tag = "mo";
  for (std::uint64_t i = 0; i < mo_share; ++i) {
    part.mo.samples.push_back(all.samples[deal_one()]);
  }
  part.test.owner_tag = "test";
  for (std::size_t c = 0; c < pools.size(); ++c) {
    for (std::size_t i = cursors[c]; i < pools[c].size(); ++i) {
      part.test.samples.push_back(all.samples[pools[c][i]]);
    }
  }
  return part;
}

Dataset load_experiment_dataset(const ExperimentConfig& config) {
  if (config.dataset == "digits") {
    // Prefer a checkout-local data directory, fall back to the build-time
    // location.
    std::string path = "data/digits8x8.txt";
    if (!std::ifstream(path)) {
      path = std::string(SECMARKET_DATA_DIR) + "/digits8x8.txt";
    }
    Dataset data = load_dataset(path, "digits");
    scale_features(data, 16.0);
    return data;
  }
  if (config.dataset == "synthetic") {
    const int dim = config.arch.front();
    const int classes = config.arch.back();
    return synthetic_mixture(1797, dim, classes,
                             derive_seed(config.seed, stream_tag("data")));
  }
  return load_dataset(config.dataset, "file");
}

namespace {

struct PipelineSeeds {
  std::uint64_t model, pretrain;
  explicit PipelineSeeds(std::uint64_t seed)
      : model(derive_seed(seed, stream_tag("model"))),
        pretrain(derive_seed(seed, stream_tag("pretrain"))) {}
};

AdversaryProfile make_profile(const ExperimentConfig& config) {
  AdversaryProfile profile;
  if (config.adversary_kind == "random_update") {
    profile.kind = AdversaryKind::kRandomUpdate;
  } else if (config.adversary_kind == "drop_out") {
    profile.kind = AdversaryKind::kDropOut;
  } else {
    profile.kind = AdversaryKind::kNone;
  }
  profile.rate = config.attack_rate;
  profile.seed = config.adversary_seed != 0
                     ? config.adversary_seed
                     : derive_seed(config.seed, stream_tag("byz"));
  profile.payload_correlation = config.payload_correlation;
  return profile;
}

}  // namespace

RunResult run_session(const ExperimentConfig& config) {
  if (!(config.Frag > 0.0 && config.Frag <= 1.0)) {
    throw ConfigError("run_session: Frag must lie in (0, 1]");
  }
  if (config.DONum < config.N) {
    throw ConfigError("run_session: DONum must be >= N");
  }
  if (config.iterations < 1) {
    throw ConfigError("run_session: iterations must be >= 1");
  }
  const Dataset all = load_experiment_dataset(config);
  const Partition part =
      partition_iid(all, config.DONum, config.M0, config.mo_share,
                    derive_seed(config.seed, stream_tag("partition")));

  const auto arch = mlp_arch(config.arch);
  const PipelineSeeds seeds(config.seed);

  // The reference feature extractor is the publicly seeded initialization of
  // the non-public layers; contributors train the published tail against it.
  ModelParams mo_model = init_model(arch, seeds.model);
  const ModelParams reference_private =
      split_model(mo_model, config.PL).first;

  if (config.MOPreEp > 0) {
    mo_model = combine_and_adapt(
        mo_model, ModelParams{}, part.mo,
        TrainSpec{config.MOPreEp, static_cast<int>(config.B), config.lr,
                  seeds.pretrain});
  }

  RunResult result;
  result.pretrain_accuracy = evaluate(mo_model, part.test);

  const AdversaryProfile profile = make_profile(config);
  const std::vector<bool> byz_flags =
      assign_adversaries(static_cast<std::size_t>(config.DONum), profile);

  const std::size_t sample_count = static_cast<std::size_t>(
      std::floor(config.Frag * static_cast<double>(config.DONum)));

  for (int iter = 1; iter <= config.iterations; ++iter) {
    result.events_log += "# iteration=" + std::to_string(iter) + "\n";
    MetricsRow row;
    row.iteration = iter;
    IterationTiming timing;
    timing.iteration = iter;
    const auto iter_start = Clock::now();

    if (config.PL == 0) {
      // Owner-only baseline: no market, just local adaptation.
      if (config.MOEp > 0) {
        mo_model = combine_and_adapt(
            mo_model, ModelParams{}, part.mo,
            TrainSpec{config.MOEp, static_cast<int>(config.B), config.lr,
                      derive_seed(config.seed, stream_tag("adapt"),
                                  static_cast<std::uint64_t>(iter))});
      }
      row.accuracy = evaluate(mo_model, part.test);
      row.status = "baseline";
      timing.total_ms = ms_since(iter_start);
      result.rows.push_back(row);
      result.timings.push_back(timing);
      continue;
    }

    auto [private_part, public_part] = split_model(mo_model, config.PL);
    const std::vector<double> public_flat = public_part.flatten();
    const std::size_t dim = public_flat.size();

    const auto sampled = sample_without_replacement(
        static_cast<std::size_t>(config.DONum), sample_count,
        derive_seed(config.seed, stream_tag("sample"),
                    static_cast<std::uint64_t>(iter)));

    std::optional<ContractSession> session_opt;
    try {
      SessionConfig scfg;
      scfg.initial_public_model = encode(public_flat);
      scfg.min_data_points = config.M0;
      scfg.min_epochs = static_cast<std::uint64_t>(config.DOEp);
      scfg.batch_size = config.B;
      scfg.rounds = config.R;
      scfg.group_size = config.N;
      scfg.corrupted_fraction = config.mu;
      scfg.select_count =
          config.m != 0 ? config.m : default_select_count(config.R, config.mu);
      scfg.reward_deposit = config.reward_deposit;
      scfg.timeout_ticks = config.timeout_ticks;
      session_opt.emplace(std::move(scfg));
      ContractSession& session = *session_opt;

      auto t0 = Clock::now();
      std::vector<Address> addresses;
      addresses.reserve(sampled.size());
      for (std::size_t idx : sampled) {
        addresses.push_back(contributor_address(idx));
      }
      session.whitelist(addresses);
      session.start();
      timing.phase_ms[0] += ms_since(t0);

      const int groups =
          std::min<int>(config.R, static_cast<int>(sampled.size()) / config.N);
      for (int r = 1; r <= groups; ++r) {
        std::vector<std::size_t> group(
            sampled.begin() + static_cast<std::ptrdiff_t>((r - 1) * config.N),
            sampled.begin() + static_cast<std::ptrdiff_t>(r * config.N));

        t0 = Clock::now();
        for (std::size_t idx : group) {
          session.register_do(contributor_address(idx), r);
        }
        timing.phase_ms[0] += ms_since(t0);

        t0 = Clock::now();
        std::vector<DoIdentity> identities;
        identities.reserve(group.size());
        for (std::size_t idx : group) {
          identities.push_back(DoIdentity{
              contributor_address(idx),
              derive_seed(config.seed, stream_tag("key"), idx)});
        }
        const PairwiseSeeds pair_seeds = key_exchange(identities);
        timing.phase_ms[1] += ms_since(t0);

        bool complete = true;
        for (std::size_t idx : group) {
          const bool byz = byz_flags[idx];
          if (byz && profile.kind == AdversaryKind::kDropOut) {
            complete = false;
            continue;
          }
          RingVector payload;
          if (byz && profile.kind == AdversaryKind::kRandomUpdate) {
            payload = byzantine_payload(dim, profile, idx);
          } else {
            const ModelParams updated = local_train(
                public_part, reference_private,
                part.owners[idx],
                TrainSpec{config.DOEp, static_cast<int>(config.B), config.lr,
                          derive_seed(config.seed, stream_tag("train"),
                                      static_cast<std::uint64_t>(iter), idx)},
                config.M0);
            payload = encode(updated.flatten());
          }
          t0 = Clock::now();
          const RingVector mask = expand_mask(contributor_address(idx),
                                              identities, pair_seeds, dim);
          timing.phase_ms[1] += ms_since(t0);
          t0 = Clock::now();
          session.submit(contributor_address(idx), r,
                         mask_model(payload, mask));
          timing.phase_ms[2] += ms_since(t0);
        }

        t0 = Clock::now();
        const std::uint64_t finalize_at =
            complete ? session.now() : session.now() + config.timeout_ticks;
        const RoundRecord& rec = session.finalize_round(r, finalize_at);
        if (rec.status == RoundRecord::Status::kFailed) ++row.rounds_failed;
        timing.phase_ms[2] += ms_since(t0);
      }

      if (groups < config.R) {
        session.exit_collection();
      }

      t0 = Clock::now();
      const std::vector<int> accepted = session.suppress_outliers();
      timing.phase_ms[3] += ms_since(t0);

      const Ledger& ledger = session.pay();

      std::vector<RingVector> selected;
      selected.reserve(accepted.size());
      for (int r : accepted) {
        selected.push_back(*session.round(r).result);
      }
      const ModelParams new_public =
          apply_update(selected, config.N, public_part);
      mo_model = combine_and_adapt(
          private_part, new_public, part.mo,
          TrainSpec{config.MOEp, static_cast<int>(config.B), config.lr,
                    derive_seed(config.seed, stream_tag("adapt"),
                                static_cast<std::uint64_t>(iter))});

      row.p_size = static_cast<int>(session.successful_rounds().size());
      row.p_prime_size = static_cast<int>(accepted.size());
      row.reward_share = ledger.reward_share;
      row.rewards_paid = ledger.rewards_paid;
      row.refund = ledger.refund;
      row.status = "ok";
    } catch (const Error& e) {
      row.status = "aborted";
      result.events_log += std::string("# error=") + e.name() + "\n";
      if (session_opt.has_value()) {
        row.p_size =
            static_cast<int>(session_opt->successful_rounds().size());
        row.refund = session_opt->ledger().refund;
      }
    }

    if (session_opt.has_value()) {
      for (const auto& ev : session_opt->trace()) {
        result.events_log += format_trace_line(ev) + "\n";
      }
      row.gas = session_opt->gas_report().counts();
    }
    row.accuracy = evaluate(mo_model, part.test);
    timing.total_ms = ms_since(iter_start);
    result.rows.push_back(row);
    result.timings.push_back(timing);
  }

  result.final_accuracy =
      result.rows.empty() ? result.pretrain_accuracy
                          : result.rows.back().accuracy;
  return result;
}

SweepResult sweep(const ExperimentConfig& config, const std::string& param,
                  std::span<const std::string> values) {
  if (values.empty()) {
    throw ConfigError("sweep: need at least one value");
  }
  SweepResult result;
  result.csv = "param,value,";
  result.csv += kMetricsHeader;
  result.csv += "\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    ExperimentConfig run_config = config;
    apply_param(run_config, param, values[i]);
    if (param != "seed") {
      run_config.seed = derive_seed(config.seed, stream_tag("sweep"), i);
    }
    const RunResult run = run_session(run_config);
    for (const auto& row : run.rows) {
      result.csv += param + "," + values[i] + "," + format_row(row) + "\n";
    }
    result.final_accuracies.emplace_back(values[i], run.final_accuracy);
  }
  return result;
}

ContractSession gas_probe(int rounds, int group, double mu, int m,
                          std::size_t dim) {
  SessionConfig scfg;
  scfg.initial_public_model = RingVector(dim);
  scfg.min_data_points = 1;
  scfg.min_epochs = 1;
  scfg.batch_size = 1;
  scfg.rounds = rounds;
  scfg.group_size = group;
  scfg.corrupted_fraction = mu;
  scfg.select_count = m;
  scfg.reward_deposit = 1000000;
  scfg.timeout_ticks = 100;
  ContractSession session(std::move(scfg));

  std::vector<Address> addresses;
  for (int i = 0; i < rounds * group; ++i) {
    addresses.push_back(static_cast<Address>(i + 1));
  }
  session.whitelist(addresses);
  session.start();
  std::size_t next = 0;
  for (int r = 1; r <= rounds; ++r) {
    std::vector<Address> roster;
    for (int k = 0; k < group; ++k) roster.push_back(addresses[next++]);
    for (Address a : roster) session.register_do(a, r);
    for (Address a : roster) session.submit(a, r, RingVector(dim));
    session.finalize_round(r, session.now());
  }
  session.suppress_outliers();
  session.pay();
  return session;
}

}  // namespace secmarket
