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

#include "secmarket/contract.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "secmarket/errors.h"
#include "secmarket/harness.h"
#include "secmarket/prng.h"

using namespace secmarket;

namespace {

SessionConfig small_config(int rounds = 3, int group = 2, std::size_t dim = 4,
                           double mu = 0.0, int m = 0) {
  SessionConfig c;
  c.initial_public_model = RingVector(dim);
  c.min_data_points = 4;
  c.min_epochs = 1;
  c.batch_size = 2;
  c.rounds = rounds;
  c.group_size = group;
  c.corrupted_fraction = mu;
  c.select_count = m != 0 ? m : default_select_count(rounds, mu);
  c.reward_deposit = 100;
  c.timeout_ticks = 10;
  return c;
}

std::vector<Address> addresses(int n, Address from = 1) {
  std::vector<Address> out;
  for (int i = 0; i < n; ++i) out.push_back(from + static_cast<Address>(i));
  return out;
}

ContractSession started(SessionConfig cfg, int whitelist_size) {
  ContractSession session(std::move(cfg));
  const auto addrs = addresses(whitelist_size);
  session.whitelist(addrs);
  session.start();
  return session;
}

// Registers addresses [first, first+group) for `round` and submits the given
// payloads (unmasked).
void run_round(ContractSession& session, int round, Address first,
               const std::vector<RingVector>& payloads) {
  const int group = session.session_config().group_size;
  for (int k = 0; k < group; ++k) {
    session.register_do(first + static_cast<Address>(k), round);
  }
  for (int k = 0; k < group; ++k) {
    session.submit(first + static_cast<Address>(k), round,
                   payloads[static_cast<std::size_t>(k)]);
  }
}

}  // namespace

TEST_CASE("deploy with the reference defaults lands in Setup") {
  SessionConfig c;
  c.initial_public_model = RingVector(8);
  // N=4, R=8, mu=0.25: the selection bound (1-2mu)R-2 = 2 admits only m=1.
  c.rounds = 8;
  c.group_size = 4;
  c.corrupted_fraction = 0.25;
  c.select_count = 1;
  ContractSession session{c};
  CHECK(session.state() == ContractState::kSetup);
  CHECK(session.ledger().deposit_remaining == c.reward_deposit);
  for (auto count : session.gas_report().counts()) CHECK(count == 0);

  c.select_count = 2;
  CHECK_THROWS_AS(ContractSession{c}, ConfigError);
}

TEST_CASE("deploy rejects invalid configs with the violated constraint") {
  SessionConfig c = small_config();
  c.reward_deposit = 0;
  CHECK_THROWS_WITH_AS(ContractSession{c},
                       doctest::Contains("reward deposit"), ConfigError);
  c = small_config();
  c.group_size = 1;
  CHECK_THROWS_WITH_AS(ContractSession{c}, doctest::Contains("N must be"),
                       ConfigError);
  c = small_config();
  c.min_data_points = 1;  // below B
  CHECK_THROWS_WITH_AS(ContractSession{c}, doctest::Contains("M0"),
                       ConfigError);
  c = small_config();
  c.corrupted_fraction = 0.6;
  CHECK_THROWS_WITH_AS(ContractSession{c}, doctest::Contains("mu"),
                       ConfigError);
  c = small_config();
  c.initial_public_model = RingVector(0);
  CHECK_THROWS_AS(ContractSession{c}, ConfigError);
}

TEST_CASE("whitelist extends idempotently and only in Setup") {
  ContractSession session(small_config());
  session.whitelist(addresses(64));
  CHECK(session.whitelisted().size() == 64);
  session.whitelist(addresses(64));  // same set again
  CHECK(session.whitelisted().size() == 64);
  session.start();
  CHECK_THROWS_AS(session.whitelist(addresses(1)), StateError);
}

TEST_CASE("start publishes the model bit-exactly and rejects a double start") {
  SessionConfig c = small_config();
  SplitMix64 rng(3);
  for (std::size_t i = 0; i < c.initial_public_model.dim(); ++i) {
    c.initial_public_model[i] = RingElement{rng.next()};
  }
  const RingVector expected = c.initial_public_model;
  ContractSession session{c};
  CHECK_THROWS_AS(session.published_model(), StateError);
  session.whitelist(addresses(4));
  session.start();
  CHECK(session.state() == ContractState::kRegister);
  CHECK(session.published_model() == expected);
  CHECK_THROWS_AS(session.start(), StateError);

  ContractSession empty(small_config());
  CHECK_THROWS_AS(empty.start(), ConfigError);
}

TEST_CASE("registration fills rosters and charges the meters") {
  auto session = started(small_config(/*rounds=*/3, /*group=*/4), 12);
  session.register_do(1, 1);
  session.register_do(2, 1);
  session.register_do(3, 1);
  CHECK(session.round(1).status == RoundRecord::Status::kRegistering);
  session.register_do(4, 1);
  // 4th registration completes the group: the round collects, keys are
  // metered, and round 2 opens in parallel.
  CHECK(session.round(1).status == RoundRecord::Status::kCollecting);
  CHECK(session.rounds_opened() == 2);
  CHECK(session.state() == ContractState::kRegister);
  CHECK(session.gas_report().count(GasPhase::kRegister) == 4);
  CHECK(session.gas_report().count(GasPhase::kPubKeyInteract) == 4);

  // Completing the final roster moves the session to ModelAggregate.
  for (Address a : {5, 6, 7, 8}) session.register_do(a, 2);
  for (Address a : {9, 10, 11, 12}) session.register_do(a, 3);
  CHECK(session.state() == ContractState::kModelAggregate);
  CHECK_THROWS_AS(session.register_do(1, 3), StateError);
}

TEST_CASE("registration rejections") {
  auto session = started(small_config(/*rounds=*/3, /*group=*/2), 6);
  CHECK_THROWS_AS(session.register_do(99, 1), AuthError);
  session.register_do(1, 1);
  CHECK_THROWS_AS(session.register_do(1, 1), EligibilityError);
  CHECK_THROWS_AS(session.register_do(2, 2), NotReadyError);
  CHECK_THROWS_AS(session.register_do(2, 9), RangeError);
  session.register_do(2, 1);
  CHECK_THROWS_AS(session.register_do(3, 1), FullError);
}

TEST_CASE("eligibility bars members of successful rounds, not failed ones") {
  auto session = started(small_config(/*rounds=*/3, /*group=*/2, 2), 6);
  // Round 1 succeeds.
  run_round(session, 1, 1, {RingVector(2), RingVector(2)});
  session.finalize_round(1, 0);
  CHECK(session.round(1).status == RoundRecord::Status::kDone);
  CHECK_THROWS_AS(session.register_do(1, 2), EligibilityError);

  // Round 2 fails on timeout; its members become eligible again.
  session.register_do(3, 2);
  session.register_do(4, 2);
  session.submit(3, 2, RingVector(2));
  CHECK_THROWS_AS(session.finalize_round(2, 1), NotReadyError);
  session.finalize_round(2, 100);
  CHECK(session.round(2).status == RoundRecord::Status::kFailed);
  session.register_do(3, 3);  // accepted again
  CHECK(session.round(3).roster == std::vector<Address>{3});
}

TEST_CASE("submission rejections") {
  auto session = started(small_config(/*rounds=*/3, /*group=*/2, 4), 4);
  CHECK_THROWS_AS(session.submit(1, 1, RingVector(4)), StateError);
  session.register_do(1, 1);
  session.register_do(2, 1);
  session.submit(1, 1, RingVector(4));
  CHECK_THROWS_AS(session.submit(1, 1, RingVector(4)), DuplicateError);
  CHECK_THROWS_AS(session.submit(3, 1, RingVector(4)), AuthError);
  CHECK_THROWS_AS(session.submit(2, 1, RingVector(3)), DimensionError);
  // Round 2 is open for registration but not collecting yet.
  CHECK_THROWS_AS(session.submit(2, 2, RingVector(4)), StateError);
  // Round 3 has not been opened at all.
  CHECK_THROWS_AS(session.submit(2, 3, RingVector(4)), RangeError);
}

TEST_CASE("finalize aggregates to the arithmetic mean") {
  auto session = started(small_config(/*rounds=*/3, /*group=*/2, 1), 6);
  std::vector<RingVector> payloads;
  payloads.push_back(encode(std::vector<double>{2.0}));
  payloads.push_back(encode(std::vector<double>{4.0}));
  run_round(session, 1, 1, payloads);
  const RoundRecord& rec = session.finalize_round(1, 0);
  REQUIRE(rec.result.has_value());
  CHECK(decode((*rec.result)[0], 2) == doctest::Approx(3.0));
  CHECK(session.state() == ContractState::kRegister);
}

TEST_CASE("masked submissions aggregate to the unmasked mean") {
  const std::size_t dim = 16;
  const int group = 4;
  auto session = started(small_config(3, group, dim), group);

  std::vector<DoIdentity> identities;
  for (int k = 0; k < group; ++k) {
    identities.push_back(
        DoIdentity{static_cast<Address>(k + 1), derive_seed(500, k)});
  }
  const auto seeds = key_exchange(identities);

  SplitMix64 rng(42);
  std::vector<double> expected_mean(dim, 0.0);
  for (int k = 0; k < group; ++k) {
    session.register_do(identities[static_cast<std::size_t>(k)].address, 1);
  }
  for (int k = 0; k < group; ++k) {
    std::vector<double> w(dim);
    for (auto& v : w) v = rng.next_uniform(-2.0, 2.0);
    for (std::size_t i = 0; i < dim; ++i) {
      // Independent unmasked side, on the quantized grid.
      expected_mean[i] += decode(encode(w[i]), 1) / group;
    }
    const RingVector mask = expand_mask(
        identities[static_cast<std::size_t>(k)].address, identities, seeds,
        dim);
    session.submit(identities[static_cast<std::size_t>(k)].address, 1,
                   mask_model(encode(w), mask));
  }
  const RoundRecord& rec = session.finalize_round(1, 0);
  const auto decoded = decode(*rec.result, group);
  for (std::size_t i = 0; i < dim; ++i) {
    CHECK(decoded[i] == doctest::Approx(expected_mean[i]).epsilon(1e-12));
  }
}

TEST_CASE("exit closes collection early") {
  auto session = started(small_config(/*rounds=*/8, /*group=*/2, 2, 0.25), 16);
  for (int r = 1; r <= 3; ++r) {
    run_round(session, r, static_cast<Address>(2 * r - 1),
              {RingVector(2), RingVector(2)});
    session.finalize_round(r, 0);
  }
  session.exit_collection();
  CHECK(session.state() == ContractState::kOutlierSuppression);
  CHECK(session.successful_rounds() == std::vector<int>{1, 2, 3});
  CHECK_THROWS_AS(session.exit_collection(), StateError);
}

TEST_CASE("exit completes pending full rounds and fails partial ones") {
  auto session = started(small_config(/*rounds=*/4, /*group=*/2, 2), 8);
  // Round 1: complete but not finalized. Round 2: roster full, missing one
  // submission. Round 3: roster partially filled.
  run_round(session, 1, 1, {RingVector(2), RingVector(2)});
  session.register_do(3, 2);
  session.register_do(4, 2);
  session.submit(3, 2, RingVector(2));
  session.register_do(5, 3);
  session.exit_collection();
  CHECK(session.round(1).status == RoundRecord::Status::kDone);
  CHECK(session.round(2).status == RoundRecord::Status::kFailed);
  CHECK(session.round(3).status == RoundRecord::Status::kFailed);
  CHECK(session.successful_rounds() == std::vector<int>{1});
}

TEST_CASE("exit with nothing aggregated is rejected unchanged") {
  auto session = started(small_config(/*rounds=*/3, /*group=*/2, 2), 4);
  session.register_do(1, 1);
  CHECK_THROWS_AS(session.exit_collection(), NoDataError);
  CHECK(session.state() == ContractState::kRegister);
  CHECK(session.round(1).status == RoundRecord::Status::kRegistering);
}

TEST_CASE("suppression excludes a planted far-off round") {
  // 8 rounds of N=2; round 6 carries a far outlier payload.
  auto session = started(small_config(/*rounds=*/8, /*group=*/2, 4, 0.25), 16);
  SplitMix64 rng(9);
  for (int r = 1; r <= 8; ++r) {
    std::vector<RingVector> payloads;
    for (int k = 0; k < 2; ++k) {
      std::vector<double> w(4);
      for (auto& v : w) {
        v = rng.next_uniform(-0.5, 0.5) + (r == 6 ? 900.0 : 0.0);
      }
      payloads.push_back(encode(w));
    }
    run_round(session, r, static_cast<Address>(2 * r - 1), payloads);
    session.finalize_round(r, 0);
  }
  const auto& accepted = session.suppress_outliers();
  REQUIRE(accepted.size() == 1);
  CHECK(accepted[0] != 6);
  CHECK(session.state() == ContractState::kPayment);
}

TEST_CASE("suppression aborts with a full refund when m is inadmissible") {
  // Only 2 successful rounds: no m can score (neighbor count 2-0-2 = 0).
  auto session = started(small_config(/*rounds=*/8, /*group=*/2, 2, 0.0), 16);
  for (int r = 1; r <= 2; ++r) {
    run_round(session, r, static_cast<Address>(2 * r - 1),
              {RingVector(2), RingVector(2)});
    session.finalize_round(r, 0);
  }
  session.exit_collection();
  CHECK_THROWS_AS(session.suppress_outliers(), ConstraintError);
  CHECK(session.state() == ContractState::kFinished);
  CHECK(session.ledger().refund == session.session_config().reward_deposit);
  CHECK(session.ledger().deposit_remaining == 0);
  CHECK(session.ledger().rewards_paid == 0);
}

TEST_CASE("suppression select-count policy on realized |P|") {
  // mu=0, |P|=8: the selection bound is 6, so m=5 is legal.
  CHECK_FALSE(select_count_violation(5, 8, 0.0).has_value());
  CHECK(select_count_violation(6, 8, 0.0).has_value());
  // mu=0.25, |P|=8: bound 2 admits only m=1.
  CHECK_FALSE(select_count_violation(1, 8, 0.25).has_value());
  CHECK(select_count_violation(2, 8, 0.25).has_value());
  // mu=0.5: the bound is vacuous; the feasibility cap 8-4-2=2 governs.
  CHECK_FALSE(select_count_violation(2, 8, 0.5).has_value());
  CHECK(select_count_violation(3, 8, 0.5).has_value());
  CHECK(default_select_count(8, 0.25) == 1);
  CHECK(default_select_count(8, 0.0) == 5);
  CHECK(default_select_count(8, 0.5) == 1);
}

TEST_CASE("payment splits evenly with the remainder refunded") {
  auto run_payment = [](std::uint64_t deposit) {
    SessionConfig c = small_config(/*rounds=*/4, /*group=*/4, 2, 0.0, 1);
    c.reward_deposit = deposit;
    ContractSession session{c};
    session.whitelist(addresses(16));
    session.start();
    for (int r = 1; r <= 4; ++r) {
      run_round(session, r, static_cast<Address>(4 * (r - 1) + 1),
                {RingVector(2), RingVector(2), RingVector(2), RingVector(2)});
      session.finalize_round(r, 0);
    }
    session.suppress_outliers();
    return session;
  };

  auto session = run_payment(100);
  const Ledger& ledger = session.pay();
  // m=1, N=4: each accepted contributor gets floor(100/4) = 25.
  CHECK(ledger.reward_share == 25);
  CHECK(ledger.rewards_paid == 100);
  CHECK(ledger.refund == 0);
  CHECK_THROWS_AS(session.pay(), StateError);
  CHECK(session.state() == ContractState::kFinished);

  auto session2 = run_payment(10);
  const Ledger& ledger2 = session2.pay();
  CHECK(ledger2.reward_share == 2);
  CHECK(ledger2.rewards_paid == 8);
  CHECK(ledger2.refund == 2);
}

TEST_CASE("gas reimbursement credits every metered contributor") {
  auto session = started(small_config(/*rounds=*/3, /*group=*/2, 4, 0.0, 1), 8);
  for (int r = 1; r <= 3; ++r) {
    run_round(session, r, static_cast<Address>(2 * r - 1),
              {RingVector(4), RingVector(4)});
    session.finalize_round(r, 0);
  }
  session.suppress_outliers();
  const Ledger& ledger = session.pay();
  // Each contributor: 1 register + 1 key upload + dim submit units.
  for (Address a : addresses(6)) {
    CHECK(ledger.gas_owed.at(a) == 1 + 1 + 4);
  }
  CHECK(ledger.gas_reimbursed == 6 * 6);
  // Accepted contributors hold share + reimbursement, the rest only
  // reimbursement.
  std::uint64_t balance_total = 0;
  for (const auto& [addr, bal] : ledger.balances) balance_total += bal;
  CHECK(balance_total == ledger.rewards_paid + ledger.gas_reimbursed);
}

TEST_CASE("ledger conservation over randomized sessions") {
  SplitMix64 rng(606);
  for (int trial = 0; trial < 40; ++trial) {
    const int group = 2 + static_cast<int>(rng.next_below(3));
    const int rounds = 3 + static_cast<int>(rng.next_below(4));
    SessionConfig c = small_config(rounds, group, 2, 0.0, 1);
    c.reward_deposit = 1 + rng.next_below(1000000);
    ContractSession session{c};
    session.whitelist(addresses(rounds * group));
    session.start();
    Address next = 1;
    int succeeded = 0;
    for (int r = 1; r <= rounds; ++r) {
      for (int k = 0; k < group; ++k) session.register_do(next++, r);
      const bool fail_round = rng.next_below(4) == 0;
      for (int k = 0; k < group; ++k) {
        const Address a = next - static_cast<Address>(group - k);
        if (fail_round && k == 0) continue;
        session.submit(a, r, RingVector(2));
      }
      session.finalize_round(
          r, fail_round ? session.now() + c.timeout_ticks : session.now());
      if (!fail_round) ++succeeded;
    }
    std::uint64_t payouts = 0;
    try {
      session.suppress_outliers();
      const Ledger& ledger = session.pay();
      payouts = ledger.rewards_paid;
      CHECK(ledger.reward_share ==
            c.reward_deposit / static_cast<std::uint64_t>(
                                   session.accepted_rounds().size() *
                                   static_cast<std::size_t>(group)));
    } catch (const ConstraintError&) {
      CHECK(succeeded < 3);  // only tiny |P| aborts at mu=0, m=1
    }
    const Ledger& ledger = session.ledger();
    CHECK(c.reward_deposit ==
          ledger.deposit_remaining + payouts + ledger.refund);
  }
}

TEST_CASE("no address appears in two successful rounds") {
  auto session = started(small_config(/*rounds=*/4, /*group=*/2, 2, 0.0, 1), 8);
  Address next = 1;
  for (int r = 1; r <= 4; ++r) {
    for (int k = 0; k < 2; ++k) session.register_do(next++, r);
    for (int k = 0; k < 2; ++k) {
      session.submit(next - static_cast<Address>(2 - k), r, RingVector(2));
    }
    session.finalize_round(r, 0);
  }
  std::vector<Address> seen;
  for (int r : session.successful_rounds()) {
    for (Address a : session.round(r).roster) {
      CHECK(std::find(seen.begin(), seen.end(), a) == seen.end());
      seen.push_back(a);
    }
  }
}

TEST_CASE("finalization order never changes the outcome") {
  // Build the same register/submit schedule twice and finalize in opposite
  // orders; aggregates, P, P' and the ledger must match exactly.
  auto build = [] {
    auto session =
        started(small_config(/*rounds=*/4, /*group=*/2, 3, 0.0, 1), 8);
    SplitMix64 rng(777);
    Address next = 1;
    for (int r = 1; r <= 4; ++r) {
      for (int k = 0; k < 2; ++k) session.register_do(next++, r);
      for (int k = 0; k < 2; ++k) {
        const Address a = next - static_cast<Address>(2 - k);
        if (r == 3 && k == 1) continue;  // round 3 will time out
        std::vector<double> w(3);
        SplitMix64 payload_rng(derive_seed(1234, r, k));
        for (auto& v : w) v = payload_rng.next_uniform(-1.0, 1.0);
        session.submit(a, r, encode(w));
      }
    }
    return session;
  };

  auto forward = build();
  for (int r : {1, 2, 4}) forward.finalize_round(r, 0);
  forward.finalize_round(3, 100);
  auto backward = build();
  backward.finalize_round(3, 100);
  for (int r : {4, 2, 1}) backward.finalize_round(r, 0);

  CHECK(forward.successful_rounds() == backward.successful_rounds());
  for (int r : forward.successful_rounds()) {
    CHECK(*forward.round(r).result == *backward.round(r).result);
  }
  CHECK(forward.state() == backward.state());
  forward.suppress_outliers();
  backward.suppress_outliers();
  CHECK(forward.accepted_rounds() == backward.accepted_rounds());
  forward.pay();
  backward.pay();
  CHECK(forward.ledger().balances == backward.ledger().balances);
  CHECK(forward.ledger().refund == backward.ledger().refund);
  CHECK(forward.gas_report().counts() == backward.gas_report().counts());
}

TEST_CASE("gas: aggregate count is exactly R*N*dim and suppression is "
          "quadratic in |P|") {
  const std::size_t dim = 32;
  const auto probe4 = gas_probe(/*rounds=*/4, /*group=*/4, 0.25, 1, dim);
  const auto probe8 = gas_probe(/*rounds=*/8, /*group=*/4, 0.25, 1, dim);
  CHECK(probe4.gas_report().count(GasPhase::kModelAggregate) == 4 * 4 * dim);
  CHECK(probe8.gas_report().count(GasPhase::kModelAggregate) == 8 * 4 * dim);
  CHECK(probe4.gas_report().count(GasPhase::kRegister) == 16);
  CHECK(probe8.gas_report().count(GasPhase::kPubKeyInteract) == 32);
  // One scoring pass over the |P| x |P| distance matrix.
  CHECK(probe4.gas_report().count(GasPhase::kOutlierSuppression) ==
        4 * 4 * dim);
  CHECK(probe8.gas_report().count(GasPhase::kOutlierSuppression) ==
        8 * 8 * dim);
}

TEST_CASE("trace is deterministic and records rejections") {
  auto drive = [] {
    auto session = started(small_config(/*rounds=*/3, /*group=*/2, 2), 2);
    session.register_do(1, 1);
    try {
      session.register_do(1, 1);
    } catch (const EligibilityError&) {
    }
    session.register_do(2, 1);
    session.submit(1, 1, RingVector(2));
    session.submit(2, 1, RingVector(2));
    session.finalize_round(1, 0);
    std::string text;
    for (const auto& ev : session.trace()) {
      text += format_trace_line(ev) + "\n";
    }
    return text;
  };
  const std::string a = drive();
  CHECK(a == drive());
  CHECK(a.find("error:EligibilityError") != std::string::npos);
  CHECK(a.find("method=start caller=mo before=Setup after=Register") !=
        std::string::npos);
}
