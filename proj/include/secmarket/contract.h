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

#ifndef SECMARKET_CONTRACT_H_
#define SECMARKET_CONTRACT_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "secmarket/fixedpoint.h"
#include "secmarket/gas.h"
#include "secmarket/maskgen.h"

namespace secmarket {

// The model-update contract is a six-state machine. Collection alternates
// between Register (some round still accepts registrations) and
// ModelAggregate (all R rosters assembled, submissions pending). Rounds
// aggregate independently once their roster is full, so later rounds may
// register while earlier rounds are still collecting; finalization order
// never changes the outcome.
enum class ContractState : int {
  kSetup = 0,
  kRegister = 1,
  kModelAggregate = 2,
  kOutlierSuppression = 3,
  kPayment = 4,
  kFinished = 5,
};

inline constexpr int kContractStateCount = 6;

enum class Method : int {
  kWhitelist = 0,
  kStart = 1,
  kRegister = 2,
  kSubmit = 3,
  kFinalizeRound = 4,
  kExit = 5,
  kSuppressOutliers = 6,
  kPay = 7,
  kGasReport = 8,
};

inline constexpr int kMethodCount = 9;

const char* to_string(ContractState state);
const char* to_string(Method method);

// Deploy-time parameters. The deposit funds the training reward; the
// whitelist may be extended with whitelist() while in Setup.
struct SessionConfig {
  RingVector initial_public_model;
  std::uint64_t min_data_points = 24;  // M0: data points per contributor
  std::uint64_t min_epochs = 2;        // E: local training epochs
  std::uint64_t batch_size = 8;        // B: local batch size
  int rounds = 8;                      // R: aggregation rounds
  int group_size = 4;                  // N: contributors per round
  double corrupted_fraction = 0.25;    // mu: assumed corrupted round fraction
  int select_count = 1;                // m: rounds kept by outlier suppression
  std::uint64_t reward_deposit = 1000000;
  std::vector<Address> whitelist;
  std::uint64_t timeout_ticks = 100;   // logical time budget per round
};

// Admissibility of the selection count m for p successfully aggregated
// rounds:
//   1 <= m <= p - floor(mu*p) - 2   (every scoring pass has >= 1 neighbor)
//   m <  (1-2mu)*p - 2              when that bound admits any m >= 1; for mu
//                                   near 1/2 it is vacuous and only the
//                                   feasibility cap above applies.
// Returns a description of the violated constraint, or nullopt if m is
// admissible.
std::optional<std::string> select_count_violation(int m, int p_size,
                                                  double mu);

// Default m for a session expected to complete all R rounds:
// max(1, floor((1-2mu)*R) - 3).
int default_select_count(int rounds, double mu);

// One aggregation round. A round registers until its roster holds N
// addresses, then collects masked submissions. It resolves to Done (all N
// submissions arrived) or Failed (timeout, or abandoned at exit()).
struct RoundRecord {
  enum class Status { kRegistering, kCollecting, kDone, kFailed };

  int round = 0;
  Status status = Status::kRegistering;
  std::vector<Address> roster;
  std::map<Address, RingVector> submissions;
  // Ring sum of the N masked submissions; the 1/N average is applied at
  // decode time so on-contract arithmetic stays exact.
  std::optional<RingVector> result;
  std::uint64_t collect_started_at = 0;
};

const char* to_string(RoundRecord::Status status);

// Currency and reimbursement bookkeeping. Conservation invariant:
// reward_deposit == deposit_remaining + rewards_paid + refund at all times.
// Gas reimbursements are owed by the model owner on top of the deposit and
// are credited into balances at pay().
struct Ledger {
  std::map<Address, std::uint64_t> balances;
  std::map<Address, std::uint64_t> gas_owed;
  std::uint64_t deposit_remaining = 0;
  std::uint64_t rewards_paid = 0;
  std::uint64_t refund = 0;
  std::uint64_t reward_share = 0;   // per accepted contributor, set by pay()
  std::uint64_t gas_reimbursed = 0;
};

// One line of the session trace. Every transaction (state-mutating call) is
// recorded, including rejected ones; reads are not transactions.
struct TraceEvent {
  Method method = Method::kGasReport;
  std::string caller;
  ContractState before = ContractState::kSetup;
  ContractState after = ContractState::kSetup;
  std::uint64_t gas_delta = 0;
  std::string note;
};

// "method=register caller=7 before=Register after=Register gas=1 note=round=1"
std::string format_trace_line(const TraceEvent& event);

// A deployed model-update session. All mutations go through one writer; the
// object has value semantics and no hidden global state, so independent
// sessions may run on any threads. Round results depend only on the recorded
// submissions, never on call interleaving.
class ContractSession {
 public:
  // deploy(): validates the config, funds the ledger, zeroes the meters.
  // Throws ConfigError listing every violated constraint.
  explicit ContractSession(SessionConfig config);

  // Extends the whitelist; idempotent per address. Setup only.
  void whitelist(std::span<const Address> addresses);

  // Setup -> Register; publishes the initial model and opens round 1.
  // Throws ConfigError if the whitelist is empty.
  void start();

  // Adds caller to the roster of `round` (which must be the round currently
  // open for registration). The Nth registration moves the round into
  // collection, meters the key uploads for its group, and opens the next
  // round, or moves the session to ModelAggregate after round R.
  // Errors: AuthError (not whitelisted), EligibilityError (already in a
  // pending or successful round), FullError (roster of an earlier round),
  // NotReadyError (future round), RangeError (round outside [1, R]).
  void register_do(Address caller, int round);

  // Stores caller's masked model for a collecting round.
  // Errors: StateError (round not collecting), AuthError (not in roster),
  // DuplicateError, DimensionError.
  void submit(Address caller, int round, RingVector masked);

  // Resolves a collecting round: Done with the ring-sum aggregate if all N
  // submissions are present, Failed if the timeout elapsed, otherwise throws
  // NotReadyError. `now` advances the session's logical clock. Once every
  // round is resolved the session moves to OutlierSuppression.
  const RoundRecord& finalize_round(int round, std::uint64_t now);

  // Ends collection early: completes collecting rounds that have all
  // submissions, fails the rest, and moves to OutlierSuppression. Throws
  // NoDataError (leaving the session unchanged) if no round would succeed.
  void exit_collection();

  // Runs m-Krum over the decoded aggregates of the successful rounds and
  // stores the accepted set P'. If the realized |P| makes the configured m
  // inadmissible the session aborts to Finished with a full deposit refund
  // and throws ConstraintError.
  const std::vector<int>& suppress_outliers();

  // Splits the deposit evenly (integer division) over the m*N contributors
  // of the accepted rounds, refunds the remainder, credits every
  // contributor's metered gas, and finishes the session.
  const Ledger& pay();

  // Snapshot of the per-phase operation counters. Legal in every state.
  const GasMeter& gas_report() const { return meter_; }

  // Harness-driven logical clock. Time never runs backwards.
  void advance_time(std::uint64_t ticks) { clock_ += ticks; }
  std::uint64_t now() const { return clock_; }

  ContractState state() const { return state_; }
  const SessionConfig& session_config() const { return config_; }
  const std::vector<Address>& whitelisted() const { return whitelist_; }
  // The model readable by registered contributors; bit-exact copy of
  // config.initial_public_model once start() has run.
  const RingVector& published_model() const;
  const RoundRecord& round(int round) const;
  int rounds_opened() const { return static_cast<int>(rounds_.size()); }
  // P: indices of successfully aggregated rounds, ascending.
  std::vector<int> successful_rounds() const;
  // P': accepted rounds in selection order; valid after suppress_outliers().
  const std::vector<int>& accepted_rounds() const { return accepted_; }
  const Ledger& ledger() const { return ledger_; }
  const std::vector<TraceEvent>& trace() const { return trace_; }

  static bool is_legal(Method method, ContractState state);

 private:
  template <typename Body>
  void transact(Method method, std::string caller, Body&& body);

  void require_legal(Method method) const;
  RoundRecord& open_round();
  void resolve_round(RoundRecord& record, bool success);
  void maybe_enter_suppression();

  SessionConfig config_;
  ContractState state_ = ContractState::kSetup;
  std::vector<Address> whitelist_;
  std::vector<RoundRecord> rounds_;
  std::vector<int> accepted_;
  Ledger ledger_;
  GasMeter meter_;
  std::uint64_t clock_ = 0;
  bool started_ = false;
  std::vector<TraceEvent> trace_;
};

}  // namespace secmarket

#endif  // SECMARKET_CONTRACT_H_
