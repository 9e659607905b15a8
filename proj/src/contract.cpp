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
#include <set>

#include "secmarket/errors.h"
#include "secmarket/krum.h"

namespace secmarket {

const char* to_string(ContractState state) {
  switch (state) {
    case ContractState::kSetup:
      return "Setup";
    case ContractState::kRegister:
      return "Register";
    case ContractState::kModelAggregate:
      return "ModelAggregate";
    case ContractState::kOutlierSuppression:
      return "OutlierSuppression";
    case ContractState::kPayment:
      return "Payment";
    case ContractState::kFinished:
      return "Finished";
  }
  return "?";
}

const char* to_string(Method method) {
  switch (method) {
    case Method::kWhitelist:
      return "whitelist";
    case Method::kStart:
      return "start";
    case Method::kRegister:
      return "register";
    case Method::kSubmit:
      return "submit";
    case Method::kFinalizeRound:
      return "finalize_round";
    case Method::kExit:
      return "exit";
    case Method::kSuppressOutliers:
      return "suppress_outliers";
    case Method::kPay:
      return "pay";
    case Method::kGasReport:
      return "gas_report";
  }
  return "?";
}

const char* to_string(RoundRecord::Status status) {
  switch (status) {
    case RoundRecord::Status::kRegistering:
      return "Registering";
    case RoundRecord::Status::kCollecting:
      return "Collecting";
    case RoundRecord::Status::kDone:
      return "Done";
    case RoundRecord::Status::kFailed:
      return "Failed";
  }
  return "?";
}

std::optional<std::string> select_count_violation(int m, int p_size,
                                                  double mu) {
  if (m < 1) {
    return "select count m=" + std::to_string(m) + " must be >= 1";
  }
  const int feasible_max = krum_max_feasible_m(p_size, mu);
  if (m > feasible_max) {
    return "select count m=" + std::to_string(m) +
           " leaves no scoring neighbors for |P|=" + std::to_string(p_size) +
           ", mu=" + std::to_string(mu) + " (max " +
           std::to_string(feasible_max) + ")";
  }
  const double selection_bound = (1.0 - 2.0 * mu) * p_size - 2.0;
  if (selection_bound > 1.0 && !(m < selection_bound)) {
    return "select count m=" + std::to_string(m) +
           " must satisfy m < (1-2mu)|P|-2 = " +
           std::to_string(selection_bound);
  }
  return std::nullopt;
}

int default_select_count(int rounds, double mu) {
  const int candidate =
      static_cast<int>(std::floor((1.0 - 2.0 * mu) * rounds)) - 3;
  return candidate > 1 ? candidate : 1;
}

std::string format_trace_line(const TraceEvent& event) {
  std::string line = "method=";
  line += to_string(event.method);
  line += " caller=" + event.caller;
  line += " before=";
  line += to_string(event.before);
  line += " after=";
  line += to_string(event.after);
  line += " gas=" + std::to_string(event.gas_delta);
  line += " note=" + (event.note.empty() ? std::string("ok") : event.note);
  return line;
}

bool ContractSession::is_legal(Method method, ContractState state) {
  // Rows: methods, columns: Setup, Register, ModelAggregate,
  // OutlierSuppression, Payment, Finished. Registration is only legal while
  // some roster is open; submissions and finalization stay legal for rounds
  // that aggregate in parallel with later registrations.
  static constexpr bool kEdges[kMethodCount][kContractStateCount] = {
      /* whitelist          */ {true, false, false, false, false, false},
      /* start              */ {true, false, false, false, false, false},
      /* register           */ {false, true, false, false, false, false},
      /* submit             */ {false, true, true, false, false, false},
      /* finalize_round     */ {false, true, true, false, false, false},
      /* exit               */ {false, true, true, false, false, false},
      /* suppress_outliers  */ {false, false, false, true, false, false},
      /* pay                */ {false, false, false, false, true, false},
      /* gas_report         */ {true, true, true, true, true, true},
  };
  return kEdges[static_cast<int>(method)][static_cast<int>(state)];
}

void ContractSession::require_legal(Method method) const {
  if (!is_legal(method, state_)) {
    throw StateError(std::string(to_string(method)) + " not legal in state " +
                     to_string(state_));
  }
}

template <typename Body>
void ContractSession::transact(Method method, std::string caller,
                               Body&& body) {
  const ContractState before = state_;
  const std::uint64_t gas_before = meter_.total();
  try {
    std::string note = body();
    trace_.push_back(TraceEvent{method, std::move(caller), before, state_,
                                meter_.total() - gas_before,
                                std::move(note)});
  } catch (const Error& e) {
    trace_.push_back(TraceEvent{method, std::move(caller), before, state_,
                                meter_.total() - gas_before,
                                std::string("error:") + e.name()});
    throw;
  }
}

ContractSession::ContractSession(SessionConfig config)
    : config_(std::move(config)) {
  std::string violations;
  auto flag = [&violations](const std::string& msg) {
    if (!violations.empty()) violations += "; ";
    violations += msg;
  };
  if (config_.initial_public_model.dim() == 0) {
    flag("initial model must be non-empty");
  }
  if (config_.group_size < 2) flag("N must be >= 2");
  if (static_cast<std::size_t>(config_.group_size) > kMaxUnambiguousTerms) {
    flag("N must be <= " + std::to_string(kMaxUnambiguousTerms) +
         " to keep decoded sums unambiguous");
  }
  if (config_.rounds < 1) flag("R must be >= 1");
  if (config_.batch_size < 1) flag("B must be >= 1");
  if (config_.min_data_points < config_.batch_size) flag("M0 must be >= B");
  if (config_.min_epochs < 1) flag("E must be >= 1");
  if (config_.reward_deposit == 0) flag("reward deposit must be positive");
  if (!(config_.corrupted_fraction >= 0.0 &&
        config_.corrupted_fraction <= 0.5)) {
    flag("mu must lie in [0, 0.5]");
  } else if (auto violation =
                 select_count_violation(config_.select_count, config_.rounds,
                                        config_.corrupted_fraction)) {
    flag(*violation + " (checked against |P| <= R)");
  }
  if (!violations.empty()) {
    throw ConfigError("deploy: " + violations);
  }
  whitelist_ = config_.whitelist;
  std::sort(whitelist_.begin(), whitelist_.end());
  whitelist_.erase(std::unique(whitelist_.begin(), whitelist_.end()),
                   whitelist_.end());
  ledger_.deposit_remaining = config_.reward_deposit;
}

void ContractSession::whitelist(std::span<const Address> addresses) {
  transact(Method::kWhitelist, "mo", [&]() -> std::string {
    require_legal(Method::kWhitelist);
    std::size_t added = 0;
    for (Address a : addresses) {
      auto it = std::lower_bound(whitelist_.begin(), whitelist_.end(), a);
      if (it == whitelist_.end() || *it != a) {
        whitelist_.insert(it, a);
        ++added;
      }
    }
    return "added=" + std::to_string(added);
  });
}

void ContractSession::start() {
  transact(Method::kStart, "mo", [&]() -> std::string {
    require_legal(Method::kStart);
    if (whitelist_.empty()) {
      throw ConfigError("start: whitelist is empty");
    }
    started_ = true;
    state_ = ContractState::kRegister;
    RoundRecord first;
    first.round = 1;
    rounds_.push_back(std::move(first));
    return "rounds=" + std::to_string(config_.rounds);
  });
}

const RingVector& ContractSession::published_model() const {
  if (!started_) {
    throw StateError("published_model: model is published by start()");
  }
  return config_.initial_public_model;
}

const RoundRecord& ContractSession::round(int round) const {
  if (round < 1 || static_cast<std::size_t>(round) > rounds_.size()) {
    throw RangeError("round " + std::to_string(round) + " not opened");
  }
  return rounds_[static_cast<std::size_t>(round - 1)];
}

RoundRecord& ContractSession::open_round() { return rounds_.back(); }

void ContractSession::register_do(Address caller, int round) {
  transact(Method::kRegister, std::to_string(caller), [&]() -> std::string {
    require_legal(Method::kRegister);
    if (round < 1 || round > config_.rounds) {
      throw RangeError("register: round " + std::to_string(round) +
                       " outside [1, " + std::to_string(config_.rounds) + "]");
    }
    if (!std::binary_search(whitelist_.begin(), whitelist_.end(), caller)) {
      throw AuthError("register: address " + std::to_string(caller) +
                      " not whitelisted");
    }
    // Contributors whose results are pending or already incorporated are
    // ineligible; members of failed rounds may register again.
    for (const auto& rec : rounds_) {
      if (rec.status == RoundRecord::Status::kFailed) continue;
      if (std::find(rec.roster.begin(), rec.roster.end(), caller) !=
          rec.roster.end()) {
        throw EligibilityError("register: address " + std::to_string(caller) +
                               " already contributes to round " +
                               std::to_string(rec.round));
      }
    }
    RoundRecord& open = open_round();
    if (round != open.round || open.status != RoundRecord::Status::kRegistering) {
      if (round <= open.round) {
        throw FullError("register: roster of round " + std::to_string(round) +
                        " is full");
      }
      throw NotReadyError("register: round " + std::to_string(round) +
                          " not open yet");
    }
    open.roster.push_back(caller);
    meter_.charge(GasPhase::kRegister, 1);
    ledger_.gas_owed[caller] += 1;

    std::string note = "round=" + std::to_string(round);
    if (open.roster.size() == static_cast<std::size_t>(config_.group_size)) {
      // Roster complete: the group exchanges keys (one upload each) and the
      // round starts collecting. Later rounds register in parallel.
      open.status = RoundRecord::Status::kCollecting;
      open.collect_started_at = clock_;
      meter_.charge(GasPhase::kPubKeyInteract,
                    static_cast<std::uint64_t>(config_.group_size));
      for (Address member : open.roster) ledger_.gas_owed[member] += 1;
      if (open.round < config_.rounds) {
        RoundRecord next;
        next.round = open.round + 1;
        rounds_.push_back(std::move(next));
      } else {
        state_ = ContractState::kModelAggregate;
      }
      note += ";group=complete";
    }
    return note;
  });
}

void ContractSession::submit(Address caller, int round, RingVector masked) {
  transact(Method::kSubmit, std::to_string(caller), [&]() -> std::string {
    require_legal(Method::kSubmit);
    if (round < 1 || static_cast<std::size_t>(round) > rounds_.size()) {
      throw RangeError("submit: round " + std::to_string(round) +
                       " not opened");
    }
    RoundRecord& rec = rounds_[static_cast<std::size_t>(round - 1)];
    if (rec.status != RoundRecord::Status::kCollecting) {
      throw StateError("submit: round " + std::to_string(round) + " is " +
                       to_string(rec.status) + ", not collecting");
    }
    if (std::find(rec.roster.begin(), rec.roster.end(), caller) ==
        rec.roster.end()) {
      throw AuthError("submit: address " + std::to_string(caller) +
                      " not in the roster of round " + std::to_string(round));
    }
    if (rec.submissions.count(caller) != 0) {
      throw DuplicateError("submit: address " + std::to_string(caller) +
                           " already submitted for round " +
                           std::to_string(round));
    }
    if (masked.dim() != config_.initial_public_model.dim()) {
      throw DimensionError(
          "submit: got dim " + std::to_string(masked.dim()) + ", expected " +
          std::to_string(config_.initial_public_model.dim()));
    }
    const std::uint64_t dim = masked.dim();
    rec.submissions.emplace(caller, std::move(masked));
    meter_.charge(GasPhase::kModelAggregate, dim);
    ledger_.gas_owed[caller] += dim;
    return "round=" + std::to_string(round);
  });
}

void ContractSession::resolve_round(RoundRecord& record, bool success) {
  if (success) {
    RingVector sum(config_.initial_public_model.dim());
    for (const auto& [addr, vec] : record.submissions) {
      sum = ring_add(sum, vec);
    }
    record.result = std::move(sum);
    record.status = RoundRecord::Status::kDone;
  } else {
    record.status = RoundRecord::Status::kFailed;
  }
}

void ContractSession::maybe_enter_suppression() {
  if (static_cast<int>(rounds_.size()) < config_.rounds) return;
  for (const auto& rec : rounds_) {
    if (rec.status != RoundRecord::Status::kDone &&
        rec.status != RoundRecord::Status::kFailed) {
      return;
    }
  }
  state_ = ContractState::kOutlierSuppression;
}

const RoundRecord& ContractSession::finalize_round(int round,
                                                   std::uint64_t now) {
  transact(Method::kFinalizeRound, "mo", [&]() -> std::string {
    require_legal(Method::kFinalizeRound);
    if (round < 1 || static_cast<std::size_t>(round) > rounds_.size()) {
      throw RangeError("finalize_round: round " + std::to_string(round) +
                       " not opened");
    }
    RoundRecord& rec = rounds_[static_cast<std::size_t>(round - 1)];
    if (rec.status != RoundRecord::Status::kCollecting) {
      throw StateError("finalize_round: round " + std::to_string(round) +
                       " is " + to_string(rec.status) + ", not collecting");
    }
    const std::uint64_t effective_now = now > clock_ ? now : clock_;
    const bool complete =
        rec.submissions.size() == static_cast<std::size_t>(config_.group_size);
    if (!complete &&
        effective_now - rec.collect_started_at < config_.timeout_ticks) {
      throw NotReadyError("finalize_round: round " + std::to_string(round) +
                          " incomplete and timeout not reached");
    }
    clock_ = effective_now;
    resolve_round(rec, complete);
    maybe_enter_suppression();
    return "round=" + std::to_string(round) +
           (complete ? ";result=ok" : ";result=failed");
  });
  return rounds_[static_cast<std::size_t>(round - 1)];
}

void ContractSession::exit_collection() {
  transact(Method::kExit, "mo", [&]() -> std::string {
    require_legal(Method::kExit);
    bool any_success = false;
    for (const auto& rec : rounds_) {
      if (rec.status == RoundRecord::Status::kDone ||
          (rec.status == RoundRecord::Status::kCollecting &&
           rec.submissions.size() ==
               static_cast<std::size_t>(config_.group_size))) {
        any_success = true;
        break;
      }
    }
    if (!any_success) {
      throw NoDataError("exit: no round aggregated successfully");
    }
    for (auto& rec : rounds_) {
      if (rec.status == RoundRecord::Status::kCollecting) {
        resolve_round(rec, rec.submissions.size() ==
                               static_cast<std::size_t>(config_.group_size));
      } else if (rec.status == RoundRecord::Status::kRegistering) {
        rec.status = RoundRecord::Status::kFailed;
      }
    }
    state_ = ContractState::kOutlierSuppression;
    return "";
  });
}

std::vector<int> ContractSession::successful_rounds() const {
  std::vector<int> p;
  for (const auto& rec : rounds_) {
    if (rec.status == RoundRecord::Status::kDone) p.push_back(rec.round);
  }
  return p;
}

const std::vector<int>& ContractSession::suppress_outliers() {
  transact(Method::kSuppressOutliers, "mo", [&]() -> std::string {
    require_legal(Method::kSuppressOutliers);
    const std::vector<int> p = successful_rounds();
    if (auto violation =
            select_count_violation(config_.select_count,
                                   static_cast<int>(p.size()),
                                   config_.corrupted_fraction)) {
      // Constraint infeasible for the realized |P|: abort the session and
      // return the full deposit.
      ledger_.refund += ledger_.deposit_remaining;
      ledger_.deposit_remaining = 0;
      state_ = ContractState::kFinished;
      throw ConstraintError("suppress_outliers: " + *violation);
    }
    KrumInput input;
    input.mu = config_.corrupted_fraction;
    input.m = config_.select_count;
    for (int r : p) {
      input.candidates[r] =
          decode(*rounds_[static_cast<std::size_t>(r - 1)].result,
                 static_cast<std::uint64_t>(config_.group_size));
    }
    accepted_ = m_krum(input);
    // dim squared-difference terms per entry of the |T| x |T| distance
    // matrix evaluated on each scoring pass.
    const std::uint64_t dim = config_.initial_public_model.dim();
    std::uint64_t terms = 0;
    for (int pass = 0; pass < config_.select_count; ++pass) {
      const std::uint64_t t = p.size() - static_cast<std::size_t>(pass);
      terms += t * t * dim;
    }
    meter_.charge(GasPhase::kOutlierSuppression, terms);
    state_ = ContractState::kPayment;
    std::string note = "p=" + std::to_string(p.size()) + ";accepted=";
    for (std::size_t i = 0; i < accepted_.size(); ++i) {
      if (i > 0) note += ",";
      note += std::to_string(accepted_[i]);
    }
    return note;
  });
  return accepted_;
}

const Ledger& ContractSession::pay() {
  transact(Method::kPay, "mo", [&]() -> std::string {
    require_legal(Method::kPay);
    std::set<Address> paid;
    for (int r : accepted_) {
      for (Address member : rounds_[static_cast<std::size_t>(r - 1)].roster) {
        paid.insert(member);
      }
    }
    const std::uint64_t n_paid = paid.size();
    const std::uint64_t share =
        n_paid == 0 ? 0 : ledger_.deposit_remaining / n_paid;
    for (Address member : paid) {
      ledger_.balances[member] += share;
    }
    ledger_.reward_share = share;
    ledger_.rewards_paid = share * n_paid;
    ledger_.refund += ledger_.deposit_remaining - ledger_.rewards_paid;
    ledger_.deposit_remaining = 0;
    for (const auto& [addr, owed] : ledger_.gas_owed) {
      ledger_.balances[addr] += owed;
      ledger_.gas_reimbursed += owed;
    }
    state_ = ContractState::kFinished;
    return "paid=" + std::to_string(n_paid) +
           ";share=" + std::to_string(share);
  });
  return ledger_;
}

}  // namespace secmarket
