#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qreadout/pipeline.h"
#include "qreadout/simkit.h"

namespace qreadout::eval {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

inline constexpr double kDefaultTrainFraction = 0.8;

// Stratified by label: each class contributes round(n_s * train_fraction)
// shots to train. Both index lists are sorted ascending.
Split split(const sim::Dataset& dataset, double train_fraction, std::uint64_t seed);

using Confusion = std::array<std::array<std::size_t, sim::kNumStates>, sim::kNumStates>;

struct EvalReport {
  std::array<double, sim::kNumStates> per_state_fidelity{};
  double average_fidelity = 0.0;
  double std_error = 0.0;
  Confusion confusion{};  // confusion[true][predicted]
  std::size_t n_test = 0;
  std::string model_id;
  std::string dataset_id;

  double overall_accuracy() const;
  std::array<std::size_t, sim::kNumStates> per_state_count() const;
};

EvalReport make_report(std::span<const sim::State> labels, std::span<const sim::State> predicted);

EvalReport evaluate(const clf::SequenceModel& model, const sim::Dataset& dataset, std::span<const std::size_t> test,
                    unsigned threads = 1);

struct DisagreementEntry {
  std::uint64_t shot_id = 0;
  sim::State label = 0;
  sim::State pred_a = 0;
  sim::State pred_b = 0;
  dsp::IqPoint point;
  bool had_transition = false;
};

// Model A is the LSTM-side model and B the GMM-side one in the usual comparison.
struct DisagreementSet {
  std::vector<DisagreementEntry> lstm_only_correct;
  std::vector<DisagreementEntry> gmm_only_correct;
  std::vector<DisagreementEntry> both_wrong;
};

struct DisagreementInput {
  std::span<const std::uint64_t> shot_ids;
  std::span<const sim::State> labels;
  std::span<const sim::State> pred_a;
  std::span<const sim::State> pred_b;
  std::span<const dsp::IqPoint> points;
  std::span<const bool> had_transition;  // may be empty
};

DisagreementSet disagreements(const DisagreementInput& in);

// Fraction of entries with a mid-readout transition; 0 for an empty list.
double transition_fraction(std::span<const DisagreementEntry> entries);

// "0.988 0.972 0.962"
std::string format_fidelity_row(const std::array<double, sim::kNumStates>& fidelity);
// "0.973 ± 0.002"
std::string format_average(double average, double std_error);

// Aligned text tables: per-state fidelities ordered |0>,|1>,|2>, and averages.
std::string per_state_table(std::span<const std::pair<std::string, EvalReport>> rows);
std::string average_table(std::span<const std::pair<std::string, EvalReport>> rows);

nlohmann::json to_json(const EvalReport& report);

// Columns: shot_id,label,pred_A,pred_B,i,q,had_transition,set.
void write_disagreement_csv(std::ostream& out, const DisagreementSet& set, const std::string& config_hash);

}  // namespace qreadout::eval
