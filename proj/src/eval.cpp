#include "qreadout/eval.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "qreadout/errors.h"
#include "qreadout/rng.h"

namespace qreadout::eval {

Split split(const sim::Dataset& dataset, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ArgumentError("train_fraction must lie strictly between 0 and 1");
  }
  std::array<std::vector<std::size_t>, sim::kNumStates> by_class;
  for (std::size_t k = 0; k < dataset.shots.size(); ++k) {
    by_class.at(dataset.shots[k].label).push_back(k);
  }
  Split out;
  for (std::size_t s = 0; s < sim::kNumStates; ++s) {
    auto& idx = by_class[s];
    if (idx.empty()) {
      continue;
    }
    const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(idx.size()) * train_fraction));
    if (n_train == 0 || n_train == idx.size()) {
      throw ArgumentError("state " + std::to_string(s) + " has too few shots (" + std::to_string(idx.size()) +
                          ") to stratify");
    }
    Rng rng = make_rng(seed, {0x5B17, s});
    for (std::size_t k = idx.size(); k > 1; --k) {
      std::swap(idx[k - 1], idx[rng() % k]);
    }
    out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.insert(out.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  if (out.train.empty()) {
    throw ArgumentError("dataset is empty");
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

double EvalReport::overall_accuracy() const {
  if (n_test == 0) {
    return 0.0;
  }
  std::size_t correct = 0;
  for (std::size_t s = 0; s < sim::kNumStates; ++s) {
    correct += confusion[s][s];
  }
  return static_cast<double>(correct) / static_cast<double>(n_test);
}

std::array<std::size_t, sim::kNumStates> EvalReport::per_state_count() const {
  std::array<std::size_t, sim::kNumStates> n{};
  for (std::size_t s = 0; s < sim::kNumStates; ++s) {
    for (std::size_t p = 0; p < sim::kNumStates; ++p) {
      n[s] += confusion[s][p];
    }
  }
  return n;
}

EvalReport make_report(std::span<const sim::State> labels, std::span<const sim::State> predicted) {
  if (labels.size() != predicted.size()) {
    throw ArgumentError("labels and predictions differ in length");
  }
  if (labels.empty()) {
    throw ArgumentError("test set is empty");
  }
  EvalReport r;
  r.n_test = labels.size();
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] >= sim::kNumStates || predicted[k] >= sim::kNumStates) {
      throw ArgumentError("state index out of range");
    }
    ++r.confusion[labels[k]][predicted[k]];
  }
  const auto counts = r.per_state_count();
  std::size_t present = 0;
  for (std::size_t s = 0; s < sim::kNumStates; ++s) {
    if (counts[s] > 0) {
      r.per_state_fidelity[s] = static_cast<double>(r.confusion[s][s]) / static_cast<double>(counts[s]);
      r.average_fidelity += r.per_state_fidelity[s];
      ++present;
    }
  }
  r.average_fidelity /= static_cast<double>(present);
  const double p = r.overall_accuracy();
  r.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(r.n_test));
  return r;
}

EvalReport evaluate(const clf::SequenceModel& model, const sim::Dataset& dataset, std::span<const std::size_t> test,
                    unsigned threads) {
  if (test.empty()) {
    throw ArgumentError("test set is empty");
  }
  const auto preds = clf::predict_batch(model, dataset, test, threads);
  std::vector<sim::State> labels(test.size());
  std::vector<sim::State> predicted(test.size());
  for (std::size_t k = 0; k < test.size(); ++k) {
    labels[k] = dataset.shots.at(test[k]).label;
    predicted[k] = preds[k].label;
  }
  return make_report(labels, predicted);
}

DisagreementSet disagreements(const DisagreementInput& in) {
  const std::size_t n = in.labels.size();
  if (in.shot_ids.size() != n || in.pred_a.size() != n || in.pred_b.size() != n || in.points.size() != n ||
      (!in.had_transition.empty() && in.had_transition.size() != n)) {
    throw ArgumentError("disagreement inputs differ in length");
  }
  DisagreementSet out;
  for (std::size_t k = 0; k < n; ++k) {
    const bool a_ok = in.pred_a[k] == in.labels[k];
    const bool b_ok = in.pred_b[k] == in.labels[k];
    if (a_ok && b_ok) {
      continue;
    }
    DisagreementEntry e{in.shot_ids[k], in.labels[k], in.pred_a[k], in.pred_b[k], in.points[k],
                        !in.had_transition.empty() && in.had_transition[k]};
    if (a_ok) {
      out.lstm_only_correct.push_back(e);
    } else if (b_ok) {
      out.gmm_only_correct.push_back(e);
    } else {
      out.both_wrong.push_back(e);
    }
  }
  return out;
}

double transition_fraction(std::span<const DisagreementEntry> entries) {
  if (entries.empty()) {
    return 0.0;
  }
  const auto n = std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.had_transition; });
  return static_cast<double>(n) / static_cast<double>(entries.size());
}

std::string format_fidelity_row(const std::array<double, sim::kNumStates>& fidelity) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(3);
  for (std::size_t s = 0; s < sim::kNumStates; ++s) {
    ss << (s ? " " : "") << fidelity[s];
  }
  return ss.str();
}

std::string format_average(double average, double std_error) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(3) << average << " ± " << std_error;
  return ss.str();
}

namespace {

std::size_t name_width(std::span<const std::pair<std::string, EvalReport>> rows) {
  std::size_t w = 5;
  for (const auto& r : rows) {
    w = std::max(w, r.first.size());
  }
  return w + 2;
}

}  // namespace

std::string per_state_table(std::span<const std::pair<std::string, EvalReport>> rows) {
  const std::size_t w = name_width(rows);
  std::ostringstream ss;
  ss << std::left << std::setw(static_cast<int>(w)) << "model" << "|0>   |1>   |2>\n";
  for (const auto& [name, report] : rows) {
    ss << std::left << std::setw(static_cast<int>(w)) << name << format_fidelity_row(report.per_state_fidelity)
       << "\n";
  }
  return ss.str();
}

std::string average_table(std::span<const std::pair<std::string, EvalReport>> rows) {
  const std::size_t w = name_width(rows);
  std::ostringstream ss;
  ss << std::left << std::setw(static_cast<int>(w)) << "model" << "average fidelity\n";
  for (const auto& [name, report] : rows) {
    ss << std::left << std::setw(static_cast<int>(w)) << name
       << format_average(report.average_fidelity, report.std_error) << "\n";
  }
  return ss.str();
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json confusion = nlohmann::json::array();
  for (const auto& row : report.confusion) {
    confusion.push_back(row);
  }
  return {{"per_state_fidelity", report.per_state_fidelity},
          {"average_fidelity", report.average_fidelity},
          {"stderr", report.std_error},
          {"confusion", confusion},
          {"n_test", report.n_test},
          {"model_id", report.model_id},
          {"dataset_id", report.dataset_id}};
}

void write_disagreement_csv(std::ostream& out, const DisagreementSet& set, const std::string& config_hash) {
  out << "# config_hash=" << config_hash << "\n";
  out << "shot_id,label,pred_A,pred_B,i,q,had_transition,set\n";
  out << std::setprecision(9);
  auto dump = [&](const std::vector<DisagreementEntry>& entries, const char* name) {
    for (const auto& e : entries) {
      out << e.shot_id << "," << int(e.label) << "," << int(e.pred_a) << "," << int(e.pred_b) << "," << e.point.i
          << "," << e.point.q << "," << (e.had_transition ? 1 : 0) << "," << name << "\n";
    }
  };
  dump(set.lstm_only_correct, "a_only_correct");
  dump(set.gmm_only_correct, "b_only_correct");
  dump(set.both_wrong, "both_wrong");
}

}  // namespace qreadout::eval
