#include "qreadout/cli.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "qreadout/errors.h"
#include "qreadout/eval.h"
#include "qreadout/io.h"

namespace qreadout::cli {

using nlohmann::json;

void RunConfig::validate() const {
  sim.validate();
  train.validate();
  if (shots_per_state == 0) {
    throw ConfigError("shots_per_state must be positive");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("split.train_fraction must lie strictly between 0 and 1");
  }
  std::set<std::string> names;
  for (const auto& p : pipelines) {
    p.validate();
    if (!names.insert(p.name).second) {
      throw ConfigError("duplicate pipeline name '" + p.name + "'");
    }
  }
}

const clf::PipelineDescriptor& RunConfig::pipeline(const std::string& name) const {
  for (const auto& p : pipelines) {
    if (p.name == name) {
      return p;
    }
  }
  throw ConfigError("pipeline '" + name + "' is not defined in the config");
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) {
    throw ConfigError("config must be a JSON object");
  }
  RunConfig cfg;
  try {
    if (j.contains("sim")) {
      cfg.sim = io::sim_config_from_json(j.at("sim"));
    }
    cfg.shots_per_state = j.value("shots_per_state", cfg.shots_per_state);
    if (j.contains("train")) {
      cfg.train = io::train_config_from_json(j.at("train"));
    }
    if (j.contains("split")) {
      cfg.train_fraction = j.at("split").value("train_fraction", cfg.train_fraction);
      cfg.split_seed = j.at("split").value("seed", cfg.split_seed);
    }
    if (j.contains("pipelines")) {
      for (json p : j.at("pipelines")) {
        if (p.is_string()) {
          p = json{{"preset", p}};
        }
        if (p.contains("preset") && !p.contains("f_if")) {
          p["f_if"] = cfg.sim.f_if;
        }
        cfg.pipelines.push_back(io::pipeline_from_json(p));
      }
    } else {
      for (const auto& name : io::pipeline_preset_names()) {
        cfg.pipelines.push_back(io::pipeline_preset(name, cfg.sim.f_if));
      }
    }
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.threads = j.value("threads", cfg.threads);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json to_json(const RunConfig& cfg) {
  json pipelines = json::array();
  for (const auto& p : cfg.pipelines) {
    pipelines.push_back(io::to_json(p));
  }
  return {{"sim", io::to_json(cfg.sim)},
          {"shots_per_state", cfg.shots_per_state},
          {"train", io::to_json(cfg.train)},
          {"split", {{"train_fraction", cfg.train_fraction}, {"seed", cfg.split_seed}}},
          {"pipelines", pipelines},
          {"output_dir", cfg.output_dir},
          {"threads", cfg.threads}};
}

RunConfig load_run_config(const std::filesystem::path& path) {
  if (path.empty()) {
    return run_config_from_json(json::object());
  }
  json j;
  try {
    j = json::parse(io::read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

namespace {

struct Common {
  std::string config;
  std::optional<unsigned> threads;
};

std::string run_hash(const RunConfig& cfg) { return io::config_hash(to_json(cfg)); }

unsigned thread_count(const Common& c, const RunConfig& cfg) { return std::max(1u, c.threads.value_or(cfg.threads)); }

std::filesystem::path default_path(const RunConfig& cfg, const std::string& out, const std::string& fallback) {
  return out.empty() ? std::filesystem::path(cfg.output_dir) / fallback : std::filesystem::path(out);
}

void ensure_parent(const std::filesystem::path& p) {
  const auto parent = p.parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
    if (ec) {
      throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
    }
  }
}

std::string dataset_id(const sim::Dataset& ds) {
  return io::config_hash(io::to_json(ds.config)) + "/" + std::to_string(ds.shots.size());
}

std::string model_id(const clf::SequenceModel& model, const std::filesystem::path& path) {
  return model.descriptor.name + ":" + io::bytes_hash(io::read_text(path));
}

int cmd_simulate(const Common& c, const std::string& out_arg, std::optional<std::uint64_t> seed,
                 std::optional<std::size_t> shots, std::ostream& out) {
  RunConfig cfg = load_run_config(c.config);
  if (seed) {
    cfg.sim.seed = *seed;
  }
  if (shots) {
    cfg.shots_per_state = *shots;
  }
  cfg.validate();
  const auto path = default_path(cfg, out_arg, "dataset.bin");
  const sim::Dataset ds = sim::generate_dataset(cfg.sim, cfg.shots_per_state, thread_count(c, cfg));
  ensure_parent(path);
  io::write_dataset(path, ds);

  std::array<std::size_t, sim::kNumStates> count{};
  std::array<std::size_t, sim::kNumStates> decayed{};
  for (const auto& s : ds.shots) {
    ++count[s.label];
    decayed[s.label] += s.true_path.has_transition() ? 1 : 0;
  }
  out << "wrote " << ds.shots.size() << " shots to " << path.string() << "\n";
  out << std::fixed << std::setprecision(4);
  for (std::size_t s = 0; s < sim::kNumStates; ++s) {
    out << "state " << s << ": " << count[s] << " shots, " << decayed[s] << " with a transition ("
        << (count[s] ? static_cast<double>(decayed[s]) / static_cast<double>(count[s]) : 0.0) << ")\n";
  }
  out << "config_hash=" << io::config_hash(io::to_json(cfg.sim)) << "\n";
  return kExitOk;
}

int cmd_train(const Common& c, const std::string& dataset_path, const std::string& pipeline, const std::string& out_arg,
              std::optional<std::uint64_t> seed, std::ostream& out) {
  RunConfig cfg = load_run_config(c.config);
  if (seed) {
    cfg.train.seed = *seed;
  }
  const clf::PipelineDescriptor& desc = cfg.pipeline(pipeline);
  const auto path = default_path(cfg, out_arg, pipeline + ".model");
  const sim::Dataset ds = io::read_dataset(dataset_path);
  const eval::Split split = eval::split(ds, cfg.train_fraction, cfg.split_seed);
  const std::string hash = run_hash(cfg);

  std::ostringstream log;
  log << "# config_hash=" << hash << " pipeline=" << desc.name << " train_shots=" << split.train.size() << "\n";
  clf::TrainOptions options;
  options.threads = thread_count(c, cfg);
  options.on_epoch = [&](const nn::EpochRecord& r) {
    std::ostringstream line;
    line << "epoch " << r.epoch << " loss " << std::setprecision(8) << r.loss << " lr " << r.lr << "\n";
    log << line.str();
    out << line.str() << std::flush;
  };
  const clf::SequenceModel model = clf::train_pipeline(ds, split.train, desc, cfg.train, options);
  ensure_parent(path);
  io::write_model(path, model, hash);
  auto log_path = path;
  log_path += ".log";
  io::write_text(log_path, log.str());
  out << "trained " << desc.name << " (" << model.param_count() << " parameters) -> " << path.string() << "\n";
  return kExitOk;
}

int cmd_evaluate(const Common& c, const std::string& dataset_path, const std::string& model_path,
                 const std::string& out_arg, std::ostream& out) {
  const RunConfig cfg = load_run_config(c.config);
  const sim::Dataset ds = io::read_dataset(dataset_path);
  const clf::SequenceModel model = io::read_model(model_path);
  clf::check_compatible(model, ds);
  const eval::Split split = eval::split(ds, cfg.train_fraction, cfg.split_seed);
  eval::EvalReport report = eval::evaluate(model, ds, split.test, thread_count(c, cfg));
  report.model_id = model_id(model, model_path);
  report.dataset_id = dataset_id(ds);
  const std::vector<std::pair<std::string, eval::EvalReport>> rows = {{model.descriptor.name, report}};
  out << eval::per_state_table(rows) << "\n" << eval::average_table(rows);
  if (!out_arg.empty()) {
    json j = eval::to_json(report);
    j["config_hash"] = run_hash(cfg);
    ensure_parent(out_arg);
    io::write_text(out_arg, j.dump(1) + "\n");
  }
  return kExitOk;
}

struct Bounds {
  double lo_i = 0, hi_i = 1, lo_q = 0, hi_q = 1;
};

void write_scatter(const std::filesystem::path& stem, const std::string& title,
                   const std::vector<std::pair<sim::State, dsp::IqPoint>>& pts, const std::vector<std::uint64_t>& ids,
                   const Bounds& b, const std::string& hash) {
  std::ostringstream csv;
  csv << "# config_hash=" << hash << "\nshot_id,label,i,q\n" << std::setprecision(9);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    csv << ids[k] << "," << int(pts[k].first) << "," << pts[k].second.i << "," << pts[k].second.q << "\n";
  }
  auto csv_path = stem;
  csv_path += ".csv";
  io::write_text(csv_path, csv.str());

  constexpr double kSize = 480.0;
  constexpr double kMargin = 40.0;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c"};
  std::ostringstream svg;
  svg << std::setprecision(5);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize << "\">\n";
  svg << "<!-- config_hash=" << hash << " -->\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kSize / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << " ("
      << pts.size() << ")</text>\n";
  const double span = kSize - 2 * kMargin;
  svg << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << span << "\" height=\"" << span
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << kSize / 2 << "\" y=\"" << kSize - 10 << "\" text-anchor=\"middle\" font-size=\"12\">I</text>\n";
  svg << "<text x=\"12\" y=\"" << kSize / 2 << "\" font-size=\"12\">Q</text>\n";
  for (const auto& [label, p] : pts) {
    const double x = kMargin + (p.i - b.lo_i) / (b.hi_i - b.lo_i) * span;
    const double y = kMargin + (b.hi_q - p.q) / (b.hi_q - b.lo_q) * span;
    svg << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"1.5\" fill=\"" << colors[label]
        << "\" fill-opacity=\"0.5\"/>\n";
  }
  svg << "</svg>\n";
  auto svg_path = stem;
  svg_path += ".svg";
  io::write_text(svg_path, svg.str());
}

int cmd_compare(const Common& c, const std::string& dataset_path, const std::vector<std::string>& model_paths,
                const std::string& out_arg, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load_run_config(c.config);
  if (model_paths.size() < 2) {
    throw ArgumentError("compare needs at least two models");
  }
  const sim::Dataset ds = io::read_dataset(dataset_path);
  const eval::Split split = eval::split(ds, cfg.train_fraction, cfg.split_seed);
  const unsigned threads = thread_count(c, cfg);
  const std::string hash = run_hash(cfg);
  const std::filesystem::path dir = out_arg.empty() ? std::filesystem::path(cfg.output_dir) : std::filesystem::path(out_arg);
  std::filesystem::create_directories(dir);

  std::vector<sim::State> labels(split.test.size());
  std::vector<std::uint64_t> ids(split.test.size());
  std::vector<dsp::IqPoint> points(split.test.size());
  std::unique_ptr<bool[]> had_transition(new bool[split.test.size()]);
  for (std::size_t k = 0; k < split.test.size(); ++k) {
    const auto& shot = ds.shots[split.test[k]];
    labels[k] = shot.label;
    ids[k] = shot.shot_id;
    points[k] = clf::integrated_point(shot, ds.config.dt(), ds.config.f_if);
    had_transition[k] = shot.true_path.has_transition();
  }

  std::vector<std::pair<std::string, eval::EvalReport>> rows;
  std::vector<std::vector<sim::State>> predictions;
  json models = json::array();
  for (const auto& path : model_paths) {
    clf::SequenceModel model = io::read_model(path);
    try {
      clf::check_compatible(model, ds);
    } catch (const IncompatibilityError& e) {
      err << "warning: skipping " << path << ": " << e.what() << "\n";
      continue;
    }
    const auto preds = clf::predict_batch(model, ds, split.test, threads);
    std::vector<sim::State> predicted(preds.size());
    std::transform(preds.begin(), preds.end(), predicted.begin(), [](const auto& p) { return p.label; });
    eval::EvalReport report = eval::make_report(labels, predicted);
    report.model_id = model_id(model, path);
    report.dataset_id = dataset_id(ds);
    models.push_back({{"name", model.descriptor.name}, {"report", eval::to_json(report)}});
    rows.emplace_back(model.descriptor.name, report);
    predictions.push_back(std::move(predicted));
  }
  if (rows.empty()) {
    err << "error: no model is compatible with the dataset\n";
    return kExitValidation;
  }

  std::ostringstream text;
  text << "# config_hash=" << hash << "\n" << eval::per_state_table(rows) << "\n" << eval::average_table(rows);
  json report = {{"config_hash", hash}, {"dataset_id", dataset_id(ds)}, {"n_test", split.test.size()},
                 {"models", models}};

  if (rows.size() >= 2) {
    eval::DisagreementInput in{ids, labels, predictions[0], predictions[1], points,
                               std::span<const bool>(had_transition.get(), split.test.size())};
    const eval::DisagreementSet set = eval::disagreements(in);
    text << "\nA = " << rows[0].first << ", B = " << rows[1].first << "\n"
         << "A correct, B wrong: " << set.lstm_only_correct.size() << " (with transition "
         << std::fixed << std::setprecision(3) << eval::transition_fraction(set.lstm_only_correct) << ")\n"
         << "B correct, A wrong: " << set.gmm_only_correct.size() << " (with transition "
         << eval::transition_fraction(set.gmm_only_correct) << ")\n"
         << "both wrong: " << set.both_wrong.size() << "\n";
    report["disagreements"] = {{"model_a", rows[0].first},
                               {"model_b", rows[1].first},
                               {"a_only_correct", set.lstm_only_correct.size()},
                               {"b_only_correct", set.gmm_only_correct.size()},
                               {"both_wrong", set.both_wrong.size()},
                               {"a_only_correct_transition_fraction", eval::transition_fraction(set.lstm_only_correct)},
                               {"b_only_correct_transition_fraction", eval::transition_fraction(set.gmm_only_correct)}};

    std::ostringstream csv;
    eval::write_disagreement_csv(csv, set, hash);
    io::write_text(dir / "disagreements.csv", csv.str());

    Bounds b{points[0].i, points[0].i, points[0].q, points[0].q};
    for (const auto& p : points) {
      b.lo_i = std::min(b.lo_i, p.i);
      b.hi_i = std::max(b.hi_i, p.i);
      b.lo_q = std::min(b.lo_q, p.q);
      b.hi_q = std::max(b.hi_q, p.q);
    }
    const double pad_i = 0.05 * (b.hi_i - b.lo_i) + 1e-12;
    const double pad_q = 0.05 * (b.hi_q - b.lo_q) + 1e-12;
    b.lo_i -= pad_i;
    b.hi_i += pad_i;
    b.lo_q -= pad_q;
    b.hi_q += pad_q;

    std::vector<std::pair<sim::State, dsp::IqPoint>> all(points.size());
    for (std::size_t k = 0; k < points.size(); ++k) {
      all[k] = {labels[k], points[k]};
    }
    write_scatter(dir / "scatter_all", "all test shots", all, ids, b, hash);
    auto subset = [&](const std::vector<eval::DisagreementEntry>& entries, const std::string& stem,
                      const std::string& title) {
      std::vector<std::pair<sim::State, dsp::IqPoint>> pts;
      std::vector<std::uint64_t> sub_ids;
      for (const auto& e : entries) {
        pts.emplace_back(e.label, e.point);
        sub_ids.push_back(e.shot_id);
      }
      write_scatter(dir / stem, title, pts, sub_ids, b, hash);
    };
    subset(set.lstm_only_correct, "scatter_a_only_correct", rows[0].first + " correct, " + rows[1].first + " wrong");
    subset(set.gmm_only_correct, "scatter_b_only_correct", rows[1].first + " correct, " + rows[0].first + " wrong");
  }

  io::write_text(dir / "comparison.txt", text.str());
  io::write_text(dir / "comparison.json", report.dump(1) + "\n");
  out << text.str();
  if (rows.size() < 2) {
    err << "error: fewer than two compatible models; disagreement outputs not written\n";
    return kExitValidation;
  }
  return kExitOk;
}

int cmd_export(const std::string& dataset_path, const std::string& out_arg, std::ostream& out) {
  const sim::Dataset ds = io::read_dataset(dataset_path);
  std::ostringstream csv;
  io::export_csv(ds, csv);
  io::write_text(out_arg, csv.str());
  out << "exported " << ds.shots.size() << " shots to " << out_arg << "\n";
  return kExitOk;
}

int cmd_inspect(const std::string& model_path, std::ostream& out) {
  const clf::SequenceModel model = io::read_model(model_path);
  json meta = json::parse(io::read_text(io::sidecar_path(model_path)));
  meta["param_count"] = model.param_count();
  out << meta.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Qutrit readout simulation and classification"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Common common;
  std::string out_path, dataset, pipeline, model;
  std::vector<std::string> models;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> shots;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON run configuration");
    sub->add_option("--threads", common.threads, "Worker threads");
  };

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic readout dataset");
  add_common(simulate);
  simulate->add_option("--out", out_path, "Dataset file");
  simulate->add_option("--seed", seed, "Simulation seed");
  simulate->add_option("--shots-per-state", shots, "Shots per prepared state");

  auto* train = app.add_subcommand("train", "Train a pipeline on the training split");
  add_common(train);
  train->add_option("--dataset", dataset, "Dataset file")->required();
  train->add_option("--pipeline", pipeline, "Pipeline name")->required();
  train->add_option("--out", out_path, "Model file");
  train->add_option("--seed", seed, "Training seed");

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a model on the test split");
  add_common(evaluate);
  evaluate->add_option("--dataset", dataset, "Dataset file")->required();
  evaluate->add_option("--model", model, "Model file")->required();
  evaluate->add_option("--out", out_path, "JSON report file");

  auto* compare = app.add_subcommand("compare", "Compare models on the test split");
  add_common(compare);
  compare->add_option("--dataset", dataset, "Dataset file")->required();
  compare->add_option("--model", models, "Model files (first is A, second is B)")->required();
  compare->add_option("--out", out_path, "Output directory");

  auto* exporter = app.add_subcommand("export", "Write a dataset as CSV");
  exporter->add_option("--dataset", dataset, "Dataset file")->required();
  exporter->add_option("--out", out_path, "CSV file")->required();

  auto* inspect = app.add_subcommand("inspect", "Print model metadata");
  inspect->add_option("--model", model, "Model file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*simulate) return cmd_simulate(common, out_path, seed, shots, out);
    if (*train) return cmd_train(common, dataset, pipeline, out_path, seed, out);
    if (*evaluate) return cmd_evaluate(common, dataset, model, out_path, out);
    if (*compare) return cmd_compare(common, dataset, models, out_path, out, err);
    if (*exporter) return cmd_export(dataset, out_path, out);
    if (*inspect) return cmd_inspect(model, out);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DegenerateDataError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace qreadout::cli
