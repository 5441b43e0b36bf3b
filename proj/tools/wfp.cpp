// wfp: website-fingerprinting workbench command line.
//
// Exit codes: 0 success, 1 runtime failure (one-line JSON error on stderr),
// 2 usage error.

#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "wfp/pipeline.hpp"

namespace {

using namespace wfp;

std::vector<double> parse_thresholds(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = detail::parse_double(detail::trim(item));
    if (!v) throw CLI::ValidationError("--thresholds", "not a number: '" + item + "'");
    out.push_back(*v);
  }
  if (out.empty()) throw CLI::ValidationError("--thresholds", "no thresholds given");
  return out;
}

std::array<int, kStages> parse_widths(const std::string& text) {
  std::array<int, kStages> out{};
  std::stringstream ss(text);
  std::string item;
  std::size_t i = 0;
  while (std::getline(ss, item, ',')) {
    const auto v = detail::parse_int<int>(detail::trim(item));
    if (!v || i >= out.size()) throw CLI::ValidationError("--widths", "expected four comma-separated integers");
    out[i++] = *v;
  }
  if (i != out.size()) throw CLI::ValidationError("--widths", "expected four comma-separated integers");
  return out;
}

void report_error(const char* kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Website-fingerprinting attack workbench"};
  app.require_subcommand(1);

  SynthOptions synth;
  std::string separability = "easy";
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic trace corpus");
  c_synth->add_option("--sites", synth.sites, "Monitored sites")->required()->check(CLI::NonNegativeNumber);
  c_synth->add_option("--traces", synth.traces, "Traces per monitored site")->required()->check(CLI::NonNegativeNumber);
  c_synth->add_option("--unmon", synth.unmonitored, "Unmonitored traces")->check(CLI::NonNegativeNumber);
  c_synth->add_option("--seed", synth.seed, "Random seed")->required();
  c_synth->add_option("--separability", separability, "easy or hard")->check(CLI::IsMember({"easy", "hard"}));
  c_synth->add_option("--out", synth.out, "Output corpus directory")->required();

  ExtractOptions extract;
  auto* c_extract = app.add_subcommand("extract", "Build a processed dataset from a corpus");
  c_extract->add_option("--corpus", extract.corpus, "Corpus directory")->required();
  c_extract->add_option("--n-mon", extract.n_mon, "Monitored sites")->required()->check(CLI::NonNegativeNumber);
  c_extract->add_option("--seed", extract.seed, "Split seed")->required();
  c_extract->add_option("--unmon-train", extract.unmonitored.train, "Unmonitored traces for training");
  c_extract->add_option("--unmon-test", extract.unmonitored.test, "Unmonitored traces for testing");
  c_extract->add_option("--out", extract.out, "Output dataset archive")->required();

  TrainOptions train;
  std::string variant, widths;
  int stem_filters = 0;
  auto* c_train = app.add_subcommand("train", "Train the direction or time model");
  c_train->add_option("--dataset", train.dataset, "Dataset archive")->required();
  c_train->add_option("--variant", variant, "direction or time")->required()->check(CLI::IsMember({"direction", "time"}));
  c_train->add_option("--out", train.out, "Output checkpoint")->required();
  c_train->add_option("--seed", train.training.seed, "Training seed");
  c_train->add_option("--lr", train.training.initial_lr, "Initial learning rate");
  c_train->add_option("--min-lr", train.training.min_lr, "Learning-rate floor");
  c_train->add_option("--decay-patience", train.training.decay_patience, "Epochs without improvement before decay (stop at twice this)");
  c_train->add_option("--batch-size", train.training.batch_size, "Batch size");
  c_train->add_option("--max-epochs", train.training.max_epochs, "Epoch cap");
  c_train->add_option("--widths", widths, "Stage widths, e.g. 64,128,256,512");
  c_train->add_option("--stem-filters", stem_filters, "Stem filters (default: first stage width)");
  c_train->add_option("--metadata-units", train.model.metadata_units, "Metadata branch width");
  c_train->add_option("--combined-units", train.model.combined_units, "Combined layer width");
  c_train->add_option("--dropout", train.model.dropout, "Dropout on the combined layer");
  bool quiet = false;
  c_train->add_flag("--quiet", quiet, "No per-epoch progress on stderr");

  EvaluateOptions evaluate;
  std::string setting = "closed";
  std::string eval_predictions;
  auto* c_eval = app.add_subcommand("evaluate", "Score the test split");
  c_eval->add_option("--dataset", evaluate.dataset, "Dataset archive")->required();
  auto* eval_dir = c_eval->add_option("--dir-ckpt", "Direction checkpoint");
  auto* eval_time = c_eval->add_option("--time-ckpt", "Time checkpoint");
  c_eval->add_option("--threshold", evaluate.threshold, "Confidence threshold in [0, 1]");
  c_eval->add_option("--setting", setting, "closed or open")->check(CLI::IsMember({"closed", "open"}));
  c_eval->add_option("--report", evaluate.report, "Output report JSON")->required();
  c_eval->add_option("--predictions", eval_predictions, "Prediction CSV (default: <report>.predictions.csv)");

  CurveOptions curve;
  std::string thresholds;
  auto* c_curve = app.add_subcommand("curve", "TPR/FPR trade-off over thresholds");
  c_curve->add_option("--dataset", curve.dataset, "Dataset archive")->required();
  auto* curve_dir = c_curve->add_option("--dir-ckpt", "Direction checkpoint");
  auto* curve_time = c_curve->add_option("--time-ckpt", "Time checkpoint");
  c_curve->add_option("--thresholds", thresholds, "Comma-separated ascending thresholds")->required();
  c_curve->add_option("--out", curve.out, "Output CSV")->required();

  DefendOptions defend;
  auto* c_defend = app.add_subcommand("defend", "Apply the constant-rate defense to a corpus");
  c_defend->add_option("--corpus", defend.corpus, "Input corpus directory")->required();
  c_defend->add_option("--rho-out", defend.config.rho_out, "Seconds per outgoing slot");
  c_defend->add_option("--rho-in", defend.config.rho_in, "Seconds per incoming slot");
  c_defend->add_option("--pad-multiple", defend.config.pad_multiple, "Pad each direction to a multiple of this");
  c_defend->add_option("--out", defend.out, "Output corpus directory")->required();
  c_defend->add_option("--overhead-report", defend.overhead_report, "Overhead summary JSON")->required();

  try {
    app.parse(argc, argv);
    if (c_eval->parsed() && eval_dir->empty() && eval_time->empty())
      throw CLI::RequiredError("evaluate needs --dir-ckpt and/or --time-ckpt");
    if (c_curve->parsed() && curve_dir->empty() && curve_time->empty())
      throw CLI::RequiredError("curve needs --dir-ckpt and/or --time-ckpt");
    if (c_curve->parsed()) curve.thresholds = parse_thresholds(thresholds);
    if (c_train->parsed() && !widths.empty()) train.model.stage_widths = parse_widths(widths);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help() << std::endl;
    return 2;
  }

  try {
    if (c_synth->parsed()) {
      synth.separability = parse_separability(separability);
      run_synth(synth);
    } else if (c_extract->parsed()) {
      run_extract(extract);
    } else if (c_train->parsed()) {
      train.variant = parse_variant(variant);
      train.training.stop_patience = 2 * train.training.decay_patience;
      train.model.stem_filters = stem_filters > 0 ? stem_filters : train.model.stage_widths[0];
      if (!quiet) train.log = &std::cerr;
      run_train(train);
    } else if (c_eval->parsed()) {
      if (!eval_dir->empty()) evaluate.dir_ckpt = eval_dir->as<std::string>();
      if (!eval_time->empty()) evaluate.time_ckpt = eval_time->as<std::string>();
      if (!eval_predictions.empty()) evaluate.predictions = eval_predictions;
      evaluate.setting = setting == "open" ? Setting::open : Setting::closed;
      run_evaluate(evaluate);
    } else if (c_curve->parsed()) {
      if (!curve_dir->empty()) curve.dir_ckpt = curve_dir->as<std::string>();
      if (!curve_time->empty()) curve.time_ckpt = curve_time->as<std::string>();
      run_curve(curve);
    } else if (c_defend->parsed()) {
      run_defend(defend);
    }
  } catch (const Error& e) {
    report_error(e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error("InternalError", e.what());
    return 1;
  }
  return 0;
}
