// tsff: command-line front end (convert, preprocess, spectrogram, train, eval, ablate, plot).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tsff/checkpoint.hpp"
#include "tsff/config.hpp"
#include "tsff/data_io.hpp"
#include "tsff/evaluation.hpp"
#include "tsff/preprocess.hpp"
#include "tsff/timefreq.hpp"
#include "tsff/training.hpp"

namespace fs = std::filesystem;
using namespace tsff;

namespace {

struct MissingInput : Error {
  explicit MissingInput(const fs::path& p) : Error("missing input file: " + p.string()) {}
};

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw MissingInput(p);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<std::string> default_subjects(const std::string& dataset) {
  std::vector<std::string> out;
  const char prefix = dataset == "2b" ? 'B' : 'A';
  if (dataset == "synthetic") return {"S1"};
  for (int k = 1; k <= 9; ++k) out.push_back(std::string(1, prefix) + "0" + std::to_string(k));
  return out;
}

fs::path archive_path(const fs::path& data_dir, const std::string& dataset, const std::string& subject,
                      const char* split) {
  return data_dir / dataset / (subject + "_" + split + ".tsff");
}

// Synthetic subject "S<k>": train and test sets come from distinct seeds.
SubjectData synthetic_subject(const std::string& subject, std::size_t classes) {
  std::uint64_t k = 1;
  if (subject.size() > 1 && subject[0] == 'S') k = std::stoull(subject.substr(1));
  SynthOptions so;
  so.classes = classes;
  so.seed = 2 * k - 1;
  SubjectData d{synthesize_trials(so), {}};
  so.seed = 2 * k;
  d.test = synthesize_trials(so);
  d.train.subject_id = d.test.subject_id = subject;
  return d;
}

SubjectData load_subject(const fs::path& data_dir, const std::string& dataset, const std::string& subject,
                         std::size_t classes) {
  const auto tr = archive_path(data_dir, dataset, subject, "train");
  const auto te = archive_path(data_dir, dataset, subject, "test");
  if (dataset == "synthetic" && !fs::exists(tr) && !fs::exists(te)) return synthetic_subject(subject, classes);
  require_file(tr);
  require_file(te);
  SubjectData d{read_archive(tr), read_archive(te)};
  if (d.train.n_classes > classes) d.train = d.train.first_classes(classes);
  if (d.test.n_classes > classes) d.test = d.test.first_classes(classes);
  return d;
}

// Config resolution: preset or file, then explicit flags.
struct ConfigFlags {
  std::string config;  // empty: preset chosen by --dataset
  std::string mode;
  std::string dataset, subject;
  std::int64_t seed = -1;
  int epochs = -1;
  double freq_weight = -1.0, mmd_weight = -1.0, lr = -1.0;
  std::string stitch;

  void add(CLI::App* app) {
    app->add_option("--config", config, "preset name or JSON config path (default: by --dataset)");
    app->add_option("--mode", mode, "full|raw_only|img_only|fusion_no_mmd");
    app->add_option("--dataset", dataset, "dataset id (2a, 2b, synthetic)");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--epochs", epochs, "max epochs (<= 350)");
    app->add_option("--freq-weight", freq_weight, "time-frequency fusion weight w_f");
    app->add_option("--mmd-weight", mmd_weight, "MMD loss weight lambda");
    app->add_option("--lr", lr, "AdamW learning rate");
    app->add_option("--stitch", stitch, "widthwise|lengthwise|depthwise");
  }

  TsffConfig resolve() const {
    json patch = json::object();
    if (!mode.empty()) patch["mode"] = mode;
    if (!dataset.empty()) patch["dataset"] = dataset;
    if (!subject.empty()) patch["subject"] = subject;
    if (seed >= 0) patch["seed"] = seed;
    if (epochs >= 0) patch["max_epochs"] = epochs;
    if (freq_weight >= 0.0) patch["fusion"]["freq_weight"] = freq_weight;
    if (mmd_weight >= 0.0) patch["fusion"]["mmd_weight"] = mmd_weight;
    if (lr >= 0.0) patch["optimizer"]["lr"] = lr;
    if (!stitch.empty()) patch["spectrogram"]["stitch"] = stitch;
    std::string name = config;
    if (name.empty()) name = dataset == "synthetic" ? "synthetic" : dataset == "2b" ? "defaults_2b" : "defaults_2a_binary";
    if (name.find(".json") != std::string::npos) require_file(name);
    return apply_json(load_config(name), patch);
  }
};

void write_predictions(const fs::path& path, const Predictions& p) {
  std::ostringstream os;
  os << "trial,label,predicted\n";
  for (std::size_t i = 0; i < p.predicted.size(); ++i) os << i << ',' << p.labels[i] << ',' << p.predicted[i] << '\n';
  write_text(path, os.str());
}

// ---------------------------------------------------------------------------

struct ConvertArgs {
  bool synthetic = false;
  std::string out_dir = "data";
  std::size_t subjects = 1, classes = 2, n_per_class = 30;
  std::uint64_t seed = 1;
  double noise = 0.5;
  std::string signals, events, out, channels = "C3,Cz,C4", dataset = "2a", subject;
  double fs = 250.0;
};

// Text recording: header row of channel names, one row per sample.
Recording read_csv_recording(const ConvertArgs& a) {
  require_file(a.signals);
  require_file(a.events);
  std::ifstream in(a.signals);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(a.signals + ": empty file");
  const auto header = split_list(line);
  const auto wanted = split_list(a.channels);
  std::vector<std::size_t> cols;
  for (const auto& w : wanted) {
    const auto it = std::find(header.begin(), header.end(), w);
    if (it == header.end()) throw FormatError(a.signals + ": no column named " + w);
    cols.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  std::vector<std::vector<float>> chans(cols.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_list(line);
    if (cells.size() != header.size()) throw FormatError(a.signals + ": row " + std::to_string(row) + " is ragged");
    for (std::size_t k = 0; k < cols.size(); ++k) chans[k].push_back(std::stof(cells[cols[k]]));
  }
  Recording rec;
  rec.n_channels = cols.size();
  rec.n_samples = chans.empty() ? 0 : chans[0].size();
  rec.fs = static_cast<float>(a.fs);
  rec.channels = wanted;
  rec.dataset_id = a.dataset;
  rec.subject_id = a.subject;
  for (const auto& c : chans) rec.data.insert(rec.data.end(), c.begin(), c.end());
  std::ifstream ev(a.events);
  std::uint32_t max_label = 0;
  while (std::getline(ev, line)) {
    const auto cells = split_list(line);
    if (cells.size() < 2 || cells[0] == "sample") continue;
    Recording::Cue cue{std::stoull(cells[0]), static_cast<std::uint32_t>(std::stoul(cells[1]))};
    max_label = std::max(max_label, cue.label);
    rec.cues.push_back(cue);
  }
  rec.n_classes = std::max<std::size_t>(a.classes, max_label + 1);
  rec.validate();
  return rec;
}

int cmd_convert(const ConvertArgs& a) {
  if (a.synthetic) {
    for (std::size_t k = 1; k <= a.subjects; ++k) {
      SynthOptions so;
      so.classes = a.classes;
      so.n_per_class = a.n_per_class;
      so.noise = a.noise;
      const std::string subject = "S" + std::to_string(k);
      so.seed = a.seed + 2 * (k - 1);
      auto tr = synthesize_trials(so);
      so.seed += 1;
      auto te = synthesize_trials(so);
      tr.subject_id = te.subject_id = subject;
      fs::create_directories(fs::path(a.out_dir) / "synthetic");
      write_archive(tr, archive_path(a.out_dir, "synthetic", subject, "train"));
      write_archive(te, archive_path(a.out_dir, "synthetic", subject, "test"));
      std::cout << archive_path(a.out_dir, "synthetic", subject, "train").string() << '\n'
                << archive_path(a.out_dir, "synthetic", subject, "test").string() << '\n';
    }
    return 0;
  }
  if (a.signals.empty() || a.events.empty() || a.out.empty())
    throw ArgumentError("convert: need --synthetic, or --signals, --events and --out");
  const auto rec = read_csv_recording(a);
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  write_recording(rec, a.out);
  std::cout << a.out << ": " << rec.n_channels << " channels, " << rec.n_samples << " samples, " << rec.cues.size()
            << " cues\n";
  return 0;
}

struct PreprocessArgs {
  std::string in, out, normalize = "trial";
  double f_lo = 4.0, f_hi = 38.0, t_start = 2.0, t_end = 6.0;
  std::size_t order = 200;
  bool align = false;
};

int cmd_preprocess(const PreprocessArgs& a) {
  require_file(a.in);
  const auto rec = read_recording(a.in);
  PreprocessOptions opt;
  opt.filter = {a.order, a.f_lo, a.f_hi, rec.fs};
  opt.segment = {a.t_start, a.t_end};
  if (a.normalize != "trial" && a.normalize != "channel") throw ArgumentError("--normalize must be trial|channel");
  opt.normalize = a.normalize == "trial" ? NormalizeScope::kTrial : NormalizeScope::kChannel;
  auto res = preprocess_recording(rec, opt);
  for (std::size_t i : res.zero_trials) std::cerr << "warning: trial " << i << " is all zeros; left unscaled\n";
  TrialSet out = a.align ? apply_alignment(res.trials, fit_alignment(res.trials)) : res.trials;
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  write_archive(out, a.out);
  std::cout << a.out << ": " << out.n_trials << " trials x " << out.n_channels << " x " << out.n_samples << '\n';
  return 0;
}

int cmd_spectrogram(const std::string& in, const std::string& out_dir, const ConfigFlags& flags, bool align) {
  require_file(in);
  const auto trials = read_archive(in);
  const TsffConfig cfg = flags.resolve();
  const auto src = align ? apply_alignment(trials, fit_alignment(trials)) : trials;
  const auto batch = cached_spectrograms(src, cfg.spectrogram, resolve_cache_dir(std::nullopt));
  export_spectrograms(batch, src.labels, out_dir);
  std::cout << out_dir << ": " << batch.images.n() << " spectrograms (" << to_string(batch.stitch) << ", "
            << batch.size << "px)\n";
  return 0;
}

struct TrainArgs {
  ConfigFlags cfg;
  std::string data_dir = "data", out_dir = "runs", train_file, test_file, cache_dir;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
  TsffConfig cfg = a.cfg.resolve();
  if (cfg.subject_id.empty() && a.train_file.empty()) throw ArgumentError("train: need --subject or --train/--test");
  SubjectData d;
  if (!a.train_file.empty() || !a.test_file.empty()) {
    require_file(a.train_file);
    require_file(a.test_file);
    d = {read_archive(a.train_file), read_archive(a.test_file)};
    if (d.train.n_classes > cfg.n_classes) d.train = d.train.first_classes(cfg.n_classes);
    if (d.test.n_classes > cfg.n_classes) d.test = d.test.first_classes(cfg.n_classes);
    if (cfg.subject_id.empty()) cfg.subject_id = d.train.subject_id;
  } else {
    d = load_subject(a.data_dir, cfg.dataset_id, cfg.subject_id, cfg.n_classes);
  }
  TrainOptions opt;
  if (!a.cache_dir.empty()) opt.cache_dir = fs::path(a.cache_dir);
  if (!a.quiet)
    opt.on_epoch = [](const EpochRecord& e) {
      std::cerr << "epoch " << e.epoch << "  loss " << fmt(e.train_loss) << "  test acc " << fmt(100 * e.test_accuracy, 2)
                << "%\n";
    };
  const fs::path run_dir = fs::path(a.out_dir) / (cfg.dataset_id + "_" + cfg.subject_id + "_" + to_string(cfg.mode));
  fs::create_directories(run_dir);
  auto result = train(d.train, d.test, cfg, opt);
  result.manifest.checkpoint = (run_dir / "model.tsfc").string();
  write_checkpoint(result.checkpoint, run_dir / "model.tsfc");
  write_manifest(result.manifest, run_dir / "manifest.json");
  std::cout << (run_dir / "manifest.json").string() << "  best " << fmt(100 * result.manifest.best_accuracy, 2)
            << "% (epoch " << result.manifest.best_epoch << "), final " << fmt(100 * result.manifest.final_accuracy, 2)
            << "%\n";
  return 0;
}

struct EvalArgs {
  std::string checkpoint, test_file, out, out_dir = "reports", baselines, reference, label = "TSFF-Net",
                                                        selection = "best", method = "auto", subjects;
  std::vector<std::string> manifests;
};

int cmd_eval(const EvalArgs& a) {
  if (!a.checkpoint.empty()) {
    require_file(a.checkpoint);
    require_file(a.test_file);
    const auto r = evaluate(read_checkpoint(a.checkpoint), read_archive(a.test_file));
    if (!a.out.empty()) write_predictions(a.out, r.predictions);
    std::cout << "accuracy " << fmt(100 * r.accuracy, 2) << "% on " << r.predictions.predicted.size() << " trials\n";
    return 0;
  }
  if (a.manifests.empty()) throw ArgumentError("eval: need --checkpoint/--test or --manifest ...");
  std::vector<RunManifest> runs;
  for (const auto& m : a.manifests) {
    require_file(m);
    runs.push_back(read_manifest(m));
  }
  std::vector<std::string> subjects = split_list(a.subjects);
  if (subjects.empty())
    for (const auto& r : runs) subjects.push_back(r.subject_id);
  if (a.selection != "best" && a.selection != "final") throw ArgumentError("--selection must be best|final");
  auto rep = accuracy_table(runs, subjects, a.selection == "best" ? Selection::kBest : Selection::kFinal, a.label);
  if (!a.baselines.empty()) {
    require_file(a.baselines);
    const auto table = read_baselines(a.baselines);
    if (table.subjects != subjects) throw ArgumentError("eval: baseline subjects differ from report subjects");
    for (const auto& [name, row] : table.rows)
      if (a.reference.empty() || a.reference == name) add_pvalue(rep, name, row, wilcoxon_method_from_string(a.method));
  }
  for (const auto& p : emit_report(rep, a.out_dir)) std::cout << p.string() << '\n';
  std::cout << a.label << " (" << to_string(rep.selection) << "): mean " << fmt(rep.mean, 2) << "%, std "
            << fmt(rep.std, 2) << "\n";
  return 0;
}

struct AblateArgs {
  ConfigFlags cfg;
  std::string data_dir = "data", out_dir = "reports/ablation", subjects, cache_dir;
};

int cmd_ablate(const AblateArgs& a) {
  const TsffConfig base = a.cfg.resolve();
  auto subjects = split_list(a.subjects);
  if (subjects.empty()) subjects = default_subjects(base.dataset_id);
  TrainOptions opt;
  if (!a.cache_dir.empty()) opt.cache_dir = fs::path(a.cache_dir);
  const auto res = run_ablation(
      subjects, [&](const std::string& s) { return load_subject(a.data_dir, base.dataset_id, s, base.n_classes); },
      base, opt);
  for (const auto& p : emit_ablation(res, a.out_dir)) std::cout << p.string() << '\n';
  for (std::size_t k = 0; k < res.arms.size(); ++k)
    std::cout << res.arms[k].name << ": mean " << fmt(res.reports[k].mean, 2) << "%, std " << fmt(res.reports[k].std, 2)
              << "\n";
  return 0;
}

int cmd_plot(const std::vector<std::string>& manifests, const std::string& ablation_csv, const std::string& out) {
  PlotData p;
  if (!manifests.empty()) {
    p = {"line", "Mean test accuracy per epoch", "epoch", "accuracy (%)", {}, {}};
    for (const auto& m : manifests) {
      require_file(m);
      const auto r = read_manifest(m);
      std::vector<double> curve;
      for (double v : r.accuracy_curve()) curve.push_back(100.0 * v);
      p.series.push_back({r.subject_id + " " + r.config.value("mode", ""), curve, {}});
    }
  } else if (!ablation_csv.empty()) {
    require_file(ablation_csv);
    p = {"bar", "Ablation: mean accuracy (error bars: std)", "arm", "accuracy (%)", {}, {{"mean", {}, {}}}};
    std::ifstream in(ablation_csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      const auto cells = split_list(line);
      if (cells.size() < 5) throw FormatError(ablation_csv + ": expected arm,mode,mmd_weight,mean_pct,std_pct");
      p.categories.push_back(cells[0]);
      p.series[0].values.push_back(std::stod(cells[3]));
      p.series[0].errors.push_back(std::stod(cells[4]));
    }
  } else {
    throw ArgumentError("plot: need --manifest ... or --ablation FILE");
  }
  write_text(out, render_svg(p));
  std::cout << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tsff: time-space-frequency feature fusion for 3-channel motor-imagery EEG"};
  app.require_subcommand(1);

  ConvertArgs conv;
  auto* c = app.add_subcommand("convert", "synthesize trial archives or convert a CSV recording");
  c->add_flag("--synthetic", conv.synthetic, "write synthetic train/test archives");
  c->add_option("--out-dir", conv.out_dir, "synthetic output root (<dir>/synthetic/S<k>_{train,test}.tsff)");
  c->add_option("--subjects", conv.subjects, "number of synthetic subjects");
  c->add_option("--classes", conv.classes, "number of classes");
  c->add_option("--n-per-class", conv.n_per_class, "synthetic trials per class");
  c->add_option("--seed", conv.seed, "synthetic base seed");
  c->add_option("--noise", conv.noise, "synthetic noise std");
  c->add_option("--signals", conv.signals, "CSV with a header of channel names and one row per sample");
  c->add_option("--events", conv.events, "CSV of sample,label cue rows");
  c->add_option("--channels", conv.channels, "columns to keep, comma separated");
  c->add_option("--fs", conv.fs, "sampling rate (Hz)");
  c->add_option("--dataset", conv.dataset, "dataset id");
  c->add_option("--subject", conv.subject, "subject id");
  c->add_option("--out", conv.out, "output recording (.tsfr)");

  PreprocessArgs pre;
  auto* p = app.add_subcommand("preprocess", "band-pass, segment and normalize a recording into trials");
  p->add_option("--in", pre.in, "input recording (.tsfr)")->required();
  p->add_option("--out", pre.out, "output trial archive (.tsff)")->required();
  p->add_option("--f-lo", pre.f_lo, "passband low edge (Hz)");
  p->add_option("--f-hi", pre.f_hi, "passband high edge (Hz)");
  p->add_option("--order", pre.order, "FIR order");
  p->add_option("--t-start", pre.t_start, "window start after cue (s)");
  p->add_option("--t-end", pre.t_end, "window end after cue (s)");
  p->add_option("--normalize", pre.normalize, "trial|channel");
  p->add_flag("--align", pre.align, "apply Euclidean alignment fitted on this session");

  std::string spec_in, spec_out;
  bool spec_align = false;
  ConfigFlags spec_cfg;
  auto* s = app.add_subcommand("spectrogram", "render and export CWT spectrogram images");
  s->add_option("--in", spec_in, "trial archive (.tsff)")->required();
  s->add_option("--out-dir", spec_out, "output directory for PFM images")->required();
  s->add_flag("--align", spec_align, "align trials before the transform");
  spec_cfg.add(s);

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train one subject and write manifest + checkpoint");
  tr.cfg.add(t);
  t->add_option("--subject", tr.cfg.subject, "subject id");
  t->add_option("--data-dir", tr.data_dir, "archive root (<dir>/<dataset>/<subject>_{train,test}.tsff)");
  t->add_option("--train", tr.train_file, "explicit training archive");
  t->add_option("--test", tr.test_file, "explicit test archive");
  t->add_option("--out-dir", tr.out_dir, "run output root");
  t->add_option("--cache-dir", tr.cache_dir, "spectrogram cache (default $TSFF_CACHE_DIR)");
  t->add_flag("--quiet", tr.quiet, "no per-epoch progress");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "score a checkpoint, or aggregate run manifests into a report");
  e->add_option("--checkpoint", ev.checkpoint, "model checkpoint (.tsfc)");
  e->add_option("--test", ev.test_file, "test archive for --checkpoint");
  e->add_option("--out", ev.out, "per-trial predictions CSV");
  e->add_option("--manifest", ev.manifests, "run manifests (one per subject)");
  e->add_option("--subjects", ev.subjects, "expected subjects, comma separated");
  e->add_option("--baselines", ev.baselines, "CSV of published per-subject rows for p-values");
  e->add_option("--reference", ev.reference, "only test against this baseline row");
  e->add_option("--method", ev.method, "Wilcoxon method: exact|normal|auto");
  e->add_option("--selection", ev.selection, "best|final epoch accuracy");
  e->add_option("--label", ev.label, "report label");
  e->add_option("--out-dir", ev.out_dir, "report directory");

  AblateArgs ab;
  auto* a = app.add_subcommand("ablate", "run the four ablation arms and emit grouped reports");
  ab.cfg.add(a);
  a->add_option("--subjects", ab.subjects, "subjects, comma separated (default: all of the dataset)");
  a->add_option("--data-dir", ab.data_dir, "archive root");
  a->add_option("--out-dir", ab.out_dir, "report directory");
  a->add_option("--cache-dir", ab.cache_dir, "spectrogram cache");

  std::vector<std::string> plot_manifests;
  std::string plot_ablation, plot_out;
  auto* pl = app.add_subcommand("plot", "draw accuracy curves or ablation bars as SVG");
  pl->add_option("--manifest", plot_manifests, "run manifests to plot as curves");
  pl->add_option("--ablation", plot_ablation, "ablation.csv to plot as bars");
  pl->add_option("--out", plot_out, "output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    std::cerr << "tsff: " << ex.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*c) return cmd_convert(conv);
    if (*p) return cmd_preprocess(pre);
    if (*s) return cmd_spectrogram(spec_in, spec_out, spec_cfg, spec_align);
    if (*t) return cmd_train(tr);
    if (*e) return cmd_eval(ev);
    if (*a) return cmd_ablate(ab);
    if (*pl) return cmd_plot(plot_manifests, plot_ablation, plot_out);
  } catch (const std::exception& ex) {
    std::cerr << "tsff: " << ex.what() << '\n';
    return 1;
  }
  return 2;
}
