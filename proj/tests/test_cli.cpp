#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <fstream>

#include "small_config.hpp"
#include "test_util.hpp"
#include "tsff/evaluation.hpp"
#include "tsff/training.hpp"

namespace {

namespace fs = std::filesystem;

struct Run {
  int code;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Run tsff_cli(const tsff::test::TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.path().string() + "' && TSFF_CACHE_DIR='" + (dir / "cache").string() + "' '" +
                          TSFF_CLI_PATH + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

// Small-model config file; data dimensions are bound from the archives.
void write_small_config(const fs::path& p, tsff::TrainMode mode) {
  tsff::write_text(p, tsff::to_json(tsff::test::small_config(mode)).dump(2));
}

TEST(Cli, UnknownSubcommandPrintsUsage) {
  tsff::test::TempDir dir;
  const auto r = tsff_cli(dir, "bogus");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE((r.out + r.err).find("train"), std::string::npos);
  EXPECT_EQ(tsff_cli(dir, "").code, 2);
  EXPECT_EQ(tsff_cli(dir, "train --no-such-flag 1").code, 2);
}

TEST(Cli, MissingInputNamesPath) {
  tsff::test::TempDir dir;
  const auto r = tsff_cli(dir, "eval --checkpoint nope.tsfc --test nope.tsff");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("nope.tsfc"), std::string::npos);
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
  EXPECT_EQ(tsff_cli(dir, "train --config missing.json --subject S1").code, 1);
  EXPECT_EQ(tsff_cli(dir, "preprocess --in absent.tsfr --out x.tsff").code, 1);
}

TEST(Cli, BadValuesFailWithDiagnostic) {
  tsff::test::TempDir dir;
  const auto r = tsff_cli(dir, "train --dataset synthetic --subject S1 --epochs 999");
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(tsff_cli(dir, "train --dataset synthetic --subject S1 --mode sideways").code, 1);
}

TEST(Cli, CsvRecordingThroughSpectrograms) {
  tsff::test::TempDir dir;
  const double fs_hz = 250.0;
  const std::size_t n = 8000;
  std::ostringstream sig;
  sig << "time,C3,Cz,C4,EOG\n";
  for (std::size_t t = 0; t < n; ++t) {
    const double x = static_cast<double>(t) / fs_hz;
    sig << t << ',' << std::sin(2 * M_PI * 10 * x) << ',' << std::sin(2 * M_PI * 12 * x + 1) << ','
        << std::cos(2 * M_PI * 20 * x) << ",0\n";
  }
  tsff::write_text(dir / "sig.csv", sig.str());
  tsff::write_text(dir / "events.csv", "sample,label\n100,0\n1900,1\n3700,0\n5500,1\n");
  const std::string sig_before = slurp(dir / "sig.csv");

  auto r = tsff_cli(dir, "convert --signals sig.csv --events events.csv --subject X1 --out rec/X1.tsfr");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "sig.csv"), sig_before);
  const auto rec = tsff::read_recording(dir / "rec/X1.tsfr");
  EXPECT_EQ(rec.n_channels, 3u);
  EXPECT_EQ(rec.n_samples, n);
  EXPECT_EQ(rec.cues.size(), 4u);

  r = tsff_cli(dir, "preprocess --in rec/X1.tsfr --out trials/X1.tsff --align");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto trials = tsff::read_archive(dir / "trials/X1.tsff");
  EXPECT_EQ(trials.n_trials, 4u);
  EXPECT_EQ(trials.n_samples, 1000u);

  write_small_config(dir / "small.json", tsff::TrainMode::kFull);
  r = tsff_cli(dir, "spectrogram --in trials/X1.tsff --out-dir spec --config small.json");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "spec"));
  std::size_t pfm = 0;
  for (const auto& e : fs::directory_iterator(dir / "spec")) pfm += e.path().extension() == ".pfm";
  EXPECT_EQ(pfm, 4u);
  r = tsff_cli(dir, "spectrogram --in trials/X1.tsff --out-dir spec3 --config small.json --stitch depthwise");
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string index = slurp(dir / "spec3/index.csv");
  EXPECT_EQ(std::count(index.begin(), index.end(), '\n'), 1 + 4 * 3);
  EXPECT_EQ(tsff_cli(dir, "convert --signals sig.csv --events events.csv --channels C3,Pz --out r.tsfr").code, 1);
}

TEST(Cli, TrainEvalPlot) {
  tsff::test::TempDir dir;
  auto r = tsff_cli(dir, "convert --synthetic --n-per-class 6 --out-dir data");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto train_bytes = slurp(dir / "data/synthetic/S1_train.tsff");
  write_small_config(dir / "small.json", tsff::TrainMode::kFusionNoMmd);

  r = tsff_cli(dir, "train --config small.json --subject S1 --data-dir data --mode full --epochs 1 --seed 11 --quiet");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "data/synthetic/S1_train.tsff"), train_bytes);
  const fs::path run = dir / "runs/synthetic_S1_full";
  ASSERT_TRUE(fs::exists(run / "manifest.json"));
  ASSERT_TRUE(fs::exists(run / "model.tsfc"));
  const auto m = tsff::read_manifest(run / "manifest.json");
  EXPECT_EQ(m.epochs.size(), 1u);
  // Explicit flags beat the file, the file beats the preset, and the manifest echoes the result.
  const auto cfg = tsff::config_from_json(m.config);
  EXPECT_EQ(cfg.mode, tsff::TrainMode::kFull);
  EXPECT_EQ(cfg.seed, 11u);
  EXPECT_EQ(cfg.max_epochs, 1u);
  EXPECT_EQ(cfg.spectrogram.size, 40u);
  EXPECT_DOUBLE_EQ(cfg.fusion.mmd_weight, 0.5);

  r = tsff_cli(dir, "eval --checkpoint runs/synthetic_S1_full/model.tsfc --test data/synthetic/S1_test.tsff --out pred.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string pred = slurp(dir / "pred.csv");
  EXPECT_EQ(std::count(pred.begin(), pred.end(), '\n'), 13);
  EXPECT_NE(r.out.find("accuracy " + tsff::fmt(100 * m.final_accuracy, 2) + "%"), std::string::npos) << r.out;

  r = tsff_cli(dir, "eval --manifest runs/synthetic_S1_full/manifest.json --out-dir reports");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "reports/tsff_net.csv"));
  EXPECT_EQ(tsff_cli(dir, "eval --manifest runs/synthetic_S1_full/manifest.json --subjects S1,S2").code, 1);

  r = tsff_cli(dir, "plot --manifest runs/synthetic_S1_full/manifest.json --out curve.svg");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(tsff::read_plot(dir / "curve.svg").series.size(), 1u);
}

TEST(Cli, AblateWritesFourReports) {
  tsff::test::TempDir dir;
  write_small_config(dir / "small.json", tsff::TrainMode::kFull);
  auto r = tsff_cli(dir, "ablate --config small.json --dataset synthetic --epochs 1 --out-dir abl");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"tsff_raw.csv", "tsff_img.csv", "fusion_without_mmd.csv", "tsff_net.csv", "ablation.csv", "ablation.svg"})
    EXPECT_TRUE(fs::exists(dir / "abl" / f)) << f;
  r = tsff_cli(dir, "plot --ablation abl/ablation.csv --out bars.svg");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(tsff::read_plot(dir / "bars.svg").categories.size(), 4u);
}

}  // namespace
