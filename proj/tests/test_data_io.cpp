#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <numbers>

#include "test_util.hpp"
#include "tsff/data_io.hpp"

namespace {

using tsff::TrialSet;
namespace archive = tsff::archive;

TrialSet tiny(std::size_t n, std::size_t t) {
  TrialSet s;
  s.n_trials = n;
  s.n_channels = 3;
  s.n_samples = t;
  s.n_classes = 2;
  s.fs = 250.0f;
  s.channels = tsff::kMotorChannels;
  s.dataset_id = "2a";
  s.subject_id = "A01";
  s.data.assign(n * 3 * t, 0.0f);
  s.labels.assign(n, 0);
  return s;
}

TEST(Archive, SingleZeroTrialSize) {
  tsff::test::TempDir dir;
  auto t = tiny(1, 4);
  tsff::write_archive(t, dir / "a.tsff");
  const auto size = std::filesystem::file_size(dir / "a.tsff");
  EXPECT_EQ(size, archive::header_size(t) + 48);
  // 36 fixed + 4 label + 3 names (2+2, 2+2, 2+2) + 2+2 dataset + 2+3 subject
  EXPECT_EQ(archive::header_size(t), 36u + 4u + 12u + 4u + 5u);
}

TEST(Archive, RoundTripIsBitExact) {
  tsff::test::TempDir dir;
  auto t = tsff::synthesize_trials({.n_per_class = 3, .classes = 2, .samples = 64, .seed = 7});
  t.data[5] = -0.0f;
  t.data[6] = std::numeric_limits<float>::denorm_min();
  tsff::write_archive(t, dir / "r.tsff");
  const auto back = tsff::read_archive(dir / "r.tsff");
  ASSERT_EQ(back.data.size(), t.data.size());
  EXPECT_EQ(std::memcmp(back.data.data(), t.data.data(), t.data.size() * sizeof(float)), 0);
  EXPECT_EQ(back.labels, t.labels);
  EXPECT_EQ(back.fs, t.fs);
  EXPECT_EQ(back.channels, t.channels);
  EXPECT_EQ(back.dataset_id, t.dataset_id);
  EXPECT_EQ(back.subject_id, t.subject_id);
  EXPECT_EQ(back.n_classes, t.n_classes);
}

TEST(Archive, SessionDataBlockSize) {
  auto t = tiny(144, 1000);
  const auto bytes = archive::encode_trials(t);
  EXPECT_EQ(bytes.size() - archive::header_size(t), 1728000u);
}

TEST(Archive, BadMagicIsFormatError) {
  auto bytes = archive::encode_trials(tiny(2, 8));
  std::memcpy(bytes.data(), "XXXX", 4);
  EXPECT_THROW(archive::decode_trials(bytes), tsff::FormatError);
}

TEST(Archive, TruncatedDataIsCorruption) {
  auto bytes = archive::encode_trials(tiny(2, 8));
  bytes.resize(bytes.size() - 10);
  EXPECT_THROW(archive::decode_trials(bytes), tsff::CorruptionError);
}

TEST(Archive, TruncatedHeaderIsFormatError) {
  auto bytes = archive::encode_trials(tiny(2, 8));
  bytes.resize(20);
  EXPECT_THROW(archive::decode_trials(bytes), tsff::FormatError);
}

TEST(Archive, TrailingBytesRejected) {
  auto bytes = archive::encode_trials(tiny(2, 8));
  bytes.push_back(0);
  EXPECT_THROW(archive::decode_trials(bytes), tsff::FormatError);
}

TEST(Archive, VersionMismatch) {
  auto bytes = archive::encode_trials(tiny(2, 8));
  bytes[4] = 9;
  EXPECT_THROW(archive::decode_trials(bytes), tsff::UnsupportedVersionError);
}

TEST(Archive, InvalidTrialSetNotWritten) {
  tsff::test::TempDir dir;
  auto t = tiny(2, 8);
  t.labels[1] = 5;
  EXPECT_THROW(tsff::write_archive(t, dir / "bad.tsff"), tsff::ArgumentError);
  EXPECT_FALSE(std::filesystem::exists(dir / "bad.tsff"));
  t = tiny(2, 8);
  t.channels.pop_back();
  EXPECT_THROW(archive::encode_trials(t), tsff::ArgumentError);
}

TEST(Archive, MissingFile) {
  EXPECT_THROW(tsff::read_archive("/nonexistent/x.tsff"), tsff::Error);
}

TEST(Archive, RecordingRoundTrip) {
  tsff::test::TempDir dir;
  tsff::Recording rec;
  rec.n_channels = 3;
  rec.n_samples = 50;
  rec.n_classes = 2;
  rec.fs = 250.0f;
  rec.channels = tsff::kMotorChannels;
  rec.dataset_id = "2b";
  rec.subject_id = "B01";
  for (int i = 0; i < 150; ++i) rec.data.push_back(static_cast<float>(i) * 0.5f);
  rec.cues = {{3, 0}, {20, 1}};
  tsff::write_recording(rec, dir / "r.tsfr");
  const auto back = tsff::read_recording(dir / "r.tsfr");
  EXPECT_EQ(back.data, rec.data);
  ASSERT_EQ(back.cues.size(), 2u);
  EXPECT_EQ(back.cues[1].sample, 20u);
  EXPECT_EQ(back.cues[1].label, 1u);
  EXPECT_EQ(back.subject_id, "B01");
}

TEST(Synthetic, Deterministic) {
  tsff::SynthOptions o{.n_per_class = 4, .samples = 200, .seed = 11};
  EXPECT_EQ(tsff::synthesize_trials(o).data, tsff::synthesize_trials(o).data);
  auto o2 = o;
  o2.seed = 12;
  EXPECT_NE(tsff::synthesize_trials(o).data, tsff::synthesize_trials(o2).data);
}

TEST(Synthetic, Counts) {
  const auto t = tsff::synthesize_trials({.n_per_class = 30, .classes = 2});
  EXPECT_EQ(t.n_trials, 60u);
  EXPECT_EQ(std::count(t.labels.begin(), t.labels.end(), 0u), 30);
  EXPECT_EQ(std::count(t.labels.begin(), t.labels.end(), 1u), 30);
  EXPECT_NO_THROW(t.validate());
  EXPECT_NO_THROW(t.require_motor_montage());
}

TEST(Synthetic, NoiselessDominantBinIsClassFrequency) {
  // 1000 samples at 250 Hz gives a 0.25 Hz grid; class frequencies are on it.
  const auto t = tsff::synthesize_trials({.n_per_class = 3, .classes = 4, .samples = 1000, .seed = 3, .noise = 0.0});
  const std::size_t T = t.n_samples;
  for (std::size_t i = 0; i < t.n_trials; ++i) {
    std::vector<double> x(T, 0.0);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t s = 0; s < T; ++s) x[s] += t.channel(i, c)[s];
    std::size_t best = 0;
    double best_mag = -1.0;
    for (std::size_t k = 1; k < T / 2; ++k) {
      std::complex<double> acc = 0.0;
      for (std::size_t s = 0; s < T; ++s)
        acc += x[s] * std::polar(1.0, -2.0 * std::numbers::pi * double(k) * double(s) / double(T));
      if (std::abs(acc) > best_mag) {
        best_mag = std::abs(acc);
        best = k;
      }
    }
    const double f = double(best) * t.fs / double(T);
    EXPECT_DOUBLE_EQ(f, tsff::kSynthFrequencies[t.labels[i]]) << "trial " << i;
  }
}

TEST(Synthetic, ArgumentValidation) {
  EXPECT_THROW(tsff::synthesize_trials({.classes = 1}), tsff::ArgumentError);
  EXPECT_THROW(tsff::synthesize_trials({.noise = -1.0}), tsff::ArgumentError);
}

}  // namespace

namespace {

TEST(TrialSet, FirstClasses) {
  const auto t = tsff::synthesize_trials({.n_per_class = 3, .classes = 4, .samples = 50, .seed = 1});
  const auto two = t.first_classes(2);
  EXPECT_EQ(two.n_classes, 2u);
  EXPECT_EQ(two.n_trials, 6u);
  EXPECT_NO_THROW(two.validate());
  for (std::size_t i = 0, j = 0; i < t.n_trials; ++i)
    if (t.labels[i] < 2) {
      EXPECT_EQ(two.labels[j], t.labels[i]);
      EXPECT_TRUE(std::equal(two.trial(j).begin(), two.trial(j).end(), t.trial(i).begin()));
      ++j;
    }
  EXPECT_THROW(t.first_classes(5), tsff::ArgumentError);
  EXPECT_THROW(t.first_classes(1), tsff::ArgumentError);
}

}  // namespace
