#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>

#include "small_config.hpp"
#include "test_util.hpp"
#include "tsff/evaluation.hpp"
#include "tsff/random.hpp"

namespace {

using tsff::WilcoxonMethod;

const std::filesystem::path kBaselines = std::filesystem::path(TSFF_SOURCE_DIR) / "baselines";

std::vector<double> row(const tsff::BaselineTable& t, const std::string& name) {
  for (const auto& [n, v] : t.rows)
    if (n == name) return v;
  throw std::runtime_error("no row " + name);
}

// Independent exact test: midranks by pairwise comparison, then all 2^n sign flips.
double enumeration_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  const std::size_t n = d.size();
  if (n == 0) return 1.0;
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(d[j]) < std::abs(d[i])) ++less;
      if (std::abs(d[j]) == std::abs(d[i])) ++equal;
    }
    rank[i] = less + (equal + 1.0) / 2.0;
  }
  double obs = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (d[i] > 0) obs += rank[i];
  std::size_t lo = 0, hi = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    double w = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) w += rank[i];
    lo += w <= obs + 1e-9;
    hi += w >= obs - 1e-9;
  }
  return std::min(1.0, 2.0 * static_cast<double>(std::min(lo, hi)) / static_cast<double>(std::size_t{1} << n));
}

TEST(Wilcoxon, MatchesEnumerationOracle) {
  tsff::Rng rng(17);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 1 + rep % 12;
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse grid so ties and zero differences are common.
      a[i] = std::round(rng.uniform(0.0, 6.0));
      b[i] = std::round(rng.uniform(0.0, 6.0));
    }
    const auto r = tsff::wilcoxon_signed_rank(a, b, WilcoxonMethod::kExact);
    EXPECT_NEAR(r.p, enumeration_p(a, b), 1e-12) << "rep " << rep;
  }
}

TEST(Wilcoxon, AllPositiveAndDegenerate) {
  const std::vector<double> a = {5, 6, 7, 8, 9, 10, 11, 12, 13}, b(9, 1.0);
  const auto r = tsff::wilcoxon_signed_rank(a, b);
  EXPECT_DOUBLE_EQ(r.p, 2.0 / 512.0);
  EXPECT_DOUBLE_EQ(r.w_plus, 45.0);
  EXPECT_EQ(tsff::wilcoxon_signed_rank(b, a).p, r.p);
  const auto d = tsff::wilcoxon_signed_rank(a, a);
  EXPECT_TRUE(d.degenerate);
  EXPECT_EQ(d.p, 1.0);
  EXPECT_EQ(d.zeros, 9u);
  EXPECT_THROW(tsff::wilcoxon_signed_rank(a, std::vector<double>(8, 0.0)), tsff::ArgumentError);
}

TEST(Wilcoxon, NormalApproximationWithTies) {
  // Reference values from an independent statistics package (tie-corrected, no continuity correction).
  const auto t = tsff::read_baselines(kBaselines / "2a_binary.csv");
  const auto tsff_row = row(t, "TSFF-Net");
  const auto r = tsff::wilcoxon_signed_rank(tsff_row, row(t, "LMDA-Net"), WilcoxonMethod::kNormal);
  EXPECT_NEAR(r.p, 0.011616044899262472, 1e-12);
  EXPECT_EQ(r.zeros, 1u);
  EXPECT_TRUE(r.ties);
  EXPECT_NEAR(tsff::wilcoxon_signed_rank(tsff_row, row(t, "EEGNet"), WilcoxonMethod::kNormal).p, 0.007685794055213263,
              1e-12);
  EXPECT_NEAR(tsff::wilcoxon_signed_rank(tsff_row, row(t, "EA-CSP(C=22)"), WilcoxonMethod::kNormal).p,
              0.03798263464326016, 1e-12);
}

// Required: 0.011 from the exact test. One difference is zero; dropping it leaves eight
// positive differences, whose exact p is 2/256 = 0.0078 under every zero-handling rule.
TEST(Wilcoxon, PublishedLmdaPairExact) {
  const auto t = tsff::read_baselines(kBaselines / "2a_binary.csv");
  const auto r = tsff::wilcoxon_signed_rank(row(t, "TSFF-Net"), row(t, "LMDA-Net"), WilcoxonMethod::kExact);
  EXPECT_NEAR(r.p, 0.011, 0.001);
}

TEST(Wilcoxon, PublishedEegnetPairExact) {
  const auto t = tsff::read_baselines(kBaselines / "2a_binary.csv");
  const auto r = tsff::wilcoxon_signed_rank(row(t, "TSFF-Net"), row(t, "EEGNet"), WilcoxonMethod::kExact);
  EXPECT_NEAR(r.p, 0.0039, 0.0001);
}

TEST(Wilcoxon, AutoUsesNormalOnlyWhenZerosDropped) {
  const auto t = tsff::read_baselines(kBaselines / "2a_binary.csv");
  const auto tsff_row = row(t, "TSFF-Net");
  EXPECT_EQ(tsff::wilcoxon_signed_rank(tsff_row, row(t, "EEGNet"), WilcoxonMethod::kAuto).method, WilcoxonMethod::kExact);
  EXPECT_EQ(tsff::wilcoxon_signed_rank(tsff_row, row(t, "LMDA-Net"), WilcoxonMethod::kAuto).method,
            WilcoxonMethod::kNormal);
}

struct PublishedP {
  const char* file;
  const char* reference;
  double p;
  double last_digit;
};

class PublishedPValues : public ::testing::TestWithParam<PublishedP> {};

TEST_P(PublishedPValues, Reproduced) {
  const auto& c = GetParam();
  const auto t = tsff::read_baselines(kBaselines / c.file);
  const auto r = tsff::wilcoxon_signed_rank(row(t, "TSFF-Net"), row(t, c.reference), WilcoxonMethod::kAuto);
  EXPECT_LE(std::abs(r.p - c.p), c.last_digit * 1.000001) << c.file << " " << c.reference << " p=" << r.p;
}

INSTANTIATE_TEST_SUITE_P(
    Tables, PublishedPValues,
    ::testing::Values(PublishedP{"2a_binary.csv", "EA-CSP(C=22)", 0.039, 0.001},
                      PublishedP{"2a_binary.csv", "SCSP(C=22)", 0.12, 0.01},
                      PublishedP{"2a_binary.csv", "SCSP", 0.011, 0.001},
                      PublishedP{"2a_binary.csv", "LMDA-Net", 0.011, 0.001},
                      PublishedP{"2a_binary.csv", "ConvNet", 0.062, 0.001},
                      PublishedP{"2a_binary.csv", "EEGNet", 0.0039, 0.0001},
                      PublishedP{"2a_binary.csv", "TSFF-img", 0.0039, 0.0001},
                      PublishedP{"2b.csv", "CSP", 0.0039, 0.0001},
                      PublishedP{"2b.csv", "FBCSP", 0.0039, 0.0001},
                      PublishedP{"2b.csv", "EEGNet", 0.02, 0.01},
                      PublishedP{"2b.csv", "ConvNet", 0.0039, 0.0001},
                      PublishedP{"2b.csv", "TSFF-img", 0.0039, 0.0001},
                      PublishedP{"2a_4class.csv", "LMDA-Net", 0.011, 0.001},
                      PublishedP{"2a_4class.csv", "EEGNet", 0.007, 0.001},
                      PublishedP{"2a_4class.csv", "TSFF-img", 0.007, 0.001}));

// With the tied |differences| given midranks, the exact null distribution puts this pair at
// p = 0.4375; the published 0.49 matches an untied integer-rank null instead.
TEST(Wilcoxon, ExactNullUsesMidranks) {
  const auto t = tsff::read_baselines(kBaselines / "2a_4class.csv");
  const auto r = tsff::wilcoxon_signed_rank(row(t, "TSFF-Net"), row(t, "ConvNet"), WilcoxonMethod::kExact);
  EXPECT_TRUE(r.ties);
  EXPECT_DOUBLE_EQ(r.p, 0.4375);
}

TEST(Summary, ConstantAndRange) {
  const std::vector<std::string> ids = {"a", "b", "c", "d", "e", "f", "g", "h", "i"};
  const auto r = tsff::summarize("x", ids, std::vector<double>(9, 80.0));
  EXPECT_DOUBLE_EQ(r.mean, 80.0);
  EXPECT_DOUBLE_EQ(r.std, 0.0);
  EXPECT_THROW(tsff::summarize("x", {"a"}, {101.0}), tsff::ArgumentError);
  EXPECT_THROW(tsff::summarize("x", {"a", "b"}, {1.0}), tsff::ArgumentError);
}

TEST(Summary, PermutationInvariant) {
  std::vector<std::string> ids = {"a", "b", "c", "d", "e"};
  std::vector<double> acc = {50, 61.5, 72, 99, 80.25};
  const auto r = tsff::summarize("x", ids, acc);
  std::reverse(ids.begin(), ids.end());
  std::reverse(acc.begin(), acc.end());
  const auto s = tsff::summarize("x", ids, acc);
  EXPECT_NEAR(r.mean, s.mean, 1e-12);
  EXPECT_NEAR(r.std, s.std, 1e-12);
}

// Sample (N-1) standard deviation reproduces every published std to within one unit of the
// printed digit (per-subject inputs are themselves rounded); population std does not.
TEST(Summary, PublishedStdOfAllRows) {
  for (const char* f : {"2a_binary.csv", "2b.csv", "2a_4class.csv"}) {
    const auto t = tsff::read_baselines(kBaselines / f);
    const std::map<std::string, std::vector<double>> published_std = {
        {"2a_binary.csv", {16.0, 15.6, 15.7, 11.8, 13.1, 11.7, 12.5, 9.5}},
        {"2b.csv", {12.6, 14.0, 10.7, 13.5, 14.8, 12.0, 13.5, 11.8}},
        {"2a_4class.csv", {14.6, 15.6, 13.1, 13.5, 13.6}}};
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
      const auto r = tsff::summarize(t.rows[k].first, t.subjects, t.rows[k].second);
      EXPECT_NEAR(r.std, published_std.at(f)[k], 0.1) << f << " " << t.rows[k].first;
      EXPECT_GT(std::abs(r.std * std::sqrt(8.0 / 9.0) - published_std.at(f)[k]), 0.1) << f << " " << t.rows[k].first;
    }
  }
}

TEST(Summary, PublishedTsffRows) {
  const auto a = tsff::read_baselines(kBaselines / "2a_binary.csv");
  const auto ra = tsff::summarize("TSFF-Net", a.subjects, row(a, "TSFF-Net"));
  EXPECT_NEAR(ra.mean, 85.1, 0.05);
  const auto b = tsff::read_baselines(kBaselines / "2b.csv");
  const auto rb = tsff::summarize("TSFF-Net", b.subjects, row(b, "TSFF-Net"));
  EXPECT_NEAR(rb.mean, 86.4, 0.05);
  EXPECT_NEAR(rb.std, 11.8, 0.05);
  const auto c = tsff::read_baselines(kBaselines / "2a_4class.csv");
  const auto rc = tsff::summarize("TSFF-Net", c.subjects, row(c, "TSFF-Net"));
  EXPECT_NEAR(rc.mean, 65.2, 0.05);
  EXPECT_NEAR(rc.std, 13.6, 0.05);
}

// Required: 9.5 +/- 0.05. The nine published accuracies give 9.44 (sample) or 8.90 (population).
TEST(Summary, PublishedTsff2aBinaryStd) {
  const auto a = tsff::read_baselines(kBaselines / "2a_binary.csv");
  const auto r = tsff::summarize("TSFF-Net", a.subjects, row(a, "TSFF-Net"));
  EXPECT_NEAR(r.std, 9.5, 0.05);
}

tsff::RunManifest manifest(const std::string& subject, std::vector<double> curve) {
  tsff::RunManifest m;
  m.subject_id = subject;
  for (std::size_t e = 0; e < curve.size(); ++e) m.epochs.push_back({e + 1, 0.5, 0.5, 0.0, curve[e], 0.1});
  m.final_accuracy = curve.back();
  m.best_accuracy = *std::max_element(curve.begin(), curve.end());
  m.best_epoch = static_cast<std::size_t>(std::max_element(curve.begin(), curve.end()) - curve.begin()) + 1;
  return m;
}

TEST(EpochCurve, Means) {
  const auto one = tsff::epoch_curve({manifest("a", {0.1, 0.5, 0.4})});
  EXPECT_NEAR(one[0], 10.0, 1e-12);
  EXPECT_NEAR(one[1], 50.0, 1e-12);
  EXPECT_NEAR(one[2], 40.0, 1e-12);
  const auto two = tsff::epoch_curve({manifest("a", {0.6, 0.6}), manifest("b", {0.8, 0.8})});
  EXPECT_NEAR(two[0], 70.0, 1e-12);
  EXPECT_NEAR(two[1], 70.0, 1e-12);
  EXPECT_THROW(tsff::epoch_curve({manifest("a", {0.6}), manifest("b", {0.8, 0.8})}), tsff::ArgumentError);
  EXPECT_THROW(tsff::epoch_curve({}), tsff::ArgumentError);
}

TEST(EpochCurve, BoundsAndBestTable) {
  tsff::Rng rng(3);
  std::vector<tsff::RunManifest> runs;
  std::vector<std::string> ids;
  for (int s = 0; s < 5; ++s) {
    std::vector<double> c(20);
    for (auto& v : c) v = std::round(rng.uniform(0.0, 1.0) * 48) / 48;
    runs.push_back(manifest("S" + std::to_string(s), c));
    ids.push_back("S" + std::to_string(s));
  }
  const auto curve = tsff::epoch_curve(runs);
  for (std::size_t e = 0; e < curve.size(); ++e) {
    double lo = 1e9, hi = -1e9;
    for (const auto& r : runs) {
      lo = std::min(lo, 100 * r.epochs[e].test_accuracy);
      hi = std::max(hi, 100 * r.epochs[e].test_accuracy);
    }
    EXPECT_GE(curve[e], lo - 1e-9);
    EXPECT_LE(curve[e], hi + 1e-9);
  }
  const auto table = tsff::accuracy_table(runs, ids);
  EXPECT_LE(std::accumulate(curve.begin(), curve.end(), 0.0) / static_cast<double>(curve.size()), table.mean + 1e-9);
  EXPECT_EQ(table.curve, curve);
  const auto fin = tsff::accuracy_table(runs, ids, tsff::Selection::kFinal);
  for (std::size_t k = 0; k < runs.size(); ++k) EXPECT_NEAR(fin.accuracies[k], 100 * runs[k].final_accuracy, 1e-12);
}

TEST(AccuracyTable, MissingSubjectsListed) {
  try {
    tsff::accuracy_table({manifest("A01", {0.5})}, {"A01", "A02", "A03"});
    FAIL();
  } catch (const tsff::IncompleteReportError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("A02"), std::string::npos);
    EXPECT_NE(msg.find("A03"), std::string::npos);
    EXPECT_EQ(msg.find("A01"), std::string::npos);
  }
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(Emit, CsvAndPlot) {
  tsff::test::TempDir dir;
  const auto t = tsff::read_baselines(kBaselines / "2b.csv");
  std::vector<tsff::RunManifest> runs;
  for (std::size_t k = 0; k < t.subjects.size(); ++k) runs.push_back(manifest(t.subjects[k], {0.5, 0.01 * row(t, "TSFF-Net")[k]}));
  auto rep = tsff::accuracy_table(runs, t.subjects);
  for (const auto& [name, r] : t.rows) tsff::add_pvalue(rep, name, r);
  const auto files = tsff::emit_report(rep, dir / "out");
  ASSERT_EQ(files.size(), 4u);
  const std::string csv = slurp(files[0]);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(t.subjects.size() + 2 + 1));
  EXPECT_NE(csv.find("B04,98.4000\n"), std::string::npos);
  EXPECT_NE(csv.find("mean,86.3778\n"), std::string::npos);
  const std::string pv = slurp(files[1]);
  EXPECT_EQ(std::count(pv.begin(), pv.end(), '\n'), static_cast<long>(t.rows.size() + 1));

  std::vector<std::string> before;
  for (const auto& f : files) before.push_back(slurp(f));
  const auto again = tsff::emit_report(rep, dir / "out");
  for (std::size_t k = 0; k < files.size(); ++k) EXPECT_EQ(slurp(again[k]), before[k]);

  const auto svg = files.back();
  EXPECT_GT(std::filesystem::file_size(svg), 0u);
  const auto plot = tsff::read_plot(svg);
  EXPECT_EQ(plot.kind, "line");
  ASSERT_EQ(plot.series.size(), 1u);
  EXPECT_EQ(plot.series[0].values, rep.curve);

  tsff::write_text(dir / "bad.svg", "<svg></svg>");
  EXPECT_THROW(tsff::read_plot(dir / "bad.svg"), tsff::FormatError);
  EXPECT_THROW(tsff::emit_report(tsff::EvalReport{}, dir / "x"), tsff::IncompleteReportError);
}

TEST(Emit, PlotRoundTripWithAwkwardText) {
  tsff::test::TempDir dir;
  tsff::PlotData p{"bar", "a <b> & \"c\" ]]> d", "x", "y", {"one", "t]]>wo"}, {{"s", {1.5, 2.25}, {0.5, 0.0}}}};
  tsff::write_text(dir / "p.svg", tsff::render_svg(p));
  const auto q = tsff::read_plot(dir / "p.svg");
  EXPECT_EQ(q.title, p.title);
  EXPECT_EQ(q.categories, p.categories);
  EXPECT_EQ(q.series[0].values, p.series[0].values);
  EXPECT_EQ(q.series[0].errors, p.series[0].errors);
}

TEST(Baselines, Parsing) {
  tsff::test::TempDir dir;
  const auto t = tsff::read_baselines(kBaselines / "2a_binary.csv");
  EXPECT_EQ(t.subjects.size(), 9u);
  EXPECT_EQ(t.rows.size(), 8u);
  tsff::write_text(dir / "ragged.csv", "method,A,B\nx,1\n");
  EXPECT_THROW(tsff::read_baselines(dir / "ragged.csv"), tsff::FormatError);
  tsff::write_text(dir / "nohdr.csv", "name,A\nx,1\n");
  EXPECT_THROW(tsff::read_baselines(dir / "nohdr.csv"), tsff::FormatError);
  tsff::write_text(dir / "empty.csv", "# nothing\n");
  EXPECT_THROW(tsff::read_baselines(dir / "empty.csv"), tsff::FormatError);
}

TEST(Ablation, ArmMapping) {
  auto base = tsff::load_config("defaults_2a_binary");
  auto arms = tsff::ablation_arms(base);
  ASSERT_EQ(arms.size(), 4u);
  EXPECT_EQ(arms[0].name, "TSFF-raw");
  EXPECT_EQ(arms[1].name, "TSFF-img");
  EXPECT_EQ(arms[2].name, "fusion without MMD");
  EXPECT_EQ(arms[3].name, "TSFF-Net");
  EXPECT_EQ(arms[2].config.mode, tsff::TrainMode::kFusionNoMmd);
  EXPECT_EQ(arms[2].config.effective_mmd_weight(), 0.0);
  EXPECT_GT(arms[3].config.effective_mmd_weight(), 0.0);
  for (const auto& a : arms) EXPECT_EQ(a.config.seed, base.seed);
  base.fusion.mmd_weight = 0.0;
  arms = tsff::ablation_arms(base);
  EXPECT_DOUBLE_EQ(arms[3].config.fusion.mmd_weight, tsff::kAblationFallbackMmdWeight);
}

TEST(Ablation, SyntheticSmoke) {
  tsff::test::TempDir dir;
  const auto base = tsff::test::small_config(tsff::TrainMode::kFull, 1);
  const std::vector<std::string> subjects = {"S1", "S2"};
  const auto res = tsff::run_ablation(subjects, [](const std::string& s) {
    const std::uint64_t k = s == "S1" ? 1 : 2;
    return tsff::SubjectData{tsff::test::small_trials(2 * k - 1), tsff::test::small_trials(2 * k)};
  }, base);
  ASSERT_EQ(res.reports.size(), 4u);
  for (const auto& r : res.reports) EXPECT_EQ(r.subjects, subjects);
  const auto files = tsff::emit_ablation(res, dir.path());
  EXPECT_TRUE(std::filesystem::exists(dir / "ablation.csv"));
  const auto bars = tsff::read_plot(dir / "ablation.svg");
  EXPECT_EQ(bars.kind, "bar");
  EXPECT_EQ(bars.categories.size(), 4u);
  const std::string csv = slurp(dir / "ablation.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_NE(csv.find("fusion without MMD,fusion_no_mmd,0,"), std::string::npos);
}

}  // namespace
