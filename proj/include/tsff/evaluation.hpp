#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tsff/config.hpp"
#include "tsff/training.hpp"

namespace tsff {

// ---------------------------------------------------------------------------
// Descriptive statistics

inline double mean_of(std::span<const double> v) {
  if (v.empty()) throw ArgumentError("mean_of: empty input");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// N - 1 divisor; 0 for a single value.
inline double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank test

enum class WilcoxonMethod {
  kExact,   // permutation distribution of W+ over all 2^n sign flips
  kNormal,  // normal approximation, tie-corrected, no continuity correction
  kAuto,    // exact unless zero differences were dropped, then normal
};

inline std::string to_string(WilcoxonMethod m) {
  switch (m) {
    case WilcoxonMethod::kExact: return "exact";
    case WilcoxonMethod::kNormal: return "normal";
    case WilcoxonMethod::kAuto: return "auto";
  }
  return "?";
}

inline WilcoxonMethod wilcoxon_method_from_string(const std::string& s) {
  if (s == "exact") return WilcoxonMethod::kExact;
  if (s == "normal") return WilcoxonMethod::kNormal;
  if (s == "auto") return WilcoxonMethod::kAuto;
  throw ArgumentError("unknown Wilcoxon method '" + s + "' (exact|normal|auto)");
}

struct WilcoxonResult {
  double p = 1.0;
  double w_plus = 0.0;       // sum of ranks of positive differences
  std::size_t n = 0;         // nonzero differences
  std::size_t zeros = 0;     // dropped zero differences
  bool ties = false;
  bool degenerate = false;   // every difference was zero
  WilcoxonMethod method = WilcoxonMethod::kExact;  // method actually used
};

struct SignedRanks {
  std::vector<double> ranks;  // midranks of |d| for nonzero d
  std::vector<bool> positive;
  std::size_t zeros = 0;
  bool ties = false;
};

// Differences are compared on a 1e-9 grid so values like 86.8 - 80.6 and
// 2.1 tie as printed rather than by binary rounding accident.
inline SignedRanks signed_ranks(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("wilcoxon: paired samples differ in length");
  if (a.empty()) throw ArgumentError("wilcoxon: empty samples");
  std::vector<std::pair<long long, bool>> d;
  SignedRanks out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    if (!std::isfinite(diff)) throw ArgumentError("wilcoxon: non-finite value");
    const long long key = std::llround(std::abs(diff) * 1e9);
    if (key == 0) {
      ++out.zeros;
      continue;
    }
    d.emplace_back(key, diff > 0.0);
  }
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return d[x].first < d[y].first; });
  out.ranks.assign(d.size(), 0.0);
  out.positive.assign(d.size(), false);
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && d[order[j + 1]].first == d[order[i]].first) ++j;
    if (j > i) out.ties = true;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) out.ranks[order[k]] = midrank;
    i = j + 1;
  }
  for (std::size_t k = 0; k < d.size(); ++k) out.positive[k] = d[k].second;
  return out;
}

// Two-sided p-value for the paired samples a, b.
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                           WilcoxonMethod method = WilcoxonMethod::kExact) {
  const SignedRanks sr = signed_ranks(a, b);
  WilcoxonResult r;
  r.n = sr.ranks.size();
  r.zeros = sr.zeros;
  r.ties = sr.ties;
  for (std::size_t k = 0; k < r.n; ++k)
    if (sr.positive[k]) r.w_plus += sr.ranks[k];
  if (method == WilcoxonMethod::kAuto) method = sr.zeros > 0 ? WilcoxonMethod::kNormal : WilcoxonMethod::kExact;
  r.method = method;
  if (r.n == 0) {
    r.degenerate = true;
    r.p = 1.0;
    return r;
  }
  const double n = static_cast<double>(r.n);
  if (method == WilcoxonMethod::kNormal) {
    std::map<double, std::size_t> groups;
    for (double rk : sr.ranks) ++groups[rk];
    double tie_term = 0.0;
    for (const auto& [rk, t] : groups) tie_term += std::pow(static_cast<double>(t), 3) - static_cast<double>(t);
    const double mu = n * (n + 1.0) / 4.0;
    const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if (!(var > 0.0)) {
      r.degenerate = true;
      r.p = 1.0;
      return r;
    }
    const double z = (r.w_plus - mu) / std::sqrt(var);
    r.p = std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
    return r;
  }
  if (r.n > 60) throw ArgumentError("wilcoxon: exact distribution limited to 60 nonzero pairs");
  // Doubled midranks are integers; count sign assignments per rank sum.
  std::vector<std::size_t> r2(r.n);
  std::size_t total = 0;
  for (std::size_t k = 0; k < r.n; ++k) total += (r2[k] = static_cast<std::size_t>(std::llround(2.0 * sr.ranks[k])));
  std::vector<double> count(total + 1, 0.0);
  count[0] = 1.0;
  std::size_t reach = 0;
  for (std::size_t rk : r2) {
    for (std::size_t s = reach + 1; s-- > 0;) count[s + rk] += count[s];
    reach += rk;
  }
  const auto obs = static_cast<std::size_t>(std::llround(2.0 * r.w_plus));
  const double all = std::ldexp(1.0, static_cast<int>(r.n));
  double lo = 0.0, hi = 0.0;
  for (std::size_t s = 0; s <= total; ++s) {
    if (s <= obs) lo += count[s];
    if (s >= obs) hi += count[s];
  }
  r.p = std::min(1.0, 2.0 * std::min(lo, hi) / all);
  return r;
}

// ---------------------------------------------------------------------------
// Reports

enum class Selection { kBest, kFinal };

inline std::string to_string(Selection s) { return s == Selection::kBest ? "best_epoch" : "final_epoch"; }

struct PValue {
  std::string reference;
  WilcoxonResult test;
};

struct EvalReport {
  std::string label;
  Selection selection = Selection::kBest;
  std::vector<std::string> subjects;
  std::vector<double> accuracies;  // percent
  double mean = 0.0, std = 0.0;    // percent; sample std
  std::vector<double> curve;       // per-epoch mean accuracy, percent
  std::vector<PValue> pvalues;
};

inline EvalReport summarize(std::string label, std::vector<std::string> subjects, std::vector<double> accuracies) {
  if (subjects.size() != accuracies.size()) throw ArgumentError("summarize: subject/accuracy count mismatch");
  for (double a : accuracies)
    if (!(a >= 0.0 && a <= 100.0)) throw ArgumentError("summarize: accuracies must be percentages in [0, 100]");
  EvalReport r;
  r.label = std::move(label);
  r.subjects = std::move(subjects);
  r.accuracies = std::move(accuracies);
  r.mean = mean_of(r.accuracies);
  r.std = sample_std(r.accuracies);
  return r;
}

// Per-epoch mean test accuracy across subjects (percent).
inline std::vector<double> epoch_curve(const std::vector<RunManifest>& runs) {
  if (runs.empty()) throw ArgumentError("epoch_curve: no runs");
  const std::size_t E = runs.front().epochs.size();
  std::vector<double> out(E, 0.0);
  for (const auto& r : runs) {
    if (r.epochs.size() != E) throw ArgumentError("epoch_curve: runs differ in epoch count");
    for (std::size_t e = 0; e < E; ++e) out[e] += 100.0 * r.epochs[e].test_accuracy;
  }
  for (auto& v : out) v /= static_cast<double>(runs.size());
  return out;
}

// One row per expected subject; missing runs are reported together.
inline EvalReport accuracy_table(const std::vector<RunManifest>& runs, const std::vector<std::string>& expected,
                                 Selection sel = Selection::kBest, std::string label = "TSFF-Net") {
  std::map<std::string, const RunManifest*> by_subject;
  for (const auto& r : runs) by_subject[r.subject_id] = &r;
  std::vector<std::string> missing;
  for (const auto& s : expected)
    if (!by_subject.count(s)) missing.push_back(s);
  if (!missing.empty()) {
    std::string msg = "accuracy_table: missing subjects:";
    for (const auto& s : missing) msg += " " + s;
    throw IncompleteReportError(msg);
  }
  std::vector<double> acc;
  std::vector<RunManifest> ordered;
  for (const auto& s : expected) {
    const auto* r = by_subject.at(s);
    acc.push_back(100.0 * (sel == Selection::kBest ? r->best_accuracy : r->final_accuracy));
    ordered.push_back(*r);
  }
  EvalReport rep = summarize(std::move(label), expected, std::move(acc));
  rep.selection = sel;
  rep.curve = epoch_curve(ordered);
  return rep;
}

// Adds a p-value against a reference row (same subject order).
inline void add_pvalue(EvalReport& rep, const std::string& reference, std::span<const double> reference_acc,
                       WilcoxonMethod method = WilcoxonMethod::kAuto) {
  rep.pvalues.push_back({reference, wilcoxon_signed_rank(rep.accuracies, reference_acc, method)});
}

// Literal per-subject rows quoted from published tables (CSV: method,<subjects...>).
struct BaselineTable {
  std::vector<std::string> subjects;
  std::vector<std::pair<std::string, std::vector<double>>> rows;
};

inline BaselineTable read_baselines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  BaselineTable t;
  std::string line;
  const auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto cells = split(line);
    if (header) {
      if (cells.size() < 2 || cells[0] != "method") throw FormatError(path.string() + ": expected 'method,...' header");
      t.subjects.assign(cells.begin() + 1, cells.end());
      header = false;
      continue;
    }
    if (cells.size() != t.subjects.size() + 1) throw FormatError(path.string() + ": ragged row '" + cells[0] + "'");
    std::vector<double> v;
    for (std::size_t k = 1; k < cells.size(); ++k) v.push_back(std::stod(cells[k]));
    t.rows.emplace_back(cells[0], std::move(v));
  }
  if (header) throw FormatError(path.string() + ": empty baseline file");
  return t;
}

// ---------------------------------------------------------------------------
// Ablation

struct AblationArm {
  std::string name;
  TsffConfig config;
};

inline constexpr double kAblationFallbackMmdWeight = 0.1;

// The four arms share every setting but the mode. A preset with lambda == 0
// would make "full" identical to "fusion without MMD", so the full arm then
// falls back to a nonzero lambda.
inline std::vector<AblationArm> ablation_arms(const TsffConfig& base) {
  std::vector<AblationArm> arms;
  const auto arm = [&](const char* name, TrainMode mode, double mmd) {
    TsffConfig c = base;
    c.mode = mode;
    c.fusion.mmd_weight = mmd;
    arms.push_back({name, c});
  };
  const double full_mmd = base.fusion.mmd_weight > 0.0 ? base.fusion.mmd_weight : kAblationFallbackMmdWeight;
  arm("TSFF-raw", TrainMode::kRawOnly, 0.0);
  arm("TSFF-img", TrainMode::kImgOnly, 0.0);
  arm("fusion without MMD", TrainMode::kFusionNoMmd, 0.0);
  arm("TSFF-Net", TrainMode::kFull, full_mmd);
  return arms;
}

struct SubjectData {
  TrialSet train, test;
};

struct AblationResult {
  std::vector<AblationArm> arms;
  std::vector<EvalReport> reports;
  std::vector<std::vector<RunManifest>> runs;  // [arm][subject]
};

inline AblationResult run_ablation(const std::vector<std::string>& subjects,
                                   const std::function<SubjectData(const std::string&)>& load,
                                   const TsffConfig& base, const TrainOptions& opt = {},
                                   Selection sel = Selection::kBest) {
  AblationResult res;
  res.arms = ablation_arms(base);
  std::map<std::string, SubjectData> data;
  for (const auto& s : subjects) data.emplace(s, load(s));
  for (const auto& arm : res.arms) {
    std::vector<RunManifest> runs;
    for (const auto& s : subjects) {
      TsffConfig c = arm.config;
      c.subject_id = s;
      runs.push_back(train(data.at(s).train, data.at(s).test, c, opt).manifest);
    }
    res.reports.push_back(accuracy_table(runs, subjects, sel, arm.name));
    res.runs.push_back(std::move(runs));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Emission: CSV tables and self-describing SVG plots

inline std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

// subject,accuracy_pct rows, then mean and std rows.
inline std::string report_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "subject,accuracy_pct\n";
  for (std::size_t i = 0; i < r.subjects.size(); ++i) os << csv_escape(r.subjects[i]) << ',' << fmt(r.accuracies[i]) << '\n';
  os << "mean," << fmt(r.mean) << '\n';
  os << "std," << fmt(r.std) << '\n';
  return os.str();
}

inline std::string pvalues_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "reference,p_value,method,n_nonzero,zeros,w_plus,degenerate\n";
  for (const auto& p : r.pvalues)
    os << csv_escape(p.reference) << ',' << std::setprecision(6) << p.test.p << ',' << to_string(p.test.method) << ','
       << p.test.n << ',' << p.test.zeros << ',' << fmt(p.test.w_plus, 1) << ',' << (p.test.degenerate ? 1 : 0) << '\n';
  return os.str();
}

inline std::string curve_csv(const std::vector<double>& curve) {
  std::ostringstream os;
  os << "epoch,mean_accuracy_pct\n";
  for (std::size_t e = 0; e < curve.size(); ++e) os << e + 1 << ',' << fmt(curve[e]) << '\n';
  return os.str();
}

struct PlotSeries {
  std::string name;
  std::vector<double> values;
  std::vector<double> errors;  // optional error bars (bar charts)
};

struct PlotData {
  std::string kind;  // "line" or "bar"
  std::string title, x_label, y_label;
  std::vector<std::string> categories;  // bar labels
  std::vector<PlotSeries> series;
};

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// The plotted numbers are embedded as JSON in <metadata>, which is what
// read_plot parses; the drawing itself is for people.
inline std::string render_svg(const PlotData& p) {
  const double W = 640, H = 400, L = 60, R = 20, Tm = 40, B = 50;
  const double pw = W - L - R, ph = H - Tm - B;
  double ymax = 0.0;
  std::size_t xmax = 1;
  for (const auto& s : p.series) {
    for (std::size_t k = 0; k < s.values.size(); ++k)
      ymax = std::max(ymax, s.values[k] + (k < s.errors.size() ? s.errors[k] : 0.0));
    xmax = std::max(xmax, s.values.size());
  }
  ymax = ymax > 0.0 ? ymax * 1.05 : 1.0;
  const auto X = [&](double i, double n) { return L + pw * (n <= 1 ? 0.5 : i / (n - 1)); };
  const auto Y = [&](double v) { return Tm + ph * (1.0 - v / ymax); };
  static const char* colors[] = {"#440154", "#31688e", "#35b779", "#fde725", "#e76f51", "#264653"};

  json meta = {{"kind", p.kind}, {"title", p.title}, {"x_label", p.x_label}, {"y_label", p.y_label},
               {"categories", p.categories}, {"series", json::array()}};
  for (const auto& s : p.series) meta["series"].push_back({{"name", s.name}, {"values", s.values}, {"errors", s.errors}});

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\">\n";
  std::string m = meta.dump();
  for (std::size_t pos = 0; (pos = m.find("]]>", pos)) != std::string::npos; pos += 15) m.replace(pos, 3, "]]]]><![CDATA[>");
  os << "<metadata><![CDATA[" << m << "]]></metadata>\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << xml_escape(p.title) << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << Tm + ph << "\" x2=\"" << L + pw << "\" y2=\"" << Tm + ph
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << Tm + ph << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = ymax * t / 4.0;
    os << "<text x=\"" << L - 6 << "\" y=\"" << Y(v) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(v, 1)
       << "</text>\n";
  }
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"12\">" << xml_escape(p.x_label)
     << "</text>\n";
  os << "<text x=\"14\" y=\"" << Tm + ph / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
     << Tm + ph / 2 << ")\">" << xml_escape(p.y_label) << "</text>\n";
  if (p.kind == "bar") {
    const std::size_t nc = p.categories.size();
    const std::size_t ns = std::max<std::size_t>(1, p.series.size());
    const double slot = pw / static_cast<double>(std::max<std::size_t>(1, nc));
    const double bw = 0.8 * slot / static_cast<double>(ns);
    for (std::size_t si = 0; si < p.series.size(); ++si) {
      const auto& s = p.series[si];
      for (std::size_t c = 0; c < s.values.size(); ++c) {
        const double x = L + slot * static_cast<double>(c) + 0.1 * slot + bw * static_cast<double>(si);
        os << "<rect x=\"" << x << "\" y=\"" << Y(s.values[c]) << "\" width=\"" << bw << "\" height=\""
           << Tm + ph - Y(s.values[c]) << "\" fill=\"" << colors[si % 6] << "\"/>\n";
        if (c < s.errors.size()) {
          const double cx = x + bw / 2;
          os << "<line x1=\"" << cx << "\" y1=\"" << Y(s.values[c] + s.errors[c]) << "\" x2=\"" << cx << "\" y2=\""
             << Y(std::max(0.0, s.values[c] - s.errors[c])) << "\" stroke=\"black\"/>\n";
        }
      }
    }
    for (std::size_t c = 0; c < nc; ++c)
      os << "<text x=\"" << L + slot * (static_cast<double>(c) + 0.5) << "\" y=\"" << Tm + ph + 16
         << "\" text-anchor=\"middle\" font-size=\"11\">" << xml_escape(p.categories[c]) << "</text>\n";
  } else {
    for (std::size_t si = 0; si < p.series.size(); ++si) {
      const auto& s = p.series[si];
      os << "<polyline fill=\"none\" stroke=\"" << colors[si % 6] << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t k = 0; k < s.values.size(); ++k)
        os << X(static_cast<double>(k), static_cast<double>(xmax)) << ',' << Y(s.values[k]) << ' ';
      os << "\"/>\n";
      os << "<text x=\"" << L + pw - 4 << "\" y=\"" << Tm + 14 + 14 * static_cast<double>(si)
         << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << colors[si % 6] << "\">" << xml_escape(s.name) << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

inline PlotData read_plot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string open = "<metadata><![CDATA[", close = "]]></metadata>";
  const auto a = text.find(open);
  const auto b = text.find(close, a == std::string::npos ? 0 : a);
  if (text.rfind("<svg", 0) != 0 || a == std::string::npos || b == std::string::npos)
    throw FormatError(path.string() + ": not a plot written by this library");
  std::string m = text.substr(a + open.size(), b - a - open.size());
  for (std::size_t pos = 0; (pos = m.find("]]]]><![CDATA[>", pos)) != std::string::npos; pos += 3) m.replace(pos, 15, "]]>");
  try {
    const json j = json::parse(m);
    PlotData p;
    p.kind = j.at("kind").get<std::string>();
    p.title = j.at("title").get<std::string>();
    p.x_label = j.at("x_label").get<std::string>();
    p.y_label = j.at("y_label").get<std::string>();
    p.categories = j.at("categories").get<std::vector<std::string>>();
    for (const auto& s : j.at("series"))
      p.series.push_back({s.at("name").get<std::string>(), s.at("values").get<std::vector<double>>(),
                          s.at("errors").get<std::vector<double>>()});
    return p;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

struct ReportFormats {
  bool csv = true;
  bool plot = true;
};

inline std::string file_stem(const std::string& label) {
  std::string s;
  for (char c : label) s += std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::tolower(c)) : '_';
  return s;
}

// Writes <stem>.csv, <stem>_pvalues.csv, <stem>_curve.csv and <stem>_curve.svg;
// returns the paths written.
inline std::vector<std::filesystem::path> emit_report(const EvalReport& r, const std::filesystem::path& dir,
                                                      ReportFormats formats = {}) {
  if (r.subjects.empty()) throw IncompleteReportError("emit_report: report has no subjects");
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> out;
  const std::string stem = file_stem(r.label);
  if (formats.csv) {
    out.push_back(dir / (stem + ".csv"));
    write_text(out.back(), report_csv(r));
    if (!r.pvalues.empty()) {
      out.push_back(dir / (stem + "_pvalues.csv"));
      write_text(out.back(), pvalues_csv(r));
    }
    if (!r.curve.empty()) {
      out.push_back(dir / (stem + "_curve.csv"));
      write_text(out.back(), curve_csv(r.curve));
    }
  }
  if (formats.plot && !r.curve.empty()) {
    PlotData p{"line", r.label + " mean test accuracy per epoch", "epoch", "accuracy (%)", {}, {{r.label, r.curve, {}}}};
    out.push_back(dir / (stem + "_curve.svg"));
    write_text(out.back(), render_svg(p));
  }
  return out;
}

// Grouped ablation summary: one row per arm with mean and std, plus a bar chart.
inline std::vector<std::filesystem::path> emit_ablation(const AblationResult& res, const std::filesystem::path& dir,
                                                        ReportFormats formats = {}) {
  std::vector<std::filesystem::path> out;
  for (const auto& r : res.reports)
    for (auto& p : emit_report(r, dir, formats)) out.push_back(std::move(p));
  std::ostringstream os;
  os << "arm,mode,mmd_weight,mean_pct,std_pct\n";
  PlotData p{"bar", "Ablation: mean accuracy (error bars: std)", "arm", "accuracy (%)", {}, {{"mean", {}, {}}}};
  for (std::size_t k = 0; k < res.reports.size(); ++k) {
    const auto& c = res.arms[k].config;
    os << csv_escape(res.arms[k].name) << ',' << to_string(c.mode) << ',' << c.effective_mmd_weight() << ','
       << fmt(res.reports[k].mean) << ',' << fmt(res.reports[k].std) << '\n';
    p.categories.push_back(res.arms[k].name);
    p.series[0].values.push_back(res.reports[k].mean);
    p.series[0].errors.push_back(res.reports[k].std);
  }
  if (formats.csv) {
    out.push_back(dir / "ablation.csv");
    write_text(out.back(), os.str());
  }
  if (formats.plot) {
    out.push_back(dir / "ablation.svg");
    write_text(out.back(), render_svg(p));
  }
  return out;
}

}  // namespace tsff
