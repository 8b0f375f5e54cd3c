#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "spconf/harness.hpp"

namespace spconf {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c == '\n' ? ' ' : c;
  }
  return q + "\"";
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// One histogram panel per estimator, stacked vertically.
std::string bias_histograms_svg(const ExperimentReport& report) {
  constexpr int kWidth = 520;
  constexpr int kPanel = 170;
  constexpr int kBins = 30;
  constexpr int kLeft = 50;
  constexpr int kPlotW = 450;
  constexpr int kPlotH = 120;
  const int height = kPanel * static_cast<int>(std::max<std::size_t>(1, report.estimators.size())) + 20;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  int panel = 0;
  for (const auto& id : report.estimators) {
    std::vector<double> bias;
    for (const auto& r : report.rows) {
      if (r.estimator == id) bias.push_back(r.bias);
    }
    const int top = 20 + panel * kPanel;
    s << "<text x=\"" << kLeft << "\" y=\"" << top << "\">" << xml_escape(id) << " bias (n=" << bias.size()
      << ")</text>\n";
    if (!bias.empty()) {
      double lo = *std::min_element(bias.begin(), bias.end());
      double hi = *std::max_element(bias.begin(), bias.end());
      lo = std::min(lo, 0.0);
      hi = std::max(hi, 0.0);
      if (hi - lo < 1e-12) hi = lo + 1.0;
      std::vector<int> counts(kBins, 0);
      for (double b : bias) {
        auto k = static_cast<int>((b - lo) / (hi - lo) * kBins);
        counts[static_cast<std::size_t>(std::clamp(k, 0, kBins - 1))]++;
      }
      const int peak = std::max(1, *std::max_element(counts.begin(), counts.end()));
      const double bar_w = static_cast<double>(kPlotW) / kBins;
      const int base = top + 10 + kPlotH;
      for (int k = 0; k < kBins; ++k) {
        const double h = static_cast<double>(kPlotH) * counts[static_cast<std::size_t>(k)] / peak;
        s << "<rect x=\"" << fmt(kLeft + k * bar_w, 6) << "\" y=\"" << fmt(base - h, 6) << "\" width=\""
          << fmt(bar_w - 1, 6) << "\" height=\"" << fmt(h, 6) << "\" fill=\"#4a7ab5\"/>\n";
      }
      const double zero_x = kLeft + (0.0 - lo) / (hi - lo) * kPlotW;
      s << "<line x1=\"" << fmt(zero_x, 6) << "\" y1=\"" << top + 10 << "\" x2=\"" << fmt(zero_x, 6) << "\" y2=\""
        << base << "\" stroke=\"#c0392b\" stroke-dasharray=\"4 3\"/>\n";
      s << "<line x1=\"" << kLeft << "\" y1=\"" << base << "\" x2=\"" << kLeft + kPlotW << "\" y2=\"" << base
        << "\" stroke=\"black\"/>\n";
      s << "<text x=\"" << kLeft << "\" y=\"" << base + 14 << "\">" << fmt(lo) << "</text>\n";
      s << "<text x=\"" << kLeft + kPlotW << "\" y=\"" << base + 14 << "\" text-anchor=\"end\">" << fmt(hi)
        << "</text>\n";
    }
    ++panel;
  }
  s << "</svg>\n";
  return s.str();
}

std::string eigen_scatter_svg(const ExperimentReport& report) {
  constexpr int kSize = 420;
  constexpr int kPad = 50;
  constexpr int kPlot = kSize - 2 * kPad;
  double lo = 0.0;
  double hi = 0.0;
  for (const auto& e : report.eigen) {
    lo = std::min({lo, e.exact_bias, e.predicted_bias});
    hi = std::max({hi, e.exact_bias, e.predicted_bias});
  }
  if (hi - lo < 1e-12) hi = lo + 1.0;
  auto px = [&](double v) { return kPad + (v - lo) / (hi - lo) * kPlot; };
  auto py = [&](double v) { return kPad + kPlot - (v - lo) / (hi - lo) * kPlot; };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\"" << kSize
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<rect x=\"" << kPad << "\" y=\"" << kPad << "\" width=\"" << kPlot << "\" height=\"" << kPlot
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << fmt(px(lo), 6) << "\" y1=\"" << fmt(py(lo), 6) << "\" x2=\"" << fmt(px(hi), 6) << "\" y2=\""
    << fmt(py(hi), 6) << "\" stroke=\"#c0392b\"/>\n";
  for (const auto& e : report.eigen) {
    s << "<circle cx=\"" << fmt(px(e.exact_bias), 6) << "\" cy=\"" << fmt(py(e.predicted_bias), 6)
      << "\" r=\"2.5\" fill=\"#4a7ab5\" fill-opacity=\"0.7\"/>\n";
  }
  s << "<text x=\"" << kSize / 2 << "\" y=\"" << kSize - 15 << "\" text-anchor=\"middle\">exact bias</text>\n";
  s << "<text x=\"15\" y=\"" << kSize / 2 << "\" transform=\"rotate(-90 15 " << kSize / 2
    << ")\" text-anchor=\"middle\">predicted bias</text>\n";
  s << "<text x=\"" << kPad << "\" y=\"" << kPad + kPlot + 14 << "\">" << fmt(lo) << "</text>\n";
  s << "<text x=\"" << kPad + kPlot << "\" y=\"" << kPad + kPlot + 14 << "\" text-anchor=\"end\">" << fmt(hi)
    << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::set<ReportFormat> parse_formats(std::string_view list) {
  std::set<ReportFormat> out;
  std::string item;
  std::stringstream ss{std::string(list)};
  while (std::getline(ss, item, ',')) {
    if (item == "csv") {
      out.insert(ReportFormat::Csv);
    } else if (item == "json") {
      out.insert(ReportFormat::Json);
    } else if (item == "svg") {
      out.insert(ReportFormat::Svg);
    } else if (!item.empty()) {
      throw ConfigError("unknown report format: " + item);
    }
  }
  if (out.empty()) throw ConfigError("no report format selected");
  return out;
}

std::string render_rep_csv(const std::vector<RepRow>& rows) {
  std::ostringstream s;
  s << "scenario,rep,estimator,beta_hat,bias,ci_lo,ci_hi,covered\n";
  for (const auto& r : rows) {
    s << r.scenario << ',' << r.rep << ',' << r.estimator << ',' << format_double(r.beta_hat) << ','
      << format_double(r.bias) << ',' << format_double(r.ci_lo) << ',' << format_double(r.ci_hi) << ','
      << (r.covered ? 1 : 0) << '\n';
  }
  return s.str();
}

std::string render_summary_csv(const std::vector<SummaryRow>& summary) {
  std::ostringstream s;
  s << "estimator,mean_bias,sd_bias,coverage\n";
  for (const auto& r : summary) {
    s << r.estimator << ',' << format_double(r.mean_bias) << ',' << format_double(r.sd_bias) << ','
      << format_double(r.coverage) << '\n';
  }
  return s.str();
}

std::vector<RepRow> read_rep_rows(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw std::runtime_error("cannot read " + csv.string());
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = split_csv_line(line);
  const std::vector<std::string> expected{"scenario", "rep", "estimator", "beta_hat",
                                          "bias",     "ci_lo", "ci_hi",   "covered"};
  if (header != expected) throw std::runtime_error("unexpected per-rep CSV header in " + csv.string());
  std::vector<RepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != expected.size()) throw std::runtime_error("malformed per-rep CSV line: " + line);
    RepRow r;
    r.scenario = f[0];
    r.rep = std::stoi(f[1]);
    r.estimator = f[2];
    r.beta_hat = std::stod(f[3]);
    r.bias = std::stod(f[4]);
    r.ci_lo = std::stod(f[5]);
    r.ci_hi = std::stod(f[6]);
    r.covered = f[7] == "1";
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ErrorRow> read_error_rows(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw std::runtime_error("cannot read " + csv.string());
  std::string line;
  std::getline(in, line);
  std::vector<ErrorRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 5) throw std::runtime_error("malformed error CSV line: " + line);
    rows.push_back({f[0], 0, std::stoi(f[1]), f[2], f[3], f[4]});
  }
  return rows;
}

void emit_report(const ExperimentReport& report, const fs::path& out_dir, const std::set<ReportFormat>& formats) {
  fs::create_directories(out_dir);
  const bool eigen = !report.eigen.empty();
  if (formats.contains(ReportFormat::Csv)) {
    write_file(out_dir / "per_rep.csv", render_rep_csv(report.rows));
    write_file(out_dir / "summary.csv", render_summary_csv(report.summary));
    std::ostringstream err;
    err << "scenario,rep,estimator,kind,message\n";
    for (const auto& e : report.errors) {
      err << e.scenario << ',' << e.rep << ',' << e.estimator << ',' << e.kind << ',' << csv_field(e.message) << '\n';
    }
    write_file(out_dir / "errors.csv", err.str());
    std::ostringstream diag;
    diag << "rep,n,statistic,value\n";
    for (const auto& d : report.diagnostics) {
      diag << d.rep << ',' << d.n << ',' << d.statistic << ',' << format_double(d.value) << '\n';
    }
    write_file(out_dir / "diagnostics.csv", diag.str());
    if (eigen) {
      std::ostringstream e;
      e << "rep,exact_bias,predicted_bias\n";
      for (const auto& row : report.eigen) {
        e << row.rep << ',' << format_double(row.exact_bias) << ',' << format_double(row.predicted_bias) << '\n';
      }
      write_file(out_dir / "eigen_bias.csv", e.str());
    }
  }
  if (formats.contains(ReportFormat::Json)) {
    json j;
    json prov;
    prov["config"] = json::parse(report.config_echo.empty() ? "{}" : report.config_echo);
    prov["seed"] = report.seed;
    prov["version"] = std::string(kVersion);
    prov["wall_seconds"] = report.wall_seconds;
    prov["scenario"] = report.scenario;
    prov["n"] = report.n;
    prov["replications"] = report.replications;
    prov["failure_fraction"] = report.failure_fraction();
    j["provenance"] = prov;
    json summary = json::array();
    for (const auto& s : report.summary) {
      summary.push_back({{"estimator", s.estimator},
                         {"mean_bias", number(s.mean_bias)},
                         {"sd_bias", number(s.sd_bias)},
                         {"coverage", number(s.coverage)},
                         {"mean_abs_bias", number(s.mean_abs_bias)},
                         {"median_abs_bias", number(s.median_abs_bias)},
                         {"fitted", s.fitted},
                         {"failed", s.failed}});
    }
    j["summary"] = summary;
    json rows = json::array();
    for (const auto& r : report.rows) {
      rows.push_back({{"scenario", r.scenario},
                      {"rep", r.rep},
                      {"estimator", r.estimator},
                      {"beta_hat", number(r.beta_hat)},
                      {"bias", number(r.bias)},
                      {"ci_lo", number(r.ci_lo)},
                      {"ci_hi", number(r.ci_hi)},
                      {"covered", r.covered}});
    }
    j["rows"] = rows;
    json errors = json::array();
    for (const auto& e : report.errors) {
      errors.push_back({{"rep", e.rep}, {"estimator", e.estimator}, {"kind", e.kind}, {"message", e.message}});
    }
    j["errors"] = errors;
    if (eigen) {
      json e = json::array();
      for (const auto& row : report.eigen) {
        e.push_back({{"rep", row.rep},
                     {"exact_bias", number(row.exact_bias)},
                     {"predicted_bias", number(row.predicted_bias)}});
      }
      j["eigen"] = e;
      const EigenAgreement a = eigen_agreement(report);
      j["eigen_agreement"] = {{"trials", a.trials}, {"pearson", number(a.pearson)}, {"slope", number(a.slope)}};
    }
    write_file(out_dir / "report.json", j.dump(2) + "\n");
  }
  if (formats.contains(ReportFormat::Svg)) {
    write_file(out_dir / "bias_histograms.svg", bias_histograms_svg(report));
    if (eigen) write_file(out_dir / "eigen_scatter.svg", eigen_scatter_svg(report));
  }
}

void emit_sweep(const std::vector<ExperimentReport>& reports, const fs::path& out_dir,
                const std::set<ReportFormat>& formats) {
  if (reports.size() == 1) {
    emit_report(reports.front(), out_dir, formats);
    return;
  }
  fs::create_directories(out_dir);
  std::ostringstream s;
  s << "n,estimator,mean_bias,sd_bias,coverage,median_abs_bias\n";
  for (const auto& r : reports) {
    emit_report(r, out_dir / ("n_" + std::to_string(r.n)), formats);
    for (const auto& row : r.summary) {
      s << r.n << ',' << row.estimator << ',' << format_double(row.mean_bias) << ',' << format_double(row.sd_bias)
        << ',' << format_double(row.coverage) << ',' << format_double(row.median_abs_bias) << '\n';
    }
  }
  write_file(out_dir / "sweep_summary.csv", s.str());
}

}  // namespace spconf
