#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "padfall/eval.hpp"

namespace padfall {

namespace fs = std::filesystem;

std::string format_percent(double fraction) {
  std::string s = fmt::format("{:.2f}", fraction * 100.0);
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s + "%";
}

namespace {

std::string scenario_label(const std::string& name) {
  const auto wd = name.find("-WD-");
  if (wd == std::string::npos) return name;
  return fmt::format("{}-WD ({} rpm)", name.substr(0, wd), name.substr(wd + 4));
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cm(const std::optional<SummaryStats>& s, double SummaryStats::*field) {
  return s ? fmt::format("{:.2f}", (*s).*field) : "N/A";
}

std::string corr(const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : "N/A"; }

template <typename T>
void push_unique(std::vector<T>& v, const T& x) {
  if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

}  // namespace

ReportTables build_report_tables(const std::vector<ScenarioResult>& results) {
  std::vector<std::string> scenarios, controllers;
  for (const auto& r : results) {
    push_unique(scenarios, r.scenario);
    push_unique(controllers, r.controller);
  }
  auto find = [&](const std::string& s, const std::string& c) -> const ScenarioResult* {
    for (const auto& r : results) {
      if (r.scenario == s && r.controller == c && !r.records.empty()) return &r;
    }
    return nullptr;
  };

  ReportTables t;
  t.success = "Test Case";
  t.precision = "Test Case";
  for (const auto& c : controllers) {
    t.success += "," + csv_field(c);
    t.precision += "," + csv_field(c + " Mean (cm)") + "," + csv_field(c + " STD (cm)");
  }
  t.success += '\n';
  t.precision += '\n';
  t.precision_wind = "Test Case,Controller,Min (cm),Mean (cm),STD (cm)\n";
  t.velocity_correlation = "Test Case,Controller,Mean,Median,STD,Min,Max,Episodes,Absent\n";
  t.wind_recognition = "Test Case,Controller,Wind X,Wind Y,Wind Z,No Wind X,No Wind Y,No Wind Z\n";

  for (const auto& s : scenarios) {
    const std::string label = csv_field(scenario_label(s));
    t.success += label;
    t.precision += label;
    for (const auto& c : controllers) {
      const ScenarioResult* r = find(s, c);
      if (!r) {
        t.success += ",N/A";
        t.precision += ",N/A,N/A";
        continue;
      }
      const LandingMetrics m = landing_metrics(r->records);
      t.success += "," + format_percent(m.success_rate);
      t.precision += "," + cm(m.precision_cm, &SummaryStats::mean) + "," + cm(m.precision_cm, &SummaryStats::std);
    }
    t.success += '\n';
    t.precision += '\n';

    for (const auto& c : controllers) {
      const ScenarioResult* r = find(s, c);
      if (!r) continue;
      const LandingMetrics m = landing_metrics(r->records);
      t.precision_wind += fmt::format("{},{},{},{},{}\n", label, csv_field(c), cm(m.precision_cm, &SummaryStats::min),
                                      cm(m.precision_cm, &SummaryStats::mean), cm(m.precision_cm, &SummaryStats::std));
      const VelocityCorrelation vc = velocity_correlation_stats(r->records);
      auto stat = [&](double SummaryStats::*f) {
        return vc.stats ? fmt::format("{:.4f}", (*vc.stats).*f) : std::string("N/A");
      };
      t.velocity_correlation +=
          fmt::format("{},{},{},{},{},{},{},{},{}\n", label, csv_field(c), stat(&SummaryStats::mean),
                      stat(&SummaryStats::median), stat(&SummaryStats::std), stat(&SummaryStats::min),
                      stat(&SummaryStats::max), vc.episodes_used, vc.episodes_absent);
      const WindRecognition w = wind_recognition_correlation(r->records);
      t.wind_recognition += fmt::format("{},{},{},{},{},{},{},{}\n", label, csv_field(c), corr(w.wind[0]),
                                        corr(w.wind[1]), corr(w.wind[2]), corr(w.calm[0]), corr(w.calm[1]),
                                        corr(w.calm[2]));
    }
  }
  return t;
}

namespace {

struct Extent {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
};

struct Panel {
  std::string title;
  int a = 0;  ///< horizontal axis index
  int b = 1;  ///< vertical axis index
  double x0 = 0.0;
};

constexpr double kPanel = 360.0;
constexpr double kMargin = 40.0;

}  // namespace

std::string trajectory_svg(const EpisodeRecord& record) {
  const double width = 2 * kPanel + 3 * kMargin;
  const double height = kPanel + 2 * kMargin + 40.0;
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{:.0f}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">{} / {} / episode {} / {}</text>\n",
      width, height, width, height, kMargin, record.scenario, record.controller, record.episode_index,
      to_string(record.outcome));

  const Panel panels[2] = {{"top view (x, y)", 0, 1, kMargin}, {"side view (x, z)", 0, 2, 2 * kMargin + kPanel}};
  for (const Panel& panel : panels) {
    Extent ea, eb;
    for (const auto& row : record.rows) {
      for (const Vec3* p : {&row.drone.position, &row.pad_position, &row.impeller}) {
        ea.add((*p)[panel.a]);
        eb.add((*p)[panel.b]);
      }
    }
    if (!std::isfinite(ea.lo)) ea = {0.0, 1.0};
    if (!std::isfinite(eb.lo)) eb = {0.0, 1.0};
    // Equal scale on both axes, padded.
    const double span = std::max({ea.hi - ea.lo, eb.hi - eb.lo, 0.5}) * 1.1;
    const double ca = 0.5 * (ea.lo + ea.hi);
    const double cb = 0.5 * (eb.lo + eb.hi);
    const double y0 = kMargin + 20.0;
    auto px = [&](double v) { return panel.x0 + (v - ca + 0.5 * span) / span * kPanel; };
    auto py = [&](double v) { return y0 + kPanel - (v - cb + 0.5 * span) / span * kPanel; };

    svg += fmt::format("<rect x=\"{:.3f}\" y=\"{:.3f}\" width=\"{:.3f}\" height=\"{:.3f}\" fill=\"none\" "
                       "stroke=\"#888\"/>\n",
                       panel.x0, y0, kPanel, kPanel);
    svg += fmt::format("<text x=\"{:.3f}\" y=\"{:.3f}\" font-family=\"sans-serif\" font-size=\"12\">{} [span "
                       "{:.2f} m]</text>\n",
                       panel.x0, y0 - 6.0, panel.title, span);

    auto path = [&](auto get, const char* color) {
      std::string points;
      double first_a = 0, first_b = 0;
      bool moved = false, any = false;
      for (const auto& row : record.rows) {
        const Vec3& p = get(row);
        if (!std::isfinite(p[panel.a]) || !std::isfinite(p[panel.b])) continue;
        if (!any) {
          first_a = p[panel.a];
          first_b = p[panel.b];
          any = true;
        } else if (p[panel.a] != first_a || p[panel.b] != first_b) {
          moved = true;
        }
        points += fmt::format("{:.3f},{:.3f} ", px(p[panel.a]), py(p[panel.b]));
      }
      if (!any) return;
      if (moved) {
        points.pop_back();
        svg += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n", points,
                           color);
      }
      svg += fmt::format("<circle cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"3\" fill=\"{}\"/>\n", px(first_a), py(first_b),
                         color);
    };
    path([](const RecordRow& r) -> const Vec3& { return r.drone.position; }, "blue");
    path([](const RecordRow& r) -> const Vec3& { return r.pad_position; }, "red");
    path([](const RecordRow& r) -> const Vec3& { return r.impeller; }, "green");
  }

  const double ly = height - 14.0;
  const std::pair<const char*, const char*> legend[] = {
      {"blue", "drone path"}, {"red", "landing pad path"}, {"green", "impeller position"}};
  double lx = kMargin;
  for (const auto& [color, label] : legend) {
    svg += fmt::format("<rect x=\"{:.0f}\" y=\"{:.0f}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n", lx, ly - 10,
                       color);
    svg += fmt::format("<text x=\"{:.0f}\" y=\"{:.0f}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
                       lx + 16, ly, label);
    lx += 160.0;
  }
  svg += "</svg>\n";
  return svg;
}

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc | std::ios::binary);
  if (!f) throw ConfigError(fmt::format("cannot write {}", path.string()));
  f << text;
}

std::string file_stem(const std::string& s) {
  std::string out;
  for (char c : fs::path(s).filename().string()) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  }
  return out.empty() ? "controller" : out;
}

}  // namespace

void aggregate_report(const std::vector<ScenarioResult>& results, const std::string& dir) {
  fs::create_directories(dir);
  const ReportTables t = build_report_tables(results);
  write_file(fs::path(dir) / "table_success.csv", t.success);
  write_file(fs::path(dir) / "table_precision.csv", t.precision);
  write_file(fs::path(dir) / "table_precision_wind.csv", t.precision_wind);
  write_file(fs::path(dir) / "table_velocity_correlation.csv", t.velocity_correlation);
  write_file(fs::path(dir) / "wind_recognition.csv", t.wind_recognition);
  const fs::path plots = fs::path(dir) / "plots";
  fs::create_directories(plots);
  for (const auto& r : results) {
    for (const auto& rec : r.records) {
      write_file(plots / fmt::format("{}_{}_{:03d}.svg", r.scenario, file_stem(r.controller), rec.episode_index),
                 trajectory_svg(rec));
    }
  }
}

}  // namespace padfall
