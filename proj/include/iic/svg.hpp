#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "iic/errors.hpp"
#include "iic/sweep.hpp"

namespace iic::harness {

namespace svg_detail {

inline std::string fmt(double v, const char* spec = "%.3f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

struct Series {
  std::string name;
  std::vector<double> ds;     // grid points where the series is present
  std::vector<double> means;  // mean over repeats
  bool log_y = false;
  const char* color = "#000000";
};

/// Mean over repeats of one record field at each d, skipping absent values.
template <class Getter>
Series series_means(const std::vector<SweepRecord>& records,
                    const std::string& name, Getter get) {
  std::map<Eigen::Index, std::pair<double, int>> acc;
  for (const auto& rec : records) {
    const std::optional<double> v = get(rec);
    if (!v) continue;
    auto& slot = acc[rec.d];
    slot.first += *v;
    slot.second += 1;
  }
  Series s;
  s.name = name;
  for (const auto& [d, sum_count] : acc) {
    s.ds.push_back(static_cast<double>(d));
    s.means.push_back(sum_count.first / sum_count.second);
  }
  return s;
}

}  // namespace svg_detail

/// Writes a static two-panel figure: test MSE on top (log-log), model
/// selection criteria below (log-x), with the critical band shaded in both.
/// Each polyline carries its grid and mean values as data attributes at
/// full precision. Output is a deterministic function of the records.
inline void emit_svg(const std::vector<SweepRecord>& records,
                     const std::string& path,
                     const std::vector<std::string>& series_names =
                         {"test_mse", "iic", "bic", "bic_ridge"},
                     double band_lo_d = -1.0, double band_hi_d = -1.0) {
  using svg_detail::Series;
  using svg_detail::fmt;

  std::vector<Series> all;
  for (const auto& name : series_names) {
    Series s;
    if (name == "test_mse") {
      s = svg_detail::series_means(records, name, [](const SweepRecord& r) {
        return std::optional<double>(r.test_mse);
      });
      s.log_y = true;
      s.color = "#1f77b4";
    } else if (name == "iic") {
      s = svg_detail::series_means(records, name,
                                   [](const SweepRecord& r) { return r.iic; });
      s.color = "#d62728";
    } else if (name == "bic") {
      s = svg_detail::series_means(records, name,
                                   [](const SweepRecord& r) { return r.bic; });
      s.color = "#2ca02c";
    } else if (name == "bic_ridge") {
      s = svg_detail::series_means(records, name, [](const SweepRecord& r) {
        return std::optional<double>(r.bic_ridge);
      });
      s.color = "#9467bd";
    } else {
      throw ContractViolation("emit_svg: unknown series '" + name + "'");
    }
    if (!s.ds.empty()) all.push_back(std::move(s));
  }

  // Shared log-x range over all grid points present.
  double d_min = 0.0, d_max = 0.0;
  for (const auto& s : all) {
    for (double d : s.ds) {
      if (d_min == 0.0 || d < d_min) d_min = d;
      if (d > d_max) d_max = d;
    }
  }
  if (d_min <= 0.0) {
    d_min = 1.0;
    d_max = 10.0;
  }
  if (d_max <= d_min) d_max = d_min * 10.0;

  if (band_lo_d <= 0.0 || band_hi_d <= 0.0) {
    for (const auto& rec : records) {
      if (rec.regime != Regime::Critical) continue;
      const double d = static_cast<double>(rec.d);
      if (band_lo_d <= 0.0 || d < band_lo_d) band_lo_d = d;
      if (band_hi_d <= 0.0 || d > band_hi_d) band_hi_d = d;
    }
  }

  constexpr double kWidth = 860.0, kPanelHeight = 280.0, kGap = 50.0;
  constexpr double kLeft = 70.0, kRight = 20.0, kTop = 30.0;
  const double plot_w = kWidth - kLeft - kRight;
  const double total_h = kTop + 2.0 * kPanelHeight + kGap + 40.0;
  const double lx0 = std::log10(d_min), lx1 = std::log10(d_max);
  auto x_of = [&](double d) {
    return kLeft + (std::log10(d) - lx0) / (lx1 - lx0) * plot_w;
  };

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         fmt(kWidth, "%.0f") + "\" height=\"" + fmt(total_h, "%.0f") +
         "\" viewBox=\"0 0 " + fmt(kWidth, "%.0f") + " " +
         fmt(total_h, "%.0f") + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  struct Panel {
    double top;
    std::vector<const Series*> members;
    bool log_y;
    const char* title;
  };
  std::vector<Panel> panels;
  {
    Panel mse{kTop, {}, true, "mean test MSE"};
    Panel crit{kTop + kPanelHeight + kGap, {}, false, "model selection criteria"};
    for (const auto& s : all) {
      (s.name == "test_mse" ? mse : crit).members.push_back(&s);
    }
    if (!mse.members.empty()) panels.push_back(mse);
    if (!crit.members.empty()) panels.push_back(crit);
  }

  for (const auto& panel : panels) {
    double y_min = 0.0, y_max = 0.0;
    bool first = true;
    for (const Series* s : panel.members) {
      for (double v : s->means) {
        const double t = panel.log_y ? std::log10(std::max(v, 1e-300)) : v;
        if (first || t < y_min) y_min = t;
        if (first || t > y_max) y_max = t;
        first = false;
      }
    }
    if (first) continue;
    if (y_max <= y_min) y_max = y_min + 1.0;
    const double pad = 0.06 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;
    auto y_of = [&](double v) {
      const double t = panel.log_y ? std::log10(std::max(v, 1e-300)) : v;
      return panel.top + kPanelHeight -
             (t - y_min) / (y_max - y_min) * kPanelHeight;
    };

    out += "<g>\n";
    if (band_lo_d > 0.0 && band_hi_d > 0.0) {
      const double bx0 = x_of(band_lo_d / 1.05);
      const double bx1 = x_of(band_hi_d * 1.05);
      out += "<rect x=\"" + fmt(bx0) + "\" y=\"" + fmt(panel.top) +
             "\" width=\"" + fmt(bx1 - bx0) + "\" height=\"" +
             fmt(kPanelHeight) + "\" fill=\"#f4c7c3\" fill-opacity=\"0.45\"/>\n";
    }
    out += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(panel.top) +
           "\" width=\"" + fmt(plot_w) + "\" height=\"" + fmt(kPanelHeight) +
           "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    out += "<text x=\"" + fmt(kLeft) + "\" y=\"" + fmt(panel.top - 8.0) +
           "\" font-family=\"sans-serif\" font-size=\"14\">" + panel.title +
           "</text>\n";

    for (const Series* s : panel.members) {
      std::string points, data_d, data_mean;
      for (std::size_t i = 0; i < s->ds.size(); ++i) {
        if (i) {
          points += ' ';
          data_d += ' ';
          data_mean += ' ';
        }
        points += fmt(x_of(s->ds[i])) + "," + fmt(y_of(s->means[i]));
        data_d += fmt(s->ds[i], "%.17g");
        data_mean += fmt(s->means[i], "%.17g");
      }
      out += "<polyline fill=\"none\" stroke=\"" + std::string(s->color) +
             "\" stroke-width=\"1.8\" points=\"" + points +
             "\" data-series=\"" + s->name + "\" data-d=\"" + data_d +
             "\" data-mean=\"" + data_mean + "\"/>\n";
      for (std::size_t i = 0; i < s->ds.size(); ++i) {
        out += "<circle cx=\"" + fmt(x_of(s->ds[i])) + "\" cy=\"" +
               fmt(y_of(s->means[i])) + "\" r=\"2.4\" fill=\"" +
               std::string(s->color) + "\"/>\n";
      }
    }
    // x tick labels at the grid points of the first member.
    for (double d : panel.members.front()->ds) {
      out += "<text x=\"" + fmt(x_of(d)) + "\" y=\"" +
             fmt(panel.top + kPanelHeight + 16.0) +
             "\" font-family=\"sans-serif\" font-size=\"10\" "
             "text-anchor=\"middle\">" +
             fmt(d, "%.0f") + "</text>\n";
    }
    out += "</g>\n";
  }

  // Legend under the lower panel.
  double legend_x = kLeft;
  const double legend_y = total_h - 12.0;
  for (const auto& s : all) {
    out += "<rect x=\"" + fmt(legend_x) + "\" y=\"" + fmt(legend_y - 10.0) +
           "\" width=\"12\" height=\"12\" fill=\"" + std::string(s.color) +
           "\"/>\n";
    out += "<text x=\"" + fmt(legend_x + 16.0) + "\" y=\"" + fmt(legend_y) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + s.name +
           "</text>\n";
    legend_x += 130.0;
  }
  out += "</svg>\n";

  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("emit_svg: cannot open '" + path + "' for writing");
  file << out;
  if (!file) throw Error("emit_svg: write failure on '" + path + "'");
}

}  // namespace iic::harness
