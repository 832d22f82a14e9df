// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/expcli/figures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "biasbench/error.hpp"
#include "biasbench/expcli/reports.hpp"
#include "biasbench/json_util.hpp"

namespace biasbench::expcli {

namespace fs = std::filesystem;

namespace {

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string Short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string Escape(const std::string& s) {
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

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) { Row(header); }
  void Row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto& f = fields[i];
      out_ << (i ? "," : "");
      if (f.find_first_of(",\"\n") == std::string::npos) {
        out_ << f;
      } else {
        out_ << '"';
        for (char c : f) out_ << (c == '"' ? "\"\"" : std::string(1, c));
        out_ << '"';
      }
    }
    out_ << "\n";
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// Minimal scatter/line chart. Categorical x axes pass `x_labels` and use
// integer positions.
struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<std::string> x_labels;
  bool lines = true;

  std::string Render() const {
    const double w = 640, h = 400, left = 60, right = 160, top = 40, bottom = 50;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    bool first = true;
    for (const auto& s : series)
      for (const auto& [x, y] : s.points) {
        if (first) {
          x0 = x1 = x;
          y0 = y1 = y;
          first = false;
        }
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
    if (!x_labels.empty()) {
      x0 = -0.5;
      x1 = x_labels.size() - 0.5;
    }
    if (x1 - x0 < 1e-12) {
      x0 -= 0.5;
      x1 += 0.5;
    }
    if (y1 - y0 < 1e-12) {
      y0 -= 0.05;
      y1 += 0.05;
    }
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    const auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (w - left - right); };
    const auto py = [&](double y) { return h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << Escape(title)
      << "</text>\n";
    o << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right << "\" y2=\"" << h - bottom
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << h - bottom
      << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double y = y0 + (y1 - y0) * i / 4.0;
      o << "<text x=\"" << left - 5 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << Short(y)
        << "</text>\n";
    }
    if (x_labels.empty()) {
      for (int i = 0; i <= 4; ++i) {
        const double x = x0 + (x1 - x0) * i / 4.0;
        o << "<text x=\"" << px(x) << "\" y=\"" << h - bottom + 15 << "\" text-anchor=\"middle\">" << Short(x)
          << "</text>\n";
      }
    } else {
      for (std::size_t i = 0; i < x_labels.size(); ++i)
        o << "<text x=\"" << px(i) << "\" y=\"" << h - bottom + 15 << "\" text-anchor=\"middle\">"
          << Escape(x_labels[i]) << "</text>\n";
    }
    o << "<text x=\"" << (left + w - right) / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">"
      << Escape(x_label) << "</text>\n";
    o << "<text x=\"15\" y=\"" << (top + h - bottom) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
      << (top + h - bottom) / 2 << ")\">" << Escape(y_label) << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
      const char* color = kPalette[s % std::size(kPalette)];
      auto pts = series[s].points;
      if (lines && pts.size() > 1) {
        std::sort(pts.begin(), pts.end());
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
        for (const auto& [x, y] : pts) o << px(x) << "," << py(y) << " ";
        o << "\"/>\n";
      }
      for (const auto& [x, y] : pts)
        o << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      const double ly = top + 15 * s;
      o << "<rect x=\"" << w - right + 10 << "\" y=\"" << ly - 8 << "\" width=\"10\" height=\"10\" fill=\"" << color
        << "\"/>\n";
      o << "<text x=\"" << w - right + 25 << "\" y=\"" << ly + 1 << "\">" << Escape(series[s].name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
  }
};

std::string RowName(const MethodSelection& s, bool multi) { return multi ? s.method + " @ " + s.dataset : s.method; }

}  // namespace

std::vector<TrialRecord> ApplySelector(std::span<const TrialRecord> trials, const FigureSelector& sel,
                                       std::vector<std::string>* missing) {
  std::set<std::string> want_ids(sel.ids.begin(), sel.ids.end());
  std::set<std::string> found;
  std::vector<TrialRecord> out;
  for (const auto& r : trials) {
    if (!want_ids.empty() && !want_ids.count(r.id)) continue;
    found.insert(r.id);
    if (!sel.methods.empty() &&
        std::find(sel.methods.begin(), sel.methods.end(), std::string(r.method())) == sel.methods.end())
      continue;
    if (!sel.dataset.empty() && DatasetLabel(r.dataset).rfind(sel.dataset, 0) != 0) continue;
    out.push_back(r);
  }
  if (missing) {
    for (const auto& id : want_ids)
      if (!found.count(id)) missing->push_back(id);
  }
  return out;
}

ExportResult ExportFigures(std::span<const TrialRecord> all, const FigureSelector& selector,
                           const FigureOptions& options, const fs::path& out_dir) {
  ExportResult result;
  for (const auto& m : selector.methods) methods::ParseMethodTag(m);
  const auto trials = ApplySelector(all, selector, &result.missing_ids);
  result.selected = trials.size();
  if (!result.missing_ids.empty() || trials.empty()) return result;

  const auto& policy = options.policy;
  const auto selections = SelectPerMethod(trials, policy);
  std::set<std::string> datasets;
  for (const auto& s : selections) datasets.insert(s.dataset);
  const bool multi = datasets.size() > 1;
  const auto test = [&](const TrialRecord& r) { return sweep::TestReport(r, policy.checkpoint); };

  fs::create_directories(out_dir);
  const auto emit = [&](const std::string& stem, const Csv& csv, const Chart& chart) {
    WriteFileAtomic(out_dir / (stem + ".csv"), csv.str());
    WriteFileAtomic(out_dir / (stem + ".svg"), chart.Render());
    result.written.push_back(out_dir / (stem + ".csv"));
    result.written.push_back(out_dir / (stem + ".svg"));
  };

  // MMD per factor for every seed of each selected configuration.
  {
    Csv csv({"dataset", "method", "trial_id", "seed", "factor", "explicit", "majority", "minority", "mmd"});
    Chart chart{"Majority minus minority accuracy per factor", "method", "MMD", {}, {}, false};
    std::map<std::string, Series> by_factor;
    for (std::size_t i = 0; i < selections.size(); ++i) {
      const auto& s = selections[i];
      chart.x_labels.push_back(RowName(s, multi));
      for (const auto* r : s.seeds) {
        const auto* rep = test(*r);
        if (!rep) continue;
        for (const auto& f : rep->factors) {
          if (!f.majmin) continue;
          csv.Row({s.dataset, s.method, r->id, std::to_string(r->config.seed), f.name, f.is_explicit ? "1" : "0",
                   Num(f.majmin->majority), Num(f.majmin->minority), Num(f.majmin->mmd())});
          auto& series = by_factor[f.name];
          series.name = f.name;
          series.points.emplace_back(static_cast<double>(i), f.majmin->mmd());
        }
      }
    }
    for (auto& [_, s] : by_factor) chart.series.push_back(std::move(s));
    emit("mmd_by_factor", csv, chart);
  }

  // Unbiased accuracy against the number of explicit factors. Methods that do
  // not use explicit factors are drawn flat across the observed counts.
  {
    Csv csv({"dataset", "method", "num_explicit", "winner_id", "test_unbiased", "seeds"});
    Chart chart{"Unbiased accuracy vs explicit factors", "number of explicit factors", "unbiased accuracy", {}, {}};
    std::map<std::pair<std::string, int>, std::vector<TrialRecord>> groups;
    std::set<int> counts;
    for (const auto& r : trials) {
      if (!r.ok()) continue;
      const int k = methods::IsExplicit(r.config.method.tag()) ? static_cast<int>(r.config.explicit_factors.size()) : -1;
      groups[{std::string(r.method()) + (multi ? " @ " + DatasetLabel(r.dataset) : ""), k}].push_back(r);
      if (k >= 0) counts.insert(k);
    }
    std::map<std::string, Series> series;
    for (const auto& [key, records] : groups) {
      const auto sel = SelectPerMethod(records, policy);
      if (sel.empty()) continue;
      const auto mean = SeedMean(sel.front(), [&](const TrialRecord& r) -> std::optional<double> {
        const auto* rep = test(r);
        return rep ? std::optional(rep->AccAt(0.0)) : std::nullopt;
      });
      if (!mean) continue;
      csv.Row({sel.front().dataset, sel.front().method, std::to_string(key.second), sel.front().winner->id,
               Num(*mean), std::to_string(sel.front().seeds.size())});
      auto& s = series[key.first];
      s.name = key.first;
      if (key.second >= 0) {
        s.points.emplace_back(key.second, *mean);
      } else {
        for (int k : counts) s.points.emplace_back(k, *mean);
        if (counts.empty()) s.points.emplace_back(0, *mean);
      }
    }
    for (auto& [_, s] : series) chart.series.push_back(std::move(s));
    emit("explicit_count", csv, chart);
  }

  // Winners chosen by validation Acc(alpha) for each alpha.
  {
    Csv csv({"dataset", "method", "alpha", "winner_id", "val_score", "test_unbiased", "group", "test_count",
             "group_accuracy"});
    Chart chart{"Test group accuracy of the Acc(alpha) winner", "alpha", "accuracy", {}, {}};
    for (const auto& s : selections) {
      std::vector<TrialRecord> pool;
      for (const auto& r : trials)
        if (r.ok() && DatasetLabel(r.dataset) == s.dataset && r.method() == s.method) pool.push_back(r);
      const auto sens = sweep::SelectionSensitivity(pool, options.alphas, policy.checkpoint);
      std::map<metrics::GroupKey, std::size_t> counts;
      for (const auto& g : sens.groups) counts[g.key] = g.test_count;
      std::map<metrics::GroupKey, Series> per_group;
      for (const auto& row : sens.rows) {
        for (const auto& [key, acc] : row.group_accuracy) {
          csv.Row({s.dataset, s.method, Num(row.alpha), row.winner_id, Num(row.val_score), Num(row.test_unbiased),
                   metrics::ToString(key), std::to_string(counts[key]), Num(acc)});
          auto& series = per_group[key];
          series.name = RowName(s, multi) + " " + metrics::ToString(key);
          series.points.emplace_back(row.alpha, acc);
        }
      }
      // Legends stay readable only for small group counts.
      if (per_group.size() <= 8)
        for (auto& [_, series] : per_group) chart.series.push_back(std::move(series));
    }
    emit("alpha_winners", csv, chart);
  }

  // Acc(alpha) on test for each selected configuration.
  {
    Csv csv({"dataset", "method", "alpha", "test_acc_alpha", "seeds"});
    Chart chart{"Test Acc(alpha)", "alpha", "Acc(alpha)", {}, {}};
    for (const auto& s : selections) {
      Series series{RowName(s, multi), {}};
      for (double alpha : options.alphas) {
        const auto mean = SeedMean(s, [&](const TrialRecord& r) -> std::optional<double> {
          const auto* rep = test(r);
          return rep ? std::optional(rep->AccAt(alpha)) : std::nullopt;
        });
        if (!mean) continue;
        csv.Row({s.dataset, s.method, Num(alpha), Num(*mean), std::to_string(s.seeds.size())});
        series.points.emplace_back(alpha, *mean);
      }
      chart.series.push_back(std::move(series));
    }
    emit("acc_vs_alpha", csv, chart);
  }

  // IOSM against the baseline method's selected model on the same dataset.
  {
    Csv csv({"dataset", "method", "group", "iosm"});
    Chart chart{"Improvement over " + options.baseline + " per group", "group", "IOSM", {}, {}, false};
    std::map<std::string, std::size_t> group_pos;
    for (const auto& s : selections) {
      if (s.method == options.baseline) continue;
      const MethodSelection* base = nullptr;
      for (const auto& b : selections)
        if (b.dataset == s.dataset && b.method == options.baseline) base = &b;
      if (!base) continue;
      const auto* mine = test(*s.winner);
      const auto* theirs = test(*base->winner);
      if (!mine || !theirs) continue;
      std::map<metrics::GroupKey, double> iosm;
      try {
        iosm = metrics::Iosm(mine->groups, theirs->groups);
      } catch (const ValidationError&) {
        continue;  // different group structure, not comparable
      }
      Series series{RowName(s, multi), {}};
      for (const auto& [key, v] : iosm) {
        const auto name = metrics::ToString(key);
        csv.Row({s.dataset, s.method, name, Num(v)});
        auto [it, inserted] = group_pos.try_emplace(name, group_pos.size());
        if (inserted) chart.x_labels.push_back(name);
        series.points.emplace_back(static_cast<double>(it->second), v);
      }
      chart.series.push_back(std::move(series));
    }
    emit("iosm", csv, chart);
  }
  return result;
}

}  // namespace biasbench::expcli
