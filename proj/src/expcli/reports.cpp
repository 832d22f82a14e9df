// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/expcli/reports.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "biasbench/error.hpp"

namespace biasbench::expcli {

namespace {

// Canonical config encoding with the seed removed.
std::string HyperKey(const TrialRecord& r) {
  Json j = train::ToJson(r.config);
  j.erase("seed");
  return j.dump();
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string DatasetLabel(const Json& identity) {
  return identity.value("kind", std::string("dataset")) + ":" + Sha256Hex(identity.dump()).substr(0, 8);
}

std::vector<MethodSelection> SelectPerMethod(std::span<const TrialRecord> trials,
                                             const sweep::SelectionPolicy& policy) {
  // dataset label -> method -> records
  std::map<std::string, std::map<methods::MethodTag, std::vector<TrialRecord>>> grouped;
  std::map<std::string, Json> identities;
  for (const auto& r : trials) {
    if (!r.ok()) continue;
    const auto label = DatasetLabel(r.dataset);
    identities.emplace(label, r.dataset);
    grouped[label][r.config.method.tag()].push_back(r);
  }
  std::vector<MethodSelection> out;
  for (auto& [label, by_method] : grouped) {
    for (const auto tag : methods::kAllMethods) {
      auto it = by_method.find(tag);
      if (it == by_method.end()) continue;
      const auto& winner = sweep::SelectModel(it->second, policy);
      MethodSelection s;
      s.dataset = label;
      s.dataset_identity = identities.at(label);
      s.method = std::string(methods::MethodName(tag));
      // Point back into the caller's span so the pointers outlive this call.
      const auto key = HyperKey(winner);
      for (const auto& r : trials) {
        if (!r.ok() || DatasetLabel(r.dataset) != label || r.config.method.tag() != tag) continue;
        if (r.id == winner.id) s.winner = &r;
        if (HyperKey(r) == key) s.seeds.push_back(&r);
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

ReportKind ParseReportKind(std::string_view name) {
  if (name == "overall") return ReportKind::kOverall;
  if (name == "per-group") return ReportKind::kPerGroup;
  if (name == "per-factor") return ReportKind::kPerFactor;
  throw ValidationError("unknown report '" + std::string(name) + "' (expected overall, per-group or per-factor)");
}

Table BuildReportTable(ReportKind kind, std::span<const TrialRecord> trials, const sweep::SelectionPolicy& policy) {
  const auto selections = SelectPerMethod(trials, policy);
  const auto test = [&](const TrialRecord& r) { return sweep::TestReport(r, policy.checkpoint); };
  Table t;

  if (kind == ReportKind::kOverall) {
    t.title = "Unbiased test accuracy (%)";
    for (const auto& s : selections) {
      if (std::find(t.columns.begin(), t.columns.end(), s.dataset) == t.columns.end()) t.columns.push_back(s.dataset);
    }
    for (const auto tag : methods::kAllMethods) {
      const std::string name(methods::MethodName(tag));
      std::vector<std::optional<double>> row(t.columns.size());
      bool any = false;
      for (const auto& s : selections) {
        if (s.method != name) continue;
        const auto col = std::find(t.columns.begin(), t.columns.end(), s.dataset) - t.columns.begin();
        row[col] = SeedMean(s, [&](const TrialRecord& r) -> std::optional<double> {
          const auto* rep = test(r);
          return rep ? std::optional(rep->AccAt(0.0)) : std::nullopt;
        });
        any = true;
      }
      if (!any) continue;
      t.rows.push_back(name);
      t.cells.push_back(std::move(row));
    }
    return t;
  }

  std::set<std::string> datasets;
  for (const auto& s : selections) datasets.insert(s.dataset);
  const auto row_label = [&](const MethodSelection& s) {
    return datasets.size() > 1 ? s.method + " @ " + s.dataset : s.method;
  };

  if (kind == ReportKind::kPerGroup) {
    t.title = "Per-group test accuracy (%)";
    std::set<metrics::GroupKey> keys;
    for (const auto& s : selections)
      if (const auto* rep = test(*s.winner))
        for (const auto& g : rep->groups.groups) keys.insert(g.key);
    for (const auto& k : keys) t.columns.push_back(metrics::ToString(k));
    t.columns.push_back("Unbiased");
    for (const auto& s : selections) {
      std::vector<std::optional<double>> row;
      for (const auto& k : keys) {
        row.push_back(SeedMean(s, [&](const TrialRecord& r) -> std::optional<double> {
          const auto* rep = test(r);
          if (!rep) return std::nullopt;
          const auto* g = rep->groups.Find(k);
          if (!g || g->count == 0) return std::nullopt;
          return g->accuracy();
        }));
      }
      row.push_back(SeedMean(s, [&](const TrialRecord& r) -> std::optional<double> {
        const auto* rep = test(r);
        return rep ? std::optional(rep->AccAt(0.0)) : std::nullopt;
      }));
      t.rows.push_back(row_label(s));
      t.cells.push_back(std::move(row));
    }
    return t;
  }

  t.title = "Majority / minority test accuracy per factor (%)";
  std::vector<std::string> factors;
  for (const auto& s : selections)
    if (const auto* rep = test(*s.winner))
      for (const auto& f : rep->factors)
        if (std::find(factors.begin(), factors.end(), f.name) == factors.end()) factors.push_back(f.name);
  for (const auto& f : factors) {
    t.columns.push_back(f + " Maj.");
    t.columns.push_back(f + " Min.");
  }
  for (const auto& s : selections) {
    std::vector<std::optional<double>> row;
    for (const auto& f : factors) {
      for (const bool majority : {true, false}) {
        row.push_back(SeedMean(s, [&](const TrialRecord& r) -> std::optional<double> {
          const auto* rep = test(r);
          if (!rep) return std::nullopt;
          for (const auto& fr : rep->factors)
            if (fr.name == f && fr.majmin) return majority ? fr.majmin->majority : fr.majmin->minority;
          return std::nullopt;
        }));
      }
    }
    t.rows.push_back(row_label(s));
    t.cells.push_back(std::move(row));
  }
  return t;
}

std::string RenderText(const Table& t, int decimals) {
  std::vector<std::vector<std::string>> grid;
  grid.push_back({""});
  for (const auto& c : t.columns) grid[0].push_back(c);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    std::vector<std::string> line = {t.rows[i]};
    for (const auto& v : t.cells[i]) {
      if (!v) {
        line.emplace_back("-");
        continue;
      }
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.*f", decimals, *v * 100.0);
      line.emplace_back(buf);
    }
    grid.push_back(std::move(line));
  }
  std::vector<std::size_t> width(grid[0].size(), 0);
  for (const auto& line : grid)
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  std::ostringstream out;
  if (!t.title.empty()) out << t.title << "\n";
  for (std::size_t r = 0; r < grid.size(); ++r) {
    for (std::size_t c = 0; c < grid[r].size(); ++c) {
      const auto& cell = grid[r][c];
      const std::string pad(width[c] - cell.size(), ' ');
      out << (c ? "  " : "") << (c == 0 ? cell + pad : pad + cell);
    }
    out << "\n";
  }
  return out.str();
}

std::string RenderCsv(const Table& t) {
  std::ostringstream out;
  out << "row";
  for (const auto& c : t.columns) out << "," << CsvField(c);
  out << "\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out << CsvField(t.rows[i]);
    for (const auto& v : t.cells[i]) out << "," << (v ? FormatDouble(*v) : "");
    out << "\n";
  }
  return out.str();
}

}  // namespace biasbench::expcli
