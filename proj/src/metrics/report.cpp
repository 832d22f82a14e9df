// Copyright 2026 The biasbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "biasbench/metrics/report.hpp"

#include <algorithm>

#include "biasbench/error.hpp"

namespace biasbench::metrics {

double EvalReport::AccAt(double alpha) const {
  for (const auto& [a, v] : acc_alpha) {
    if (a == alpha) return v;
  }
  return AccAlpha(groups, alpha);
}

const FactorReport& EvalReport::Factor(std::string_view name) const {
  for (const auto& f : factors) {
    if (f.name == name) return f;
  }
  throw NotFoundError("report has no factor '" + std::string(name) + "'");
}

EvalReport BuildReport(const data::Dataset& ds, data::Split split, std::span<const int> predictions,
                       std::span<const std::size_t> explicit_factors, const EvalOptions& options) {
  const auto& data = ds.split(split);
  const std::size_t n = data.size();
  if (predictions.size() != n) throw ValidationError("prediction count does not match split size");
  if (n == 0) throw NotFoundError("split '" + std::string(data::SplitName(split)) + "' is empty");

  EvalReport r;
  r.split = data::SplitName(split);
  for (auto j : explicit_factors) r.explicit_factors.push_back(ds.factor_names.at(j));
  std::vector<std::uint8_t> correct(n);
  for (std::size_t i = 0; i < n; ++i) {
    correct[i] = predictions[i] == data.labels[i] ? 1 : 0;
    r.correct += correct[i];
  }
  r.n = n;

  auto assignment = AssignGroups({data.labels, data.factors, ds.num_factors()}, explicit_factors);
  ScoreGroups(assignment, correct);
  r.groups = std::move(assignment.table);
  for (double alpha : options.alphas) r.acc_alpha.emplace_back(alpha, AccAlpha(r.groups, alpha));

  std::vector<std::uint8_t> majority(n);
  for (std::size_t j = 0; j < ds.num_factors(); ++j) {
    FactorReport f;
    f.name = ds.factor_names[j];
    f.is_explicit = std::find(explicit_factors.begin(), explicit_factors.end(), j) != explicit_factors.end();
    for (std::size_t i = 0; i < n; ++i) majority[i] = ds.IsMajority(split, i, j) ? 1 : 0;
    try {
      f.majmin = Mmd(correct, majority, f.name);
    } catch (const UndefinedMetricError& e) {
      f.undefined_reason = e.what();
    }
    r.factors.push_back(std::move(f));
  }

  std::vector<int> local(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    int id = 0;
    for (auto j : explicit_factors) id = id * ds.cardinalities[j] + ds.Factor(split, i, j);
    local[i] = id;
  }
  for (double beta : options.betas) {
    std::optional<double> value;
    try {
      value = TailAccuracy(local, data.labels, correct, beta);
    } catch (const UndefinedMetricError&) {
    }
    r.tail.emplace_back(beta, value);
  }
  return r;
}

void AttachIosm(EvalReport& report, const EvalReport& baseline) {
  report.iosm = Iosm(report.groups, baseline.groups);
}

Json ToJson(const EvalReport& r) {
  Json j;
  j["split"] = r.split;
  j["explicit_factors"] = r.explicit_factors;
  j["n"] = r.n;
  j["correct"] = r.correct;
  j["groups"] = ToJson(r.groups);
  Json acc = Json::array();
  for (const auto& [a, v] : r.acc_alpha) acc.push_back({{"alpha", a}, {"acc", v}});
  j["acc_alpha"] = acc;
  Json factors = Json::array();
  for (const auto& f : r.factors) {
    Json fj = {{"name", f.name}, {"explicit", f.is_explicit}};
    if (f.majmin) {
      fj["maj"] = f.majmin->majority;
      fj["min"] = f.majmin->minority;
      fj["n_maj"] = f.majmin->n_majority;
      fj["n_min"] = f.majmin->n_minority;
      fj["mmd"] = f.majmin->mmd();
    } else {
      fj["mmd"] = nullptr;
      fj["undefined"] = f.undefined_reason;
    }
    factors.push_back(fj);
  }
  j["factors"] = factors;
  Json tail = Json::array();
  for (const auto& [beta, v] : r.tail) tail.push_back({{"beta", beta}, {"acc", v ? Json(*v) : Json(nullptr)}});
  j["tail"] = tail;
  if (r.iosm) {
    Json iosm = Json::array();
    for (const auto& [key, d] : *r.iosm) iosm.push_back({{"y", key.y}, {"b", key.b}, {"delta", d}});
    j["iosm"] = iosm;
  }
  return j;
}

EvalReport EvalReportFromJson(const Json& j) {
  CheckKeys(j, {"split", "explicit_factors", "n", "correct", "groups", "acc_alpha", "factors", "tail", "iosm"},
            "eval report");
  EvalReport r;
  r.split = j.at("split").get<std::string>();
  r.explicit_factors = j.at("explicit_factors").get<std::vector<std::string>>();
  r.n = j.at("n").get<std::size_t>();
  r.correct = j.at("correct").get<std::size_t>();
  r.groups = GroupTableFromJson(j.at("groups"));
  for (const auto& a : j.at("acc_alpha")) r.acc_alpha.emplace_back(a.at("alpha").get<double>(), a.at("acc").get<double>());
  for (const auto& fj : j.at("factors")) {
    FactorReport f;
    f.name = fj.at("name").get<std::string>();
    f.is_explicit = fj.at("explicit").get<bool>();
    if (!fj.at("mmd").is_null()) {
      f.majmin = MajMin{fj.at("maj").get<double>(), fj.at("min").get<double>(), fj.at("n_maj").get<std::size_t>(),
                        fj.at("n_min").get<std::size_t>()};
    } else {
      f.undefined_reason = fj.value("undefined", "");
    }
    r.factors.push_back(std::move(f));
  }
  for (const auto& t : j.at("tail")) {
    std::optional<double> v;
    if (!t.at("acc").is_null()) v = t.at("acc").get<double>();
    r.tail.emplace_back(t.at("beta").get<double>(), v);
  }
  if (j.contains("iosm")) {
    std::map<GroupKey, double> iosm;
    for (const auto& e : j.at("iosm")) {
      iosm.emplace(GroupKey{e.at("y").get<int>(), e.at("b").get<std::vector<int>>()}, e.at("delta").get<double>());
    }
    r.iosm = std::move(iosm);
  }
  return r;
}

std::string SerializeReports(std::span<const EvalReport> reports) {
  std::string out = Json{{"format", "biasbench.eval_report"}, {"version", kReportVersion}, {"count", reports.size()}}.dump();
  out.push_back('\n');
  for (const auto& r : reports) {
    out += ToJson(r).dump();
    out.push_back('\n');
  }
  return out;
}

std::vector<EvalReport> ParseReports(std::string_view text) {
  std::vector<EvalReport> out;
  std::size_t pos = 0;
  bool header = true;
  std::size_t expected = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw IngestionError(std::string("eval report: ") + e.what());
    }
    if (header) {
      if (j.value("format", "") != "biasbench.eval_report" || j.value("version", 0) != kReportVersion) {
        throw IngestionError("eval report: unsupported header");
      }
      expected = j.at("count").get<std::size_t>();
      header = false;
    } else {
      out.push_back(EvalReportFromJson(j));
    }
  }
  if (header) throw IngestionError("eval report: empty input");
  if (out.size() != expected) throw IngestionError("eval report: truncated input");
  return out;
}

}  // namespace biasbench::metrics
