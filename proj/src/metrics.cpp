#include "segdebias/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "segdebias/encoder.hpp"

namespace segdebias {

GroupMetrics group_metrics(const std::vector<GroupedPrediction>& predictions,
                           const std::optional<std::vector<int>>& expected_groups) {
  if (predictions.empty()) raise(ErrorKind::input, "group_metrics: no predictions");

  GroupMetrics m;
  int correct_total = 0;
  for (const auto& p : predictions) {
    auto& stat = m.per_group[p.group_id];
    stat.total += 1;
    if (p.predicted_class == p.true_class) {
      stat.correct += 1;
      correct_total += 1;
    }
  }
  if (expected_groups) {
    for (int g : *expected_groups) {
      if (!m.per_group.count(g)) {
        raise(ErrorKind::input, "group_metrics: group " + std::to_string(g) + " is empty");
      }
    }
  }

  m.avg = static_cast<double>(correct_total) / predictions.size();
  m.wg = 1.0;
  for (const auto& [id, stat] : m.per_group) m.wg = std::min(m.wg, stat.accuracy());
  m.gap = m.avg - m.wg;
  return m;
}

AttentionIoUResult attention_iou(const AttentionMap& attention, const PatchMask& target) {
  if (attention.grid != target.grid) raise(ErrorKind::input, "attention_iou: grid shape mismatch");
  if (attention.values.empty()) raise(ErrorKind::input, "attention_iou: empty attention map");
  double total = 0.0;
  for (double v : attention.values) {
    if (v < 0.0) raise(ErrorKind::input, "attention_iou: negative attention value");
    total += v;
  }
  if (!(total > 0.0)) raise(ErrorKind::numerical, "attention_iou: zero attention mass");

  // Threshold selection: walk distinct values in descending order and stop at
  // the largest value whose closed superlevel set captures half the mass.
  std::vector<double> distinct = attention.values;
  std::sort(distinct.begin(), distinct.end(), std::greater<double>());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  const double half = 0.5 * total;
  const double slack = 1e-9 * total; // tolerate float noise at exact-tie boundaries
  double tau = distinct.back();
  double cumulative = 0.0;
  for (double v : distinct) {
    for (double a : attention.values) {
      if (a == v) cumulative += a;
    }
    if (cumulative >= half - slack) {
      tau = v;
      break;
    }
  }

  AttentionIoUResult result;
  result.threshold = tau;
  int inter = 0;
  int uni = 0;
  for (std::size_t i = 0; i < attention.values.size(); ++i) {
    const bool in_s = attention.values[i] >= tau;
    const bool in_m = target.data[i] == 1;
    if (in_s) result.selected_patches += 1;
    if (in_s && in_m) inter += 1;
    if (in_s || in_m) uni += 1;
  }
  if (target.count_ones() == 0) {
    result.empty_target = true;
    result.iou = 0.0;
    return result;
  }
  result.iou = uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
  return result;
}

DeltaPair delta_similarities(const Embedding& nontarget_emb, const Embedding& full_emb,
                             const Embedding& prompt1, const Embedding& prompt2) {
  DeltaPair d;
  d.delta_nontarget =
      cosine_similarity(nontarget_emb, prompt1) - cosine_similarity(nontarget_emb, prompt2);
  d.delta_full = cosine_similarity(full_emb, prompt1) - cosine_similarity(full_emb, prompt2);
  return d;
}

double correlation(const std::vector<DeltaPair>& pairs) {
  if (pairs.size() < 2) raise(ErrorKind::numerical, "correlation: need at least 2 pairs");
  double mx = 0.0, my = 0.0;
  for (const auto& p : pairs) {
    mx += p.delta_nontarget;
    my += p.delta_full;
  }
  mx /= pairs.size();
  my /= pairs.size();
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& p : pairs) {
    const double dx = p.delta_nontarget - mx;
    const double dy = p.delta_full - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    raise(ErrorKind::numerical, "correlation: undefined (zero variance in a coordinate)");
  }
  return sxy / std::sqrt(sxx * syy);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

void emit_report(const std::vector<ReportRow>& rows, ReportFormat format,
                 const std::filesystem::path& path) {
  if (rows.empty()) raise(ErrorKind::input, "emit_report: no result rows");
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::io, "emit_report: cannot write " + path.string());

  if (format == ReportFormat::csv) {
    out << "run_id,dataset,variant,wg,avg,gap,mean_attention_iou,correlation,n_samples\n";
    for (const auto& r : rows) {
      out << r.run_id << ',' << r.dataset << ',' << r.variant << ',' << format_double(r.wg) << ','
          << format_double(r.avg) << ',' << format_double(r.gap) << ','
          << format_double(r.mean_attention_iou) << ',' << format_double(r.correlation) << ','
          << r.n_samples << '\n';
    }
  } else {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& r : rows) {
      nlohmann::json row;
      row["run_id"] = r.run_id;
      row["dataset"] = r.dataset;
      row["variant"] = r.variant;
      row["wg"] = r.wg;
      row["avg"] = r.avg;
      row["gap"] = r.gap;
      row["mean_attention_iou"] = r.mean_attention_iou;
      row["correlation"] = r.correlation;
      row["n_samples"] = r.n_samples;
      nlohmann::json groups = nlohmann::json::object();
      for (const auto& [id, stat] : r.per_group) {
        groups[std::to_string(id)] = {{"total", stat.total},
                                      {"correct", stat.correct},
                                      {"accuracy", stat.accuracy()}};
      }
      row["per_group"] = groups;
      doc.push_back(row);
    }
    out << doc.dump(2) << '\n';
  }
  if (!out) raise(ErrorKind::io, "emit_report: write failed for " + path.string());
}

void write_delta_csv(const std::vector<DeltaPair>& pairs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::io, "write_delta_csv: cannot write " + path.string());
  out << "delta_nontarget,delta_full\n";
  for (const auto& p : pairs) {
    out << format_double(p.delta_nontarget) << ',' << format_double(p.delta_full) << '\n';
  }
  if (!out) raise(ErrorKind::io, "write_delta_csv: write failed for " + path.string());
}

} // namespace segdebias
