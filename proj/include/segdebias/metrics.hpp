#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "segdebias/image.hpp"

namespace segdebias {

struct GroupedPrediction {
  int predicted_class = 0;
  int true_class = 0;
  int group_id = 0;
};

struct GroupStat {
  int total = 0;
  int correct = 0;
  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

struct GroupMetrics {
  double wg = 0.0;  // worst-group accuracy
  double avg = 0.0; // overall accuracy
  double gap = 0.0; // avg - wg
  std::map<int, GroupStat> per_group;
};

/// avg = overall accuracy, wg = min over groups of per-group accuracy,
/// gap = avg - wg. When expected_groups is given, a declared group with no
/// predictions is an input error naming the group.
GroupMetrics group_metrics(const std::vector<GroupedPrediction>& predictions,
                           const std::optional<std::vector<int>>& expected_groups = std::nullopt);

struct AttentionIoUResult {
  double iou = 0.0;
  double threshold = 0.0;      // tau from the cumulative-mass rule
  int selected_patches = 0;    // |S|
  bool empty_target = false;   // target vanished at patch resolution (iou fixed to 0)
};

/// Selects the smallest patch set capturing half of the attention mass
/// (all ties at the threshold value included) and returns |S n M| / |S u M|.
AttentionIoUResult attention_iou(const AttentionMap& attention, const PatchMask& target);

struct DeltaPair {
  double delta_nontarget = 0.0;
  double delta_full = 0.0;
};

/// delta_nontarget = cos(nontarget, p1) - cos(nontarget, p2);
/// delta_full likewise for the full-image embedding.
DeltaPair delta_similarities(const Embedding& nontarget_emb, const Embedding& full_emb,
                             const Embedding& prompt1, const Embedding& prompt2);

/// Pearson correlation of (delta_nontarget, delta_full). Fewer than two pairs
/// or zero variance in either coordinate is a numerical error.
double correlation(const std::vector<DeltaPair>& pairs);

struct ReportRow {
  std::string run_id;
  std::string dataset;
  std::string variant;
  double wg = 0.0;
  double avg = 0.0;
  double gap = 0.0;
  double mean_attention_iou = 0.0;
  double correlation = 0.0;
  int n_samples = 0;
  std::map<int, GroupStat> per_group; // emitted in the structured-text format
};

enum class ReportFormat { csv, json };

/// Writes rows with a deterministic column order; identical inputs produce
/// byte-identical files.
void emit_report(const std::vector<ReportRow>& rows, ReportFormat format,
                 const std::filesystem::path& path);

/// Two-column scatter export (delta_nontarget, delta_full) for
/// correlation plots.
void write_delta_csv(const std::vector<DeltaPair>& pairs, const std::filesystem::path& path);

/// Shortest round-trip decimal rendering, used for all numeric CSV output.
std::string format_double(double v);

} // namespace segdebias
