#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "segdebias/metrics.hpp"
#include "support/oracles.hpp"
#include "support/tmpdir.hpp"

using namespace segdebias;

namespace {

std::vector<GroupedPrediction> make_group(int group, int total, int correct) {
  std::vector<GroupedPrediction> out;
  for (int i = 0; i < total; ++i) {
    GroupedPrediction p;
    p.group_id = group;
    p.true_class = 0;
    p.predicted_class = i < correct ? 0 : 1;
    out.push_back(p);
  }
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

TEST_CASE("group metrics basics") {
  auto preds = make_group(0, 4, 4);
  auto g1 = make_group(1, 4, 4);
  preds.insert(preds.end(), g1.begin(), g1.end());
  const GroupMetrics all = group_metrics(preds);
  CHECK(all.avg == 1.0);
  CHECK(all.wg == 1.0);
  CHECK(all.gap == 0.0);

  auto uneven = make_group(0, 10, 5);
  auto g2 = make_group(1, 10, 10);
  uneven.insert(uneven.end(), g2.begin(), g2.end());
  const GroupMetrics m = group_metrics(uneven);
  CHECK(m.avg == doctest::Approx(0.75));
  CHECK(m.wg == doctest::Approx(0.5));
  CHECK(m.gap == doctest::Approx(0.25));

  CHECK_THROWS_AS(group_metrics({}), Error);
  try {
    group_metrics(make_group(0, 4, 4), std::vector<int>{0, 3});
    FAIL("expected empty-group error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::input);
    CHECK(std::string(e.what()).find('3') != std::string::npos);
  }
}

TEST_CASE("the published headline arithmetic: 88.2 - 71.6 = 16.6") {
  // group 0: 179/250 = 71.6%; group 1: 703/750 -> overall 882/1000 = 88.2%
  auto preds = make_group(0, 250, 179);
  auto g1 = make_group(1, 750, 703);
  preds.insert(preds.end(), g1.begin(), g1.end());
  const GroupMetrics m = group_metrics(preds);
  CHECK(m.wg * 100.0 == doctest::Approx(71.6).epsilon(1e-9));
  CHECK(m.avg * 100.0 == doctest::Approx(88.2).epsilon(1e-9));
  CHECK(m.gap * 100.0 == doctest::Approx(16.6).epsilon(1e-9));
}

TEST_CASE("gap identity and worst-group bound on randomized prediction sets") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> n_groups(2, 6);
  std::uniform_int_distribution<int> group_size(1, 40);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<GroupedPrediction> preds;
    const int k = n_groups(rng);
    for (int g = 0; g < k; ++g) {
      const int n = group_size(rng);
      for (int i = 0; i < n; ++i) {
        GroupedPrediction p;
        p.group_id = g;
        p.true_class = coin(rng);
        p.predicted_class = coin(rng);
        preds.push_back(p);
      }
    }
    const GroupMetrics m = group_metrics(preds);
    CHECK(m.gap == m.avg - m.wg); // exact identity
    CHECK(m.wg <= m.avg);
  }
}

TEST_CASE("attention IoU on the specified examples") {
  PatchMask target = PatchMask::zeros(2);
  target.at(0, 0) = 1;

  AttentionMap peaked{2, {0.7, 0.1, 0.1, 0.1}};
  AttentionIoUResult r = attention_iou(peaked, target);
  CHECK(r.threshold == doctest::Approx(0.7));
  CHECK(r.selected_patches == 1);
  CHECK(r.iou == doctest::Approx(1.0));

  // uniform map: every patch ties at tau, all four are selected
  AttentionMap uniform{2, {0.25, 0.25, 0.25, 0.25}};
  PatchMask two = PatchMask::zeros(2);
  two.at(0, 0) = two.at(0, 1) = 1;
  r = attention_iou(uniform, two);
  CHECK(r.threshold == doctest::Approx(0.25));
  CHECK(r.selected_patches == 4);
  CHECK(r.iou == doctest::Approx(0.5));

  AttentionMap sorted_map{2, {0.4, 0.3, 0.2, 0.1}};
  r = attention_iou(sorted_map, two);
  CHECK(r.threshold == doctest::Approx(0.3));
  CHECK(r.selected_patches == 2);
  CHECK(r.iou == doctest::Approx(1.0));
}

TEST_CASE("attention IoU errors and flags") {
  PatchMask target = PatchMask::zeros(2);
  target.at(0, 0) = 1;
  AttentionMap zero{2, {0.0, 0.0, 0.0, 0.0}};
  CHECK_THROWS_AS(attention_iou(zero, target), Error);

  AttentionMap ok{2, {0.5, 0.3, 0.1, 0.1}};
  const AttentionIoUResult flagged = attention_iou(ok, PatchMask::zeros(2));
  CHECK(flagged.empty_target);
  CHECK(flagged.iou == 0.0);

  // IoU 1 iff the selected set equals the target set
  PatchMask exact = PatchMask::zeros(2);
  exact.at(0, 0) = 1;
  CHECK(attention_iou(AttentionMap{2, {0.6, 0.2, 0.1, 0.1}}, exact).iou == 1.0);
  PatchMask super = exact;
  super.at(1, 1) = 1;
  CHECK(attention_iou(AttentionMap{2, {0.6, 0.2, 0.1, 0.1}}, super).iou < 1.0);
}

TEST_CASE("attention IoU equals the brute-force threshold search") {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 200; ++trial) {
    const AttentionMap map = oracles::random_quantized_map(4, rng);
    const PatchMask target = oracles::random_patch_mask(4, rng);
    const AttentionIoUResult fast = attention_iou(map, target);
    const oracles::IoUOracleResult slow = oracles::iou_brute_force(map, target);
    CHECK(fast.threshold == slow.threshold);
    CHECK(fast.selected_patches == static_cast<int>(slow.selected.size()));
    CHECK(fast.iou == slow.iou);
  }
}

TEST_CASE("delta similarities and antisymmetry") {
  const Embedding p1{{1, 0, 0}};
  const Embedding p2{{0, 1, 0}};
  const Embedding nt{{0.3, 0.2, std::sqrt(1 - 0.09 - 0.04)}};
  const Embedding full{{0.6, 0.1, std::sqrt(1 - 0.36 - 0.01)}};

  const DeltaPair d = delta_similarities(nt, full, p1, p2);
  CHECK(d.delta_nontarget == doctest::Approx(0.1));
  CHECK(d.delta_full == doctest::Approx(0.5));

  const DeltaPair same = delta_similarities(nt, full, p1, p1);
  CHECK(same.delta_nontarget == 0.0);
  CHECK(same.delta_full == 0.0);

  const DeltaPair swapped = delta_similarities(nt, full, p2, p1);
  CHECK(swapped.delta_nontarget == doctest::Approx(-d.delta_nontarget));
  CHECK(swapped.delta_full == doctest::Approx(-d.delta_full));
}

TEST_CASE("pearson correlation") {
  std::vector<DeltaPair> line;
  std::vector<DeltaPair> anti;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double x = dist(rng);
    line.push_back({x, 2.0 * x});
    anti.push_back({x, -x});
  }
  CHECK(correlation(line) == doctest::Approx(1.0));
  CHECK(correlation(anti) == doctest::Approx(-1.0));

  // swapping prompt order negates both axes; the coefficient is unchanged
  std::vector<DeltaPair> noisy;
  for (int i = 0; i < 50; ++i) noisy.push_back({dist(rng), dist(rng)});
  std::vector<DeltaPair> negated = noisy;
  for (auto& p : negated) {
    p.delta_nontarget = -p.delta_nontarget;
    p.delta_full = -p.delta_full;
  }
  CHECK(correlation(noisy) == doctest::Approx(correlation(negated)));

  CHECK_THROWS_AS(correlation({}), Error);
  CHECK_THROWS_AS(correlation({{0.1, 0.2}}), Error);
  CHECK_THROWS_AS(correlation({{0.5, 0.1}, {0.5, 0.9}}), Error); // zero x-variance
}

TEST_CASE("report emission: schema, determinism, error contract") {
  testsupport::TempDir tmp("report");
  CHECK_THROWS_AS(emit_report({}, ReportFormat::csv, tmp.path / "empty.csv"), Error);

  ReportRow row;
  row.run_id = "run-1";
  row.dataset = "synthetic";
  row.variant = "full";
  row.wg = 0.716;
  row.avg = 0.882;
  row.gap = row.avg - row.wg;
  row.mean_attention_iou = 0.5;
  row.correlation = 0.3;
  row.n_samples = 100;
  row.per_group[0] = GroupStat{50, 40};
  row.per_group[1] = GroupStat{50, 45};

  emit_report({row}, ReportFormat::csv, tmp.path / "a.csv");
  emit_report({row}, ReportFormat::csv, tmp.path / "b.csv");
  const std::string a = slurp(tmp.path / "a.csv");
  CHECK(a == slurp(tmp.path / "b.csv")); // byte-identical
  CHECK(a.find("run_id,dataset,variant,wg,avg,gap,mean_attention_iou,correlation,n_samples") == 0);
  CHECK(a.find("run-1,synthetic,full,") != std::string::npos);

  emit_report({row}, ReportFormat::json, tmp.path / "a.json");
  const std::string j = slurp(tmp.path / "a.json");
  CHECK(j.find("\"per_group\"") != std::string::npos);

  write_delta_csv({{0.1, 0.2}, {0.3, 0.4}}, tmp.path / "d.csv");
  CHECK(slurp(tmp.path / "d.csv") == "delta_nontarget,delta_full\n0.1,0.2\n0.3,0.4\n");
}
