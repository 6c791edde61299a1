#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <set>

#include "segdebias/dataset.hpp"
#include "segdebias/png_io.hpp"
#include "segdebias/training.hpp"
#include "segdebias/toy_encoder.hpp"
#include "support/tmpdir.hpp"

using namespace segdebias;

TEST_CASE("group counts follow exact-count assignment") {
  GeneratorParams params;
  params.n_samples = 1000;
  params.correlation = 0.9;
  params.class_balance = 0.5;
  params.seed = 1;
  const GenerationResult result = generate(params);
  CHECK(result.group_counts == std::array<int, 4>{450, 50, 50, 450});
  CHECK(result.samples.size() == 1000);

  std::array<int, 4> counted{};
  for (const auto& s : result.samples) {
    counted[static_cast<std::size_t>(s.group_id)] += 1;
    CHECK(s.group_id / 2 == s.class_label); // group encodes (class, background)
    CHECK(s.target_mask.count_ones() > 0);
  }
  CHECK(counted == result.group_counts);
}

TEST_CASE("degenerate correlation 1.0 empties the minority groups without error") {
  GeneratorParams params;
  params.n_samples = 40;
  params.correlation = 1.0;
  params.seed = 2;
  const GenerationResult result = generate(params);
  CHECK(result.group_counts[1] == 0);
  CHECK(result.group_counts[2] == 0);
  for (const auto& s : result.samples) CHECK(s.group_id % 2 == s.class_label);
}

TEST_CASE("infeasible proportions raise a generation error naming the group") {
  GeneratorParams params;
  params.n_samples = 5;
  params.correlation = 0.9;
  try {
    generate(params);
    FAIL("expected generation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::generation);
    CHECK(std::string(e.what()).find("group") != std::string::npos);
  }
}

TEST_CASE("n_samples = 0 produces an empty dataset") {
  GeneratorParams params;
  params.n_samples = 0;
  const GenerationResult result = generate(params);
  CHECK(result.samples.empty());
}

TEST_CASE("target masks cover the requested fraction within 10 percent") {
  GeneratorParams params;
  params.n_samples = 60;
  params.seed = 3;
  const GenerationResult result = generate(params);
  const double want = params.target_coverage * params.image_size * params.image_size;
  for (const auto& s : result.samples) {
    const double got = s.target_mask.count_ones();
    CHECK(std::abs(got - want) <= 0.1 * want);
  }
}

TEST_CASE("mask marks exactly the composited foreground") {
  GeneratorParams params;
  params.n_samples = 20;
  params.seed = 4;
  const GenerationResult result = generate(params);
  for (const auto& s : result.samples) {
    // foreground pixels carry the class color (within jitter), background
    // pixels the texture palette; the two families are far apart
    const double fg_red_min = s.class_label == 0 ? 0.8 : 0.4;
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) {
        const double r = s.image.at(y, x, 0);
        const double g = s.image.at(y, x, 1);
        if (s.target_mask.at(y, x) == 1) {
          if (s.class_label == 0) {
            CHECK(r > fg_red_min); // near-white disk
          } else {
            CHECK(r > fg_red_min);
            CHECK(g < 0.25); // purple diamond: low green
          }
        }
      }
    }
  }
}

TEST_CASE("generation is bit-deterministic under a fixed seed") {
  GeneratorParams params;
  params.n_samples = 30;
  params.seed = 9;
  const GenerationResult a = generate(params);
  const GenerationResult b = generate(params);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].image == b.samples[i].image);
    CHECK(a.samples[i].target_mask == b.samples[i].target_mask);
    CHECK(a.samples[i].group_id == b.samples[i].group_id);
  }
}

TEST_CASE("manifest round trip restores samples bit-exactly") {
  testsupport::TempDir tmp("manifest");
  GeneratorParams params;
  params.n_samples = 12;
  params.seed = 6;
  GenerationResult gen = generate(params);
  SplitResult sp = split(gen.samples, SplitFractions{0.5, 0.0, 0.5}, 1);
  std::vector<Sample> all = sp.train;
  all.insert(all.end(), sp.test.begin(), sp.test.end());

  write_dataset(all, tmp.path);
  const std::vector<Sample> loaded = load_manifest(tmp.path / "manifest.csv");
  REQUIRE(loaded.size() == all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(loaded[i].id == all[i].id);
    CHECK(loaded[i].image == all[i].image);
    CHECK(loaded[i].target_mask == all[i].target_mask);
    CHECK(loaded[i].class_label == all[i].class_label);
    CHECK(loaded[i].group_id == all[i].group_id);
    CHECK(loaded[i].split == all[i].split);
  }
}

TEST_CASE("manifest loader error and edge contracts") {
  testsupport::TempDir tmp("manifest_err");

  { // empty manifest -> empty list
    std::ofstream out(tmp.path / "empty.csv");
    out << "image_path,mask_path,class_label,group_id,split\n";
  }
  CHECK(load_manifest(tmp.path / "empty.csv").empty());

  { // malformed row reports the line number
    std::ofstream out(tmp.path / "bad.csv");
    out << "image_path,mask_path,class_label,group_id,split\n";
    out << "only,three,fields\n";
  }
  try {
    load_manifest(tmp.path / "bad.csv");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::input);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  { // nonexistent image path -> io error naming the path
    std::ofstream out(tmp.path / "missing.csv");
    out << "image_path,mask_path,class_label,group_id,split\n";
    out << "images/nope.png,,0,0,test\n";
  }
  try {
    load_manifest(tmp.path / "missing.csv");
    FAIL("expected io error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::io);
    CHECK(std::string(e.what()).find("nope.png") != std::string::npos);
  }

  { // empty mask_path -> sample flagged mask-less
    GeneratorParams params;
    params.n_samples = 4;
    params.correlation = 1.0;
    params.seed = 8;
    GenerationResult gen = generate(params);
    write_image_png(gen.samples[0].image, tmp.path / "img.png");
    std::ofstream out(tmp.path / "maskless.csv");
    out << "image_path,mask_path,class_label,group_id,split\n";
    out << "img.png,,1,2,test\n";
  }
  const auto loaded = load_manifest(tmp.path / "maskless.csv");
  REQUIRE(loaded.size() == 1);
  CHECK_FALSE(loaded[0].has_mask);
}

TEST_CASE("split: determinism, stratification, degenerate fractions") {
  GeneratorParams params;
  params.n_samples = 200;
  params.seed = 10;
  const GenerationResult gen = generate(params);

  const SplitResult a = split(gen.samples, SplitFractions{0.6, 0.1, 0.3}, 33);
  const SplitResult b = split(gen.samples, SplitFractions{0.6, 0.1, 0.3}, 33);
  CHECK(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(a.train[i].id == b.train[i].id);

  // disjoint and exhaustive
  std::set<std::string> ids;
  for (const auto* part : {&a.train, &a.val, &a.test}) {
    for (const auto& s : *part) CHECK(ids.insert(s.id).second);
  }
  CHECK(ids.size() == gen.samples.size());

  // per-group proportions within one sample of the ideal share
  std::map<int, int> group_total;
  for (const auto& s : gen.samples) group_total[s.group_id] += 1;
  const double fractions[3] = {0.6, 0.1, 0.3};
  const std::vector<Sample>* parts[3] = {&a.train, &a.val, &a.test};
  for (int part = 0; part < 3; ++part) {
    std::map<int, int> got;
    for (const auto& s : *parts[part]) got[s.group_id] += 1;
    for (const auto& [g, total] : group_total) {
      CHECK(std::abs(got[g] - total * fractions[part]) <= 1.0);
    }
  }

  const SplitResult everything = split(gen.samples, SplitFractions{1.0, 0.0, 0.0}, 1);
  CHECK(everything.train.size() == gen.samples.size());
  CHECK(everything.val.empty());
  CHECK(everything.test.empty());

  CHECK_THROWS_AS(split(gen.samples, SplitFractions{0.5, 0.5, 0.5}, 1), Error);

  // a group smaller than the number of requested splits cannot be stratified
  GeneratorParams tiny;
  tiny.n_samples = 8;
  tiny.correlation = 0.75; // exactly one sample in each minority group
  const GenerationResult small = generate(tiny);
  try {
    split(small.samples, SplitFractions{0.4, 0.3, 0.3}, 1);
    FAIL("expected stratification error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::stratification);
  }
}

TEST_CASE("bias induction reduces the contrastive loss deterministically") {
  GeneratorParams params;
  params.n_samples = 40;
  params.correlation = 0.9;
  params.seed = 21;
  const GenerationResult gen = generate(params);
  const std::vector<TextPrompt> prompts = {{"A photo of a disk"}, {"A photo of a diamond"}};

  BiasInductionOptions opts;
  opts.steps = 10;
  opts.batch_size = 16;
  opts.seed = 5;

  ToyEncoder enc{EncoderConfig{}};
  const BiasInductionReport report = fit_contrastive(enc, gen.samples, prompts, opts);
  REQUIRE(report.loss_history.size() == 10);
  CHECK(report.loss_history.back() < report.loss_history.front());

  ToyEncoder enc2{EncoderConfig{}};
  const BiasInductionReport report2 = fit_contrastive(enc2, gen.samples, prompts, opts);
  CHECK(enc.parameters() == enc2.parameters());
  CHECK(report.loss_history == report2.loss_history);
}
