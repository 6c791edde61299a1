#include "segdebias/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "segdebias/png_io.hpp"

namespace segdebias {

namespace {

struct Rgb {
  double r, g, b;
};

// Foreground shape colors per class and stripe palettes per background
// family, chosen so both the shape and the background are linearly separable
// color features a small encoder can latch onto.
constexpr Rgb kShapeColor[2] = {{0.92, 0.93, 0.88}, {0.55, 0.12, 0.60}};
constexpr Rgb kStripeA[2] = {{0.15, 0.35, 0.75}, {0.55, 0.40, 0.15}};
constexpr Rgb kStripeB[2] = {{0.25, 0.55, 0.85}, {0.42, 0.52, 0.20}};
constexpr int kStripeBand = 4;

double quantize8(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

bool inside_shape(int shape_class, int dx, int dy, double radius) {
  if (shape_class == 0) return dx * dx + dy * dy <= radius * radius;
  return std::abs(dx) + std::abs(dy) <= radius;
}

int shape_pixel_count(int shape_class, double radius) {
  const int reach = static_cast<int>(std::ceil(radius));
  int count = 0;
  for (int dy = -reach; dy <= reach; ++dy) {
    for (int dx = -reach; dx <= reach; ++dx) {
      if (inside_shape(shape_class, dx, dy, radius)) ++count;
    }
  }
  return count;
}

// Picks the radius whose rasterized pixel count is closest to the requested
// coverage; counts are translation-invariant for integer centers.
double choose_radius(int shape_class, int target_pixels, int image_size) {
  double best_r = 1.0;
  int best_err = std::numeric_limits<int>::max();
  for (double r = 1.0; r <= image_size / 2.0; r += 0.05) {
    const int err = std::abs(shape_pixel_count(shape_class, r) - target_pixels);
    if (err < best_err) {
      best_err = err;
      best_r = r;
    }
  }
  return best_r;
}

} // namespace

void validate(const GeneratorParams& p) {
  if (p.n_samples < 0) raise(ErrorKind::config, "generator: n_samples must be >= 0");
  if (p.image_size < 8) raise(ErrorKind::config, "generator: image_size must be >= 8");
  if (!(p.correlation >= 0.5 && p.correlation <= 1.0)) {
    raise(ErrorKind::config, "generator: correlation must be in [0.5, 1]");
  }
  if (!(p.class_balance >= 0.0 && p.class_balance <= 1.0)) {
    raise(ErrorKind::config, "generator: class_balance must be in [0, 1]");
  }
  if (!(p.target_coverage > 0.0 && p.target_coverage <= 0.5)) {
    raise(ErrorKind::config, "generator: target_coverage must be in (0, 0.5]");
  }
}

GenerationResult generate(const GeneratorParams& params) {
  validate(params);
  GenerationResult result;
  if (params.n_samples == 0) return result;

  const int n = params.n_samples;
  const int n_class0 = static_cast<int>(std::llround(n * params.class_balance));
  const int n_class1 = n - n_class0;
  const int aligned0 = static_cast<int>(std::llround(n_class0 * params.correlation));
  const int aligned1 = static_cast<int>(std::llround(n_class1 * params.correlation));

  // group_of(c, b): class-aligned background means b == c.
  result.group_counts[group_of(0, 0)] = aligned0;
  result.group_counts[group_of(0, 1)] = n_class0 - aligned0;
  result.group_counts[group_of(1, 0)] = n_class1 - aligned1;
  result.group_counts[group_of(1, 1)] = aligned1;

  const double probs[4] = {
      params.class_balance * params.correlation,
      params.class_balance * (1.0 - params.correlation),
      (1.0 - params.class_balance) * (1.0 - params.correlation),
      (1.0 - params.class_balance) * params.correlation,
  };
  for (int g = 0; g < 4; ++g) {
    if (probs[g] > 0.0 && result.group_counts[g] == 0) {
      raise(ErrorKind::generation,
            "group " + std::to_string(g) + " (class " + std::to_string(g / 2) + ", background " +
                std::to_string(g % 2) + ") would be empty at n_samples=" + std::to_string(n));
    }
  }

  std::vector<int> groups;
  groups.reserve(n);
  for (int g = 0; g < 4; ++g) groups.insert(groups.end(), result.group_counts[g], g);

  std::mt19937_64 rng(params.seed);
  std::shuffle(groups.begin(), groups.end(), rng);

  const int S = params.image_size;
  const int target_pixels = static_cast<int>(std::llround(params.target_coverage * S * S));
  const double radius[2] = {choose_radius(0, target_pixels, S), choose_radius(1, target_pixels, S)};

  std::uniform_int_distribution<int> phase_dist(0, 2 * kStripeBand - 1);
  std::uniform_real_distribution<double> jitter(-0.03, 0.03);

  result.samples.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int g = groups[i];
    const int cls = g / 2;
    const int bg = g % 2;

    const int phase = phase_dist(rng);
    const double brightness = jitter(rng);
    const double cj[3] = {jitter(rng), jitter(rng), jitter(rng)};
    const int reach = static_cast<int>(std::ceil(radius[cls]));
    const int margin = reach + 1;
    std::uniform_int_distribution<int> center_dist(margin, S - 1 - margin);
    const int cx = center_dist(rng);
    const int cy = center_dist(rng);

    Sample sample;
    sample.id = [&] {
      std::ostringstream ss;
      ss << "sample_";
      ss.width(6);
      ss.fill('0');
      ss << i;
      return ss.str();
    }();
    sample.class_label = cls;
    sample.group_id = g;
    sample.image = ImageTensor::zeros(S, S, 3);
    sample.target_mask = BinaryMask::zeros(S, S);
    sample.has_mask = true;

    for (int y = 0; y < S; ++y) {
      for (int x = 0; x < S; ++x) {
        const int coord = bg == 0 ? y : x; // horizontal vs vertical stripes
        const bool band = ((coord + phase) / kStripeBand) % 2 == 0;
        const Rgb& c = band ? kStripeA[bg] : kStripeB[bg];
        sample.image.at(y, x, 0) = quantize8(c.r + brightness);
        sample.image.at(y, x, 1) = quantize8(c.g + brightness);
        sample.image.at(y, x, 2) = quantize8(c.b + brightness);
      }
    }
    const Rgb& fg = kShapeColor[cls];
    for (int dy = -reach; dy <= reach; ++dy) {
      for (int dx = -reach; dx <= reach; ++dx) {
        if (!inside_shape(cls, dx, dy, radius[cls])) continue;
        const int y = cy + dy;
        const int x = cx + dx;
        sample.image.at(y, x, 0) = quantize8(fg.r + cj[0]);
        sample.image.at(y, x, 1) = quantize8(fg.g + cj[1]);
        sample.image.at(y, x, 2) = quantize8(fg.b + cj[2]);
        sample.target_mask.at(y, x) = 1;
      }
    }
    result.samples.push_back(std::move(sample));
  }
  return result;
}

ImageTensor textured_background_composite(const Sample& sample, int background_family,
                                          std::uint64_t seed) {
  if (background_family != 0 && background_family != 1) {
    raise(ErrorKind::input, "textured_background_composite: background family must be 0 or 1");
  }
  const int h = sample.image.height;
  const int w = sample.image.width;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> phase_dist(0, 2 * kStripeBand - 1);
  const int phase = phase_dist(rng);
  ImageTensor out = ImageTensor::zeros(h, w, sample.image.channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (sample.has_mask && sample.target_mask.at(y, x) == 1) {
        for (int c = 0; c < out.channels; ++c) out.at(y, x, c) = sample.image.at(y, x, c);
        continue;
      }
      const int coord = background_family == 0 ? y : x;
      const bool band = ((coord + phase) / kStripeBand) % 2 == 0;
      const Rgb& c = band ? kStripeA[background_family] : kStripeB[background_family];
      out.at(y, x, 0) = quantize8(c.r);
      out.at(y, x, 1) = quantize8(c.g);
      out.at(y, x, 2) = quantize8(c.b);
    }
  }
  return out;
}

SplitResult split(const std::vector<Sample>& samples, const SplitFractions& fractions,
                  std::uint64_t seed) {
  const double f[3] = {fractions.train, fractions.val, fractions.test};
  double sum = f[0] + f[1] + f[2];
  if (f[0] < 0 || f[1] < 0 || f[2] < 0 || std::abs(sum - 1.0) > 1e-9) {
    raise(ErrorKind::input, "split: fractions must be non-negative and sum to 1");
  }
  int positive_splits = 0;
  for (double v : f) {
    if (v > 0.0) ++positive_splits;
  }

  std::map<int, std::vector<std::size_t>> by_group;
  for (std::size_t i = 0; i < samples.size(); ++i) by_group[samples[i].group_id].push_back(i);

  std::mt19937_64 rng(seed);
  SplitResult result;
  std::vector<Sample>* outs[3] = {&result.train, &result.val, &result.test};
  const char* names[3] = {"train", "val", "test"};

  for (auto& [group, indices] : by_group) {
    const int n_g = static_cast<int>(indices.size());
    if (n_g < positive_splits) {
      raise(ErrorKind::stratification, "split: group " + std::to_string(group) + " has " +
                                           std::to_string(n_g) + " samples, fewer than the " +
                                           std::to_string(positive_splits) + " requested splits");
    }
    std::shuffle(indices.begin(), indices.end(), rng);

    // Largest-remainder rounding keeps every split within one sample of its
    // ideal group share.
    int counts[3];
    double remainders[3];
    int assigned = 0;
    for (int s = 0; s < 3; ++s) {
      const double ideal = n_g * f[s];
      counts[s] = static_cast<int>(std::floor(ideal));
      remainders[s] = ideal - counts[s];
      assigned += counts[s];
    }
    int leftover = n_g - assigned;
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (remainders[a] != remainders[b]) return remainders[a] > remainders[b];
      return a < b;
    });
    for (int k = 0; k < leftover; ++k) counts[order[static_cast<std::size_t>(k) % 3]] += 1;

    std::size_t cursor = 0;
    for (int s = 0; s < 3; ++s) {
      for (int k = 0; k < counts[s]; ++k) {
        Sample copy = samples[indices[cursor++]];
        copy.split = names[s];
        outs[s]->push_back(std::move(copy));
      }
    }
  }
  return result;
}

void write_dataset(const std::vector<Sample>& samples, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "masks");
  std::ofstream manifest(dir / "manifest.csv", std::ios::binary);
  if (!manifest) raise(ErrorKind::io, "cannot write manifest under " + dir.string());
  manifest << "image_path,mask_path,class_label,group_id,split\n";
  for (const auto& s : samples) {
    const std::string image_rel = "images/" + s.id + ".png";
    write_image_png(s.image, dir / image_rel);
    std::string mask_rel;
    if (s.has_mask) {
      mask_rel = "masks/" + s.id + ".png";
      write_mask_png(s.target_mask, dir / mask_rel);
    }
    manifest << image_rel << ',' << mask_rel << ',' << s.class_label << ',' << s.group_id << ','
             << s.split << '\n';
  }
  if (!manifest) raise(ErrorKind::io, "manifest write failed under " + dir.string());
}

namespace {

int parse_int_field(const std::string& field, int line_no, const char* what) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    raise(ErrorKind::input, "manifest line " + std::to_string(line_no) + ": bad " + what + " '" +
                                field + "'");
  }
  return value;
}

} // namespace

std::vector<Sample> load_manifest(const std::filesystem::path& manifest_csv) {
  std::ifstream in(manifest_csv, std::ios::binary);
  if (!in) raise(ErrorKind::io, "cannot open manifest: " + manifest_csv.string());
  const std::filesystem::path base = manifest_csv.parent_path();

  std::string line;
  if (!std::getline(in, line)) raise(ErrorKind::input, "manifest is empty (missing header)");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "image_path,mask_path,class_label,group_id,split") {
    raise(ErrorKind::input, "manifest header mismatch: '" + line + "'");
  }

  std::vector<Sample> samples;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    if (fields.size() != 5) {
      raise(ErrorKind::input,
            "manifest line " + std::to_string(line_no) + ": expected 5 fields, got " +
                std::to_string(fields.size()));
    }

    Sample s;
    const std::filesystem::path image_path = base / fields[0];
    s.id = image_path.stem().string();
    s.image = read_image_png(image_path);
    if (fields[1].empty()) {
      s.has_mask = false;
    } else {
      s.has_mask = true;
      s.target_mask = read_mask_png(base / fields[1]);
      if (s.target_mask.height != s.image.height || s.target_mask.width != s.image.width) {
        raise(ErrorKind::input,
              "manifest line " + std::to_string(line_no) + ": mask/image dimensions differ");
      }
    }
    s.class_label = parse_int_field(fields[2], line_no, "class_label");
    s.group_id = parse_int_field(fields[3], line_no, "group_id");
    s.split = fields[4];
    if (s.split != "train" && s.split != "val" && s.split != "test") {
      raise(ErrorKind::input,
            "manifest line " + std::to_string(line_no) + ": split must be train/val/test, got '" +
                s.split + "'");
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

} // namespace segdebias
