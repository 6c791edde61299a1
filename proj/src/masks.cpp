#include "segdebias/masks.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "segdebias/png_io.hpp"

namespace segdebias {

BinaryMask complement(const BinaryMask& mask) {
  BinaryMask out = mask;
  for (auto& v : out.data) v = static_cast<std::uint8_t>(1 - v);
  return out;
}

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) raise(ErrorKind::input, "mask_union: shape mismatch");
  BinaryMask out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = (a.data[i] || b.data[i]) ? 1 : 0;
  return out;
}

ImageTensor apply_mask(const ImageTensor& image, const BinaryMask& mask) {
  if (image.height != mask.height || image.width != mask.width) {
    raise(ErrorKind::input, "apply_mask: image/mask shape mismatch");
  }
  ImageTensor out = image;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const double m = mask.at(y, x);
      for (int c = 0; c < image.channels; ++c) out.at(y, x, c) = image.at(y, x, c) * m;
    }
  }
  return out;
}

PatchMask mask_to_patch_grid(const BinaryMask& mask, int patch_size, double threshold) {
  if (patch_size <= 0 || mask.height % patch_size != 0 || mask.width % patch_size != 0) {
    raise(ErrorKind::input, "mask_to_patch_grid: mask dimensions not divisible by patch size");
  }
  if (mask.height != mask.width) {
    raise(ErrorKind::input, "mask_to_patch_grid: mask must be square");
  }
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    raise(ErrorKind::input, "mask_to_patch_grid: threshold must be in (0,1]");
  }
  const int grid = mask.height / patch_size;
  const int area = patch_size * patch_size;
  PatchMask out = PatchMask::zeros(grid);
  for (int gy = 0; gy < grid; ++gy) {
    for (int gx = 0; gx < grid; ++gx) {
      int ones = 0;
      for (int py = 0; py < patch_size; ++py) {
        for (int px = 0; px < patch_size; ++px) {
          ones += mask.at(gy * patch_size + py, gx * patch_size + px);
        }
      }
      out.at(gy, gx) = (static_cast<double>(ones) / area >= threshold) ? 1 : 0;
    }
  }
  return out;
}

OracleMaskProvider::OracleMaskProvider(std::string attribute, std::map<std::string, BinaryMask> store)
    : attribute_(std::move(attribute)), store_(std::move(store)) {}

BinaryMask OracleMaskProvider::get_mask(const SegmenterRequest& request) {
  if (request.attribute != attribute_) {
    raise(ErrorKind::missing_mask,
          "oracle store holds masks for attribute '" + attribute_ + "', not '" + request.attribute + "'");
  }
  auto it = store_.find(request.sample_id);
  if (it == store_.end()) {
    raise(ErrorKind::missing_mask, "no stored mask for sample '" + request.sample_id + "'");
  }
  return it->second;
}

ExternalSegmenterAdapter::ExternalSegmenterAdapter(std::string command, std::filesystem::path workdir)
    : command_(std::move(command)), workdir_(std::move(workdir)) {
  std::filesystem::create_directories(workdir_);
}

BinaryMask ExternalSegmenterAdapter::get_mask(const SegmenterRequest& request) {
  if (request.attribute.empty()) raise(ErrorKind::input, "segmenter request attribute is empty");
  const std::string tag = "req_" + std::to_string(counter_++);
  const auto image_path = workdir_ / (tag + ".png");
  const auto request_path = workdir_ / (tag + ".json");
  const auto response_path = workdir_ / (tag + "_response.json");

  write_image_png(request.image, image_path);
  {
    nlohmann::json doc;
    doc["image_path"] = image_path.string();
    doc["attribute"] = request.attribute;
    std::ofstream out(request_path);
    out << doc.dump(2) << '\n';
    if (!out) raise(ErrorKind::io, "cannot write segmenter request: " + request_path.string());
  }

  std::ostringstream cmd;
  cmd << command_ << " '" << request_path.string() << "' '" << response_path.string() << "'";
  const int rc = std::system(cmd.str().c_str());
  if (rc != 0) {
    raise(ErrorKind::provider, "segmenter command failed with status " + std::to_string(rc));
  }

  std::ifstream in(response_path);
  if (!in) raise(ErrorKind::provider, "segmenter produced no response file");
  nlohmann::json response;
  try {
    in >> response;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::provider, std::string("malformed segmenter response: ") + e.what());
  }
  if (response.contains("error")) {
    raise(ErrorKind::provider, "segmenter error: " + response["error"].get<std::string>());
  }
  if (!response.contains("mask_path")) {
    raise(ErrorKind::provider, "segmenter response missing mask_path");
  }
  return read_mask_png(response["mask_path"].get<std::string>());
}

BinaryMask get_target_mask(const SegmenterRequest& request, MaskProvider& provider) {
  BinaryMask mask = provider.get_mask(request);
  if (mask.height != request.image.height || mask.width != request.image.width) {
    raise(ErrorKind::provider,
          "provider '" + provider.name() + "' returned a mask not aligned to the image dimensions");
  }
  return mask;
}

} // namespace segdebias
