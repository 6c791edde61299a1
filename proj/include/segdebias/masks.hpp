#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "segdebias/image.hpp"

namespace segdebias {

/// 1 - mask, elementwise.
BinaryMask complement(const BinaryMask& mask);

/// Elementwise union of two masks of equal shape.
BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);

/// Elementwise product broadcast across channels; masked-out pixels become
/// exactly 0.
ImageTensor apply_mask(const ImageTensor& image, const BinaryMask& mask);

/// Block-reduces a pixel mask to the encoder's patch grid. A patch is set to
/// 1 iff the fraction of 1-pixels inside it is >= threshold.
PatchMask mask_to_patch_grid(const BinaryMask& mask, int patch_size, double threshold = 0.5);

struct SegmenterRequest {
  ImageTensor image;
  std::string attribute;
  std::string sample_id; // used by the oracle provider for ground-truth lookup
};

class MaskProvider {
public:
  virtual ~MaskProvider() = default;
  virtual BinaryMask get_mask(const SegmenterRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Ground-truth lookup: serves stored masks verbatim, keyed by sample id,
/// for a single declared attribute.
class OracleMaskProvider final : public MaskProvider {
public:
  OracleMaskProvider(std::string attribute, std::map<std::string, BinaryMask> store);

  BinaryMask get_mask(const SegmenterRequest& request) override;
  std::string name() const override { return "oracle"; }

private:
  std::string attribute_;
  std::map<std::string, BinaryMask> store_;
};

/// Process-boundary adapter for an external grounding + promptable
/// segmentation stack. For each request the adapter writes the image and a
/// JSON document {image_path, attribute} into the work directory, invokes
///   <command> <request.json> <response.json>
/// and expects a JSON response {mask_path} or {error}.
class ExternalSegmenterAdapter final : public MaskProvider {
public:
  ExternalSegmenterAdapter(std::string command, std::filesystem::path workdir);

  BinaryMask get_mask(const SegmenterRequest& request) override;
  std::string name() const override { return "external"; }

private:
  std::string command_;
  std::filesystem::path workdir_;
  int counter_ = 0;
};

/// Fetches the target-attribute mask from a provider and validates that it is
/// aligned with the request image dimensions.
BinaryMask get_target_mask(const SegmenterRequest& request, MaskProvider& provider);

} // namespace segdebias
