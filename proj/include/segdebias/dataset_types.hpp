#pragma once

#include <string>

#include "segdebias/image.hpp"

namespace segdebias {

/// One evaluation record: image, class label, (class x background) group
/// label, and the ground-truth target mask when available.
struct Sample {
  std::string id;
  ImageTensor image;
  int class_label = 0;
  int group_id = 0;
  BinaryMask target_mask;
  bool has_mask = false;
  std::string split; // "train" / "val" / "test", empty if unassigned
};

} // namespace segdebias
