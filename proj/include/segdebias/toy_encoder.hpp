#pragma once

#include <filesystem>
#include <memory>

#include "segdebias/encoder.hpp"

namespace segdebias {

/// Deterministic small reference ViT so the whole pipeline runs offline.
///
/// Image tower: patch embedding -> CLS token -> pre-norm transformer blocks
/// (multi-head self-attention, GELU MLP) -> final LayerNorm -> CLS readout ->
/// linear projection -> L2 normalization.
/// Text tower: hashed bag-of-token embedding mean -> linear projection -> L2
/// normalization. Weights are drawn from a seeded Gaussian (sigma 0.02) and
/// LayerNorm gains start at 1. The tower is bias-free and has no positional
/// term, so attention is content-driven and zeroed (masked-out) pixels carry
/// no signal through any block.
class ToyEncoder final : public Encoder {
public:
  explicit ToyEncoder(const EncoderConfig& config);

  int image_size() const override { return cfg_.image_size; }
  int patch_size() const override { return cfg_.patch_size; }
  const EncoderConfig& config() const { return cfg_; }

  Embedding encode_image(const ImageTensor& image) const override;
  Embedding encode_text(const TextPrompt& prompt) const override;

  bool has_attention() const override { return true; }
  AttentionMap extract_cls_attention(const ImageTensor& image) const override;

  /// Full CLS attention rows (softmax rows of length num_patches + 1,
  /// including the CLS->CLS entry), one per (layer, head), layer-major.
  std::vector<std::vector<double>> cls_attention_rows(const ImageTensor& image) const;

  bool has_input_gradients() const override { return true; }
  ImageTensor image_gradient(const ImageTensor& image, const EmbeddingObjective& loss) const override;

  /// Evaluates the objective on the image embedding and accumulates
  /// d loss / d params into grad (same layout as parameters()). Text-tower
  /// entries are left untouched. Returns the objective value.
  double objective_with_param_gradient(const ImageTensor& image, const EmbeddingObjective& loss,
                                       std::vector<double>& grad) const;

  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }

  /// Binary checkpoint with the embedded config; round-trips bit-exactly.
  void save_checkpoint(const std::filesystem::path& path) const;
  static ToyEncoder load_checkpoint(const std::filesystem::path& path);

private:
  struct Layout;
  struct Trace;

  void init_parameters();
  void forward_image(const ImageTensor& image, Trace& trace) const;
  void backward_image(const ImageTensor& image, const Trace& trace, const std::vector<double>& grad_z,
                      ImageTensor* grad_image, std::vector<double>* grad_params) const;
  const Layout& layout() const { return *layout_; }

  EncoderConfig cfg_;
  std::shared_ptr<const Layout> layout_;
  std::vector<double> params_;
};

} // namespace segdebias
