#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "segdebias/image.hpp"

namespace segdebias {

struct EncoderConfig {
  int image_size = 32;
  int patch_size = 4;
  int embed_dim = 16;
  int num_layers = 2;
  int num_heads = 2;
  int text_vocab = 256; // hash-bucket token inventory size
  std::uint64_t seed = 0;
};

/// Throws a config error unless the geometry is consistent
/// (image_size % patch_size == 0, embed_dim % num_heads == 0, ...).
void validate(const EncoderConfig& config);

struct TextPrompt {
  std::string text;
};

double cosine_similarity(const Embedding& a, const Embedding& b);

/// d cos(z, t) / d z, treating both norms as functions of z.
Embedding cosine_gradient(const Embedding& z, const Embedding& t);

/// Scalar objective over an encoder output embedding, with an analytic
/// gradient so input gradients can be backpropagated to pixels.
class EmbeddingObjective {
public:
  virtual ~EmbeddingObjective() = default;
  virtual double value(const Embedding& z) const = 0;
  virtual Embedding gradient(const Embedding& z) const = 0;
};

class ConstantObjective final : public EmbeddingObjective {
public:
  explicit ConstantObjective(double c) : c_(c) {}
  double value(const Embedding&) const override { return c_; }
  Embedding gradient(const Embedding& z) const override {
    return Embedding{std::vector<double>(z.values.size(), 0.0)};
  }

private:
  double c_;
};

/// loss(z) = cos(z, target) + offset. The offset exercises the invariance of
/// input gradients to additive constants.
class CosineToTarget final : public EmbeddingObjective {
public:
  explicit CosineToTarget(Embedding target, double offset = 0.0)
      : target_(std::move(target)), offset_(offset) {}
  double value(const Embedding& z) const override { return cosine_similarity(z, target_) + offset_; }
  Embedding gradient(const Embedding& z) const override { return cosine_gradient(z, target_); }

private:
  Embedding target_;
  double offset_;
};

/// Vision-text encoder abstraction. Real-backbone adapters implement this
/// interface; adapters lacking gradient support are rejected at pipeline
/// construction.
class Encoder {
public:
  virtual ~Encoder() = default;

  virtual int image_size() const = 0;
  virtual int patch_size() const = 0;
  int patch_grid() const { return image_size() / patch_size(); }

  virtual Embedding encode_image(const ImageTensor& image) const = 0;
  virtual Embedding encode_text(const TextPrompt& prompt) const = 0;

  virtual bool has_attention() const = 0;
  virtual AttentionMap extract_cls_attention(const ImageTensor& image) const = 0;

  virtual bool has_input_gradients() const = 0;
  virtual ImageTensor image_gradient(const ImageTensor& image, const EmbeddingObjective& loss) const = 0;
};

/// Averages CLS->patch attention rows (one per layer/head pair) elementwise
/// and mass-normalizes the result to sum to 1.
AttentionMap average_cls_attention(const std::vector<std::vector<double>>& cls_to_patch_rows, int grid);

} // namespace segdebias
