#pragma once

#include <string>
#include <vector>

#include "segdebias/dataset_types.hpp"
#include "segdebias/encoder.hpp"
#include "segdebias/masks.hpp"

namespace segdebias {

struct DebiasConfig {
  std::vector<TextPrompt> prompts; // one per candidate class, N >= 2 for optimization
  std::string target_attribute;
  double step_size = 0.05;
  int max_iterations = 500;
  double stop_tolerance = 0.001;
  double noise_sigma = 0.1; // ablation noise scale
  std::uint64_t seed = 0;
};

void validate(const DebiasConfig& config);

/// Perturbation supported only on the non-target region.
struct PerturbationState {
  ImageTensor delta;   // exactly 0 wherever support is 0
  BinaryMask support;  // the non-target mask
  int iterations_used = 0;
  double final_max_pairwise_diff = 0.0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  bool converged = false;
};

struct DebiasResult {
  ImageTensor reconstructed;
  int predicted_class = 0;
  std::vector<double> per_prompt_similarity;
  bool converged = false;
  PerturbationState state;
};

/// Sum over prompt pairs of squared cosine-similarity differences;
/// zero when the embedding is equally similar to every prompt.
double equalization_loss(const Embedding& embedding, const std::vector<Embedding>& prompt_embeddings);

/// Largest |cos(z, t_i) - cos(z, t_j)| over prompt pairs (0 for < 2 prompts).
double max_pairwise_similarity_diff(const Embedding& embedding,
                                    const std::vector<Embedding>& prompt_embeddings);

class EqualizationObjective final : public EmbeddingObjective {
public:
  explicit EqualizationObjective(std::vector<Embedding> prompt_embeddings)
      : prompts_(std::move(prompt_embeddings)) {}
  double value(const Embedding& z) const override { return equalization_loss(z, prompts_); }
  Embedding gradient(const Embedding& z) const override;

private:
  std::vector<Embedding> prompts_;
};

/// Projected gradient descent on a pixel-space perturbation delta, initialized
/// at 0: after each fixed-size step, delta is zeroed outside the support and
/// box-projected so image + delta stays in [0,1]. Terminates when the maximum
/// pairwise similarity difference falls below stop_tolerance or the iteration
/// budget is exhausted.
PerturbationState neutralize_nontarget(const ImageTensor& image, const BinaryMask& nontarget_mask,
                                       const std::vector<TextPrompt>& prompts,
                                       const DebiasConfig& config, const Encoder& encoder);

/// image * target_mask + (image * nontarget + delta) on the non-target region;
/// target pixels are restored bit-exactly from the input image.
ImageTensor reconstruct(const ImageTensor& image, const BinaryMask& target_mask,
                        const PerturbationState& state);

/// Argmax with ties broken toward the lowest index.
int argmax_similarity(const std::vector<double>& similarities);

struct ZeroShotResult {
  int predicted_class = 0;
  std::vector<double> similarities;
};

ZeroShotResult classify_zero_shot(const ImageTensor& image, const std::vector<TextPrompt>& prompts,
                                  const Encoder& encoder);

/// Four-step pipeline: target mask -> masked background -> neutralization ->
/// reconstruction -> zero-shot classification.
DebiasResult run_pipeline(const Sample& sample, const DebiasConfig& config, const Encoder& encoder,
                          MaskProvider& mask_provider);

enum class Variant { target_only, noise_filled, random_repaint, full };

Variant parse_variant(const std::string& name); // unknown name -> input error
std::string to_string(Variant variant);

DebiasResult ablation_variant(const Sample& sample, Variant variant, const DebiasConfig& config,
                              const Encoder& encoder, MaskProvider& mask_provider);

} // namespace segdebias
