#pragma once

#include <vector>

#include "segdebias/dataset_types.hpp"
#include "segdebias/toy_encoder.hpp"

namespace segdebias {

/// Brief contrastive fitting of the toy image tower against frozen prompt
/// embeddings, run on a biased training split so the zero-shot baseline
/// exhibits a group gap (stand-in for a pretrained biased backbone).
///
/// The background shortcut is learned first; training stops early once a
/// counterfactual probe (foregrounds composited onto the opposite texture)
/// classifies above `probe_accuracy`, i.e. as soon as the target cue has
/// become usable while the shortcut still dominates full images.
struct BiasInductionOptions {
  int steps = 600; // cap; the probe usually stops much earlier
  int batch_size = 32;
  double learning_rate = 0.01; // Adam step size
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double logit_scale = 20.0; // inverse softmax temperature on cosine logits
  int probe_size = 64;       // probe images taken from the train split; 0 disables
  double probe_accuracy = 0.85;
  int probe_interval = 2;
  int probe_min_steps = 30;
  std::uint64_t seed = 0;
};

struct BiasInductionReport {
  std::vector<double> loss_history; // mean cross-entropy per step
  int steps_run = 0;
  bool probe_satisfied = false;
  double final_probe_accuracy = 0.0;
};

/// Cross-entropy over logit_scale * cos(z_image, z_prompt_i) with the sample's
/// class label as target; minibatch Adam on the image tower only (the text
/// tower stays frozen, so prompt embeddings are fixed).
BiasInductionReport fit_contrastive(ToyEncoder& encoder, const std::vector<Sample>& train_samples,
                                    const std::vector<TextPrompt>& prompts,
                                    const BiasInductionOptions& options);

} // namespace segdebias
