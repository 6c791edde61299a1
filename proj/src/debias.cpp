#include "segdebias/debias.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "segdebias/rng.hpp"

namespace segdebias {

void validate(const DebiasConfig& config) {
  if (config.prompts.empty()) raise(ErrorKind::config, "debias config: prompts must be non-empty");
  if (!(config.step_size > 0.0)) raise(ErrorKind::config, "debias config: step_size must be positive");
  if (config.max_iterations < 1) raise(ErrorKind::config, "debias config: max_iterations must be >= 1");
  if (!(config.stop_tolerance > 0.0)) {
    raise(ErrorKind::config, "debias config: stop_tolerance must be positive");
  }
  if (config.noise_sigma < 0.0) raise(ErrorKind::config, "debias config: noise_sigma must be >= 0");
}

double equalization_loss(const Embedding& embedding, const std::vector<Embedding>& prompts) {
  if (prompts.empty()) raise(ErrorKind::input, "equalization_loss: no prompt embeddings");
  std::vector<double> cos(prompts.size());
  for (std::size_t i = 0; i < prompts.size(); ++i) cos[i] = cosine_similarity(embedding, prompts[i]);
  double loss = 0.0;
  for (std::size_t i = 0; i < cos.size(); ++i) {
    for (std::size_t j = i + 1; j < cos.size(); ++j) {
      const double d = cos[i] - cos[j];
      loss += d * d;
    }
  }
  return loss;
}

double max_pairwise_similarity_diff(const Embedding& embedding, const std::vector<Embedding>& prompts) {
  std::vector<double> cos(prompts.size());
  for (std::size_t i = 0; i < prompts.size(); ++i) cos[i] = cosine_similarity(embedding, prompts[i]);
  double worst = 0.0;
  for (std::size_t i = 0; i < cos.size(); ++i) {
    for (std::size_t j = i + 1; j < cos.size(); ++j) {
      worst = std::max(worst, std::abs(cos[i] - cos[j]));
    }
  }
  return worst;
}

Embedding EqualizationObjective::gradient(const Embedding& z) const {
  std::vector<double> cos(prompts_.size());
  std::vector<Embedding> cos_grads(prompts_.size());
  for (std::size_t i = 0; i < prompts_.size(); ++i) {
    cos[i] = cosine_similarity(z, prompts_[i]);
    cos_grads[i] = cosine_gradient(z, prompts_[i]);
  }
  Embedding g{std::vector<double>(z.values.size(), 0.0)};
  for (std::size_t i = 0; i < cos.size(); ++i) {
    for (std::size_t j = i + 1; j < cos.size(); ++j) {
      const double coeff = 2.0 * (cos[i] - cos[j]);
      for (std::size_t d = 0; d < g.values.size(); ++d) {
        g.values[d] += coeff * (cos_grads[i].values[d] - cos_grads[j].values[d]);
      }
    }
  }
  return g;
}

namespace {

std::vector<Embedding> encode_prompts(const std::vector<TextPrompt>& prompts, const Encoder& encoder) {
  std::vector<Embedding> out;
  out.reserve(prompts.size());
  for (const auto& p : prompts) out.push_back(encoder.encode_text(p));
  return out;
}

// Zeroes delta outside the support and box-projects so base + delta stays in
// [0,1]. base is the masked background image (0 outside the support).
void project_delta(ImageTensor& delta, const ImageTensor& base, const BinaryMask& support) {
  for (int y = 0; y < delta.height; ++y) {
    for (int x = 0; x < delta.width; ++x) {
      if (support.at(y, x) == 0) {
        for (int c = 0; c < delta.channels; ++c) delta.at(y, x, c) = 0.0;
      } else {
        for (int c = 0; c < delta.channels; ++c) {
          const double b = base.at(y, x, c);
          delta.at(y, x, c) = std::clamp(b + delta.at(y, x, c), 0.0, 1.0) - b;
        }
      }
    }
  }
}

ImageTensor add(const ImageTensor& a, const ImageTensor& b) {
  ImageTensor out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

ImageTensor gaussian_field(int height, int width, int channels, double sigma, std::uint64_t seed) {
  ImageTensor out = ImageTensor::zeros(height, width, channels);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& v : out.data) v = std::clamp(sigma * gauss(rng), 0.0, 1.0);
  return out;
}

DebiasResult classify_only(const ImageTensor& composed, const BinaryMask& target_mask,
                           const std::vector<TextPrompt>& prompts, const Encoder& encoder) {
  DebiasResult result;
  result.reconstructed = composed;
  result.state.delta = ImageTensor::zeros(composed.height, composed.width, composed.channels);
  result.state.support = complement(target_mask);
  result.state.converged = false;
  ZeroShotResult zs = classify_zero_shot(composed, prompts, encoder);
  result.predicted_class = zs.predicted_class;
  result.per_prompt_similarity = std::move(zs.similarities);
  return result;
}

} // namespace

PerturbationState neutralize_nontarget(const ImageTensor& image, const BinaryMask& nontarget_mask,
                                       const std::vector<TextPrompt>& prompts,
                                       const DebiasConfig& config, const Encoder& encoder) {
  validate(config);
  if (prompts.size() < 2) {
    raise(ErrorKind::input, "neutralize_nontarget: need at least 2 prompts to equalize");
  }
  if (!encoder.has_input_gradients()) {
    raise(ErrorKind::capability, "neutralize_nontarget: encoder does not expose input gradients");
  }
  if (image.height != nontarget_mask.height || image.width != nontarget_mask.width) {
    raise(ErrorKind::input, "neutralize_nontarget: image/mask shape mismatch");
  }
  if (nontarget_mask.all_zero()) {
    raise(ErrorKind::input, "neutralize_nontarget: degenerate support (non-target mask is empty)");
  }

  const std::vector<Embedding> prompt_embs = encode_prompts(prompts, encoder);
  const EqualizationObjective objective(prompt_embs);

  const ImageTensor background = apply_mask(image, nontarget_mask);

  PerturbationState state;
  state.support = nontarget_mask;
  state.delta = ImageTensor::zeros(image.height, image.width, image.channels);

  Embedding z = encoder.encode_image(background);
  double diff = max_pairwise_similarity_diff(z, prompt_embs);
  state.initial_loss = equalization_loss(z, prompt_embs);
  state.final_loss = state.initial_loss;
  state.final_max_pairwise_diff = diff;
  if (diff < config.stop_tolerance) {
    state.converged = true;
    return state;
  }

  ImageTensor current = background;
  for (int it = 1; it <= config.max_iterations; ++it) {
    const ImageTensor grad = encoder.image_gradient(current, objective);
    for (std::size_t i = 0; i < state.delta.data.size(); ++i) {
      state.delta.data[i] -= config.step_size * grad.data[i];
    }
    project_delta(state.delta, background, nontarget_mask);
    current = add(background, state.delta);

    z = encoder.encode_image(current);
    const double loss = equalization_loss(z, prompt_embs);
    if (!std::isfinite(loss)) raise(ErrorKind::numerical, "neutralize_nontarget: non-finite loss");
    diff = max_pairwise_similarity_diff(z, prompt_embs);

    state.iterations_used = it;
    state.final_max_pairwise_diff = diff;
    state.final_loss = loss;
    if (diff < config.stop_tolerance) {
      state.converged = true;
      break;
    }
  }
  return state;
}

ImageTensor reconstruct(const ImageTensor& image, const BinaryMask& target_mask,
                        const PerturbationState& state) {
  if (image.height != target_mask.height || image.width != target_mask.width) {
    raise(ErrorKind::input, "reconstruct: image/mask shape mismatch");
  }
  if (!(state.support == complement(target_mask))) {
    raise(ErrorKind::input, "reconstruct: perturbation support does not match the target complement");
  }
  if (!state.delta.same_shape(image)) {
    raise(ErrorKind::input, "reconstruct: delta/image shape mismatch");
  }
  ImageTensor out = image;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (target_mask.at(y, x) == 1) continue; // target pixels stay bit-exact
      for (int c = 0; c < image.channels; ++c) {
        out.at(y, x, c) = std::clamp(image.at(y, x, c) + state.delta.at(y, x, c), 0.0, 1.0);
      }
    }
  }
  return out;
}

int argmax_similarity(const std::vector<double>& similarities) {
  if (similarities.empty()) raise(ErrorKind::input, "argmax_similarity: empty similarity list");
  int best = 0;
  for (int i = 1; i < static_cast<int>(similarities.size()); ++i) {
    if (similarities[i] > similarities[best]) best = i;
  }
  return best;
}

ZeroShotResult classify_zero_shot(const ImageTensor& image, const std::vector<TextPrompt>& prompts,
                                  const Encoder& encoder) {
  if (prompts.empty()) raise(ErrorKind::input, "classify_zero_shot: empty prompt list");
  const Embedding z = encoder.encode_image(image);
  ZeroShotResult result;
  result.similarities.reserve(prompts.size());
  for (const auto& p : prompts) {
    result.similarities.push_back(cosine_similarity(z, encoder.encode_text(p)));
  }
  result.predicted_class = argmax_similarity(result.similarities);
  return result;
}

DebiasResult run_pipeline(const Sample& sample, const DebiasConfig& config, const Encoder& encoder,
                          MaskProvider& mask_provider) {
  validate(config);
  if (!encoder.has_input_gradients()) {
    raise(ErrorKind::capability, "run_pipeline: encoder does not expose input gradients");
  }

  SegmenterRequest request{sample.image, config.target_attribute, sample.id};
  const BinaryMask target = get_target_mask(request, mask_provider);
  if (target.all_zero()) {
    raise(ErrorKind::missing_mask,
          "target attribute '" + config.target_attribute + "' not found in sample '" + sample.id +
              "' (provider returned an empty mask)");
  }
  const BinaryMask nontarget = complement(target);

  DebiasResult result;
  if (nontarget.all_zero()) {
    // Target covers the whole image; nothing to neutralize. The pipeline
    // degenerates to plain zero-shot classification of the input.
    result.state.support = nontarget;
    result.state.delta = ImageTensor::zeros(sample.image.height, sample.image.width, sample.image.channels);
    const std::vector<Embedding> prompt_embs = encode_prompts(config.prompts, encoder);
    const Embedding z = encoder.encode_image(apply_mask(sample.image, nontarget));
    result.state.final_max_pairwise_diff = max_pairwise_similarity_diff(z, prompt_embs);
    result.state.initial_loss = result.state.final_loss = equalization_loss(z, prompt_embs);
    result.state.converged = result.state.final_max_pairwise_diff < config.stop_tolerance;
  } else {
    result.state = neutralize_nontarget(sample.image, nontarget, config.prompts, config, encoder);
  }
  result.converged = result.state.converged;
  result.reconstructed = reconstruct(sample.image, target, result.state);
  ZeroShotResult zs = classify_zero_shot(result.reconstructed, config.prompts, encoder);
  result.predicted_class = zs.predicted_class;
  result.per_prompt_similarity = std::move(zs.similarities);
  return result;
}

Variant parse_variant(const std::string& name) {
  if (name == "target_only") return Variant::target_only;
  if (name == "noise_filled") return Variant::noise_filled;
  if (name == "random_repaint") return Variant::random_repaint;
  if (name == "full") return Variant::full;
  raise(ErrorKind::input, "unknown variant '" + name + "'");
}

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::target_only: return "target_only";
    case Variant::noise_filled: return "noise_filled";
    case Variant::random_repaint: return "random_repaint";
    case Variant::full: return "full";
  }
  return "?";
}

DebiasResult ablation_variant(const Sample& sample, Variant variant, const DebiasConfig& config,
                              const Encoder& encoder, MaskProvider& mask_provider) {
  validate(config);
  if (variant == Variant::full) return run_pipeline(sample, config, encoder, mask_provider);

  SegmenterRequest request{sample.image, config.target_attribute, sample.id};
  const BinaryMask target = get_target_mask(request, mask_provider);
  if (target.all_zero()) {
    raise(ErrorKind::missing_mask, "target attribute not found in sample '" + sample.id + "'");
  }

  switch (variant) {
    case Variant::target_only: {
      return classify_only(apply_mask(sample.image, target), target, config.prompts, encoder);
    }
    case Variant::noise_filled: {
      const ImageTensor noise =
          gaussian_field(sample.image.height, sample.image.width, sample.image.channels,
                         config.noise_sigma, derive_seed(config.seed, "noise_filled/" + sample.id));
      ImageTensor composed = apply_mask(sample.image, target);
      const BinaryMask nontarget = complement(target);
      for (int y = 0; y < composed.height; ++y) {
        for (int x = 0; x < composed.width; ++x) {
          if (nontarget.at(y, x) == 1) {
            for (int c = 0; c < composed.channels; ++c) composed.at(y, x, c) = noise.at(y, x, c);
          }
        }
      }
      return classify_only(composed, target, config.prompts, encoder);
    }
    case Variant::random_repaint: {
      const ImageTensor canvas =
          gaussian_field(sample.image.height, sample.image.width, sample.image.channels,
                         config.noise_sigma, derive_seed(config.seed, "random_repaint/" + sample.id));
      ImageTensor composed = canvas;
      for (int y = 0; y < composed.height; ++y) {
        for (int x = 0; x < composed.width; ++x) {
          if (target.at(y, x) == 1) {
            for (int c = 0; c < composed.channels; ++c) composed.at(y, x, c) = sample.image.at(y, x, c);
          }
        }
      }
      return classify_only(composed, target, config.prompts, encoder);
    }
    case Variant::full: break; // handled above
  }
  raise(ErrorKind::input, "unknown variant");
}

} // namespace segdebias
