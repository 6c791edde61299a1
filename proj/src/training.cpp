#include "segdebias/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "segdebias/dataset.hpp"
#include "segdebias/debias.hpp"
#include "segdebias/rng.hpp"

namespace segdebias {

namespace {

// Cross-entropy over scaled cosine logits against frozen prompt embeddings.
class ContrastiveObjective final : public EmbeddingObjective {
public:
  ContrastiveObjective(const std::vector<Embedding>& prompts, int label, double scale)
      : prompts_(prompts), label_(label), scale_(scale) {}

  double value(const Embedding& z) const override {
    const std::vector<double> logits = scaled_logits(z);
    const double m = *std::max_element(logits.begin(), logits.end());
    double lse = 0.0;
    for (double l : logits) lse += std::exp(l - m);
    return std::log(lse) + m - logits[static_cast<std::size_t>(label_)];
  }

  Embedding gradient(const Embedding& z) const override {
    const std::vector<double> logits = scaled_logits(z);
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      p[i] = std::exp(logits[i] - m);
      sum += p[i];
    }
    Embedding g{std::vector<double>(z.values.size(), 0.0)};
    for (std::size_t i = 0; i < logits.size(); ++i) {
      const double coeff = scale_ * (p[i] / sum - (static_cast<int>(i) == label_ ? 1.0 : 0.0));
      const Embedding cg = cosine_gradient(z, prompts_[i]);
      for (std::size_t d = 0; d < g.values.size(); ++d) g.values[d] += coeff * cg.values[d];
    }
    return g;
  }

private:
  std::vector<double> scaled_logits(const Embedding& z) const {
    std::vector<double> logits(prompts_.size());
    for (std::size_t i = 0; i < prompts_.size(); ++i) {
      logits[i] = scale_ * cosine_similarity(z, prompts_[i]);
    }
    return logits;
  }

  const std::vector<Embedding>& prompts_;
  int label_;
  double scale_;
};

} // namespace

BiasInductionReport fit_contrastive(ToyEncoder& encoder, const std::vector<Sample>& train_samples,
                                    const std::vector<TextPrompt>& prompts,
                                    const BiasInductionOptions& options) {
  if (train_samples.empty()) raise(ErrorKind::input, "fit_contrastive: empty training split");
  if (prompts.size() < 2) raise(ErrorKind::input, "fit_contrastive: need at least 2 prompts");
  if (options.steps < 0 || options.batch_size < 1) {
    raise(ErrorKind::config, "fit_contrastive: invalid steps/batch_size");
  }
  for (const auto& s : train_samples) {
    if (s.class_label < 0 || s.class_label >= static_cast<int>(prompts.size())) {
      raise(ErrorKind::input, "fit_contrastive: class label of sample '" + s.id +
                                  "' has no matching prompt");
    }
  }

  std::vector<Embedding> prompt_embs;
  prompt_embs.reserve(prompts.size());
  for (const auto& p : prompts) prompt_embs.push_back(encoder.encode_text(p));

  // Counterfactual probe: foregrounds composited onto the opposite texture
  // family, drawn evenly from the train split. Accuracy on these measures
  // whether the target cue can outvote a contradicting background, which is
  // exactly what the debiasing pipeline needs from the model.
  std::vector<ImageTensor> probe_images;
  std::vector<int> probe_labels;
  if (options.probe_size > 0) {
    const std::size_t stride =
        std::max<std::size_t>(1, train_samples.size() / static_cast<std::size_t>(options.probe_size));
    for (std::size_t i = 0; i < train_samples.size() &&
                            probe_images.size() < static_cast<std::size_t>(options.probe_size);
         i += stride) {
      const Sample& s = train_samples[i];
      if (!s.has_mask) continue;
      const int opposite = 1 - s.group_id % 2;
      probe_images.push_back(
          textured_background_composite(s, opposite, derive_seed(options.seed, s.id)));
      probe_labels.push_back(s.class_label);
    }
  }
  auto probe_accuracy = [&]() {
    if (probe_images.empty()) return 0.0;
    int correct = 0;
    for (std::size_t i = 0; i < probe_images.size(); ++i) {
      const Embedding z = encoder.encode_image(probe_images[i]);
      std::vector<double> sims(prompt_embs.size());
      for (std::size_t k = 0; k < prompt_embs.size(); ++k) {
        sims[k] = cosine_similarity(z, prompt_embs[k]);
      }
      if (argmax_similarity(sims) == probe_labels[i]) ++correct;
    }
    return static_cast<double>(correct) / probe_images.size();
  };

  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(train_samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;

  BiasInductionReport report;
  std::vector<double> grad(encoder.parameters().size(), 0.0);
  std::vector<double> adam_m(encoder.parameters().size(), 0.0);
  std::vector<double> adam_v(encoder.parameters().size(), 0.0);
  constexpr double kAdamEps = 1e-8;
  for (int step = 0; step < options.steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    const int batch = std::min<int>(options.batch_size, static_cast<int>(train_samples.size()));
    for (int b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const Sample& s = train_samples[order[cursor++]];
      ContrastiveObjective objective(prompt_embs, s.class_label, options.logit_scale);
      loss += encoder.objective_with_param_gradient(s.image, objective, grad);
    }
    const double inv = 1.0 / batch;
    const double bc1 = 1.0 - std::pow(options.adam_beta1, step + 1);
    const double bc2 = 1.0 - std::pow(options.adam_beta2, step + 1);
    auto& params = encoder.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = inv * grad[i];
      adam_m[i] = options.adam_beta1 * adam_m[i] + (1.0 - options.adam_beta1) * g;
      adam_v[i] = options.adam_beta2 * adam_v[i] + (1.0 - options.adam_beta2) * g * g;
      params[i] -=
          options.learning_rate * (adam_m[i] / bc1) / (std::sqrt(adam_v[i] / bc2) + kAdamEps);
    }
    report.loss_history.push_back(loss * inv);
    report.steps_run = step + 1;

    if (!probe_images.empty() && step + 1 >= options.probe_min_steps &&
        (step + 1) % options.probe_interval == 0) {
      report.final_probe_accuracy = probe_accuracy();
      if (report.final_probe_accuracy >= options.probe_accuracy) {
        report.probe_satisfied = true;
        break;
      }
    }
  }
  if (!report.probe_satisfied && !probe_images.empty()) {
    report.final_probe_accuracy = probe_accuracy();
    report.probe_satisfied = report.final_probe_accuracy >= options.probe_accuracy;
  }
  return report;
}

} // namespace segdebias
