#include "segdebias/toy_encoder.hpp"

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "segdebias/rng.hpp"

namespace segdebias {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using MapVec = Eigen::Map<Eigen::VectorXd>;
using ConstMapVec = Eigen::Map<const Eigen::VectorXd>;

constexpr double kLnEps = 1e-5;
constexpr int kMlpRatio = 4;

double gauss_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)); }
double gauss_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// Gain-only LayerNorm over each row of x (no shift, so an all-zero token maps
// to an all-zero token). Caches the normalized rows and 1/sigma for the
// backward pass.
void layernorm_rows(const RowMat& x, ConstMapVec gain, RowMat& out, RowMat& xhat,
                    Eigen::VectorXd& inv_sigma) {
  const auto rows = x.rows();
  const auto cols = x.cols();
  out.resize(rows, cols);
  xhat.resize(rows, cols);
  inv_sigma.resize(rows);
  for (Eigen::Index t = 0; t < rows; ++t) {
    const double mu = x.row(t).mean();
    const double var = (x.row(t).array() - mu).square().mean();
    const double inv = 1.0 / std::sqrt(var + kLnEps);
    inv_sigma(t) = inv;
    xhat.row(t) = ((x.row(t).array() - mu) * inv).matrix();
    out.row(t) = (xhat.row(t).array() * gain.transpose().array()).matrix();
  }
}

// Backward of layernorm_rows. Returns d loss / d x and accumulates the gain
// gradient when requested.
RowMat layernorm_backward(const RowMat& gy, const RowMat& xhat, const Eigen::VectorXd& inv_sigma,
                          ConstMapVec gain, double* grad_gain) {
  const auto rows = gy.rows();
  const auto cols = gy.cols();
  RowMat gx(rows, cols);
  for (Eigen::Index t = 0; t < rows; ++t) {
    Eigen::ArrayXd q = gy.row(t).transpose().array() * gain.array();
    const double mq = q.mean();
    const double mqx = (q * xhat.row(t).transpose().array()).mean();
    gx.row(t) =
        (inv_sigma(t) * (q - mq - xhat.row(t).transpose().array() * mqx)).matrix().transpose();
    if (grad_gain) {
      for (Eigen::Index j = 0; j < cols; ++j) grad_gain[j] += gy(t, j) * xhat(t, j);
    }
  }
  return gx;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    } else if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(current);
  return tokens;
}

constexpr char kCheckpointMagic[8] = {'S', 'D', 'B', 'E', 'N', 'C', '0', '2'};

} // namespace

// Bias-free tower: only weight matrices, the CLS token and LayerNorm gains.
// Zeroed (masked-out) patches therefore stay exactly zero through every block
// and contribute nothing to the readout beyond softmax mass dilution.
struct ToyEncoder::Layout {
  int dim = 0, patch_dim = 0, tokens = 0, heads = 0, head_dim = 0, mlp_dim = 0, layers = 0, vocab = 0;
  std::size_t patch_w = 0, cls = 0;
  struct Block {
    std::size_t ln1_g, wq, wk, wv, wo, ln2_g, w1, w2;
  };
  std::vector<Block> blocks;
  std::size_t lnf_g = 0, proj = 0, tok_emb = 0, text_proj = 0;
  std::size_t total = 0;

  explicit Layout(const EncoderConfig& c) {
    dim = c.embed_dim;
    patch_dim = c.patch_size * c.patch_size * 3;
    const int grid = c.image_size / c.patch_size;
    tokens = grid * grid + 1;
    heads = c.num_heads;
    head_dim = dim / heads;
    mlp_dim = kMlpRatio * dim;
    layers = c.num_layers;
    vocab = c.text_vocab;

    std::size_t off = 0;
    auto take = [&off](std::size_t n) {
      const std::size_t at = off;
      off += n;
      return at;
    };
    const std::size_t d = static_cast<std::size_t>(dim);
    patch_w = take(d * patch_dim);
    cls = take(d);
    for (int l = 0; l < layers; ++l) {
      Block b{};
      b.ln1_g = take(d);
      b.wq = take(d * d);
      b.wk = take(d * d);
      b.wv = take(d * d);
      b.wo = take(d * d);
      b.ln2_g = take(d);
      b.w1 = take(static_cast<std::size_t>(mlp_dim) * d);
      b.w2 = take(d * mlp_dim);
      blocks.push_back(b);
    }
    lnf_g = take(d);
    proj = take(d * d);
    tok_emb = take(static_cast<std::size_t>(vocab) * d);
    text_proj = take(d * d);
    total = off;
  }
};

struct ToyEncoder::Trace {
  struct Layer {
    RowMat u;                // block input
    RowMat ln1_xhat, a;      // pre-attention norm
    Eigen::VectorXd ln1_inv;
    RowMat q, k, v;
    std::vector<RowMat> attn; // per-head softmax rows (T x T)
    RowMat o_cat;             // heads concatenated, pre-output-projection
    RowMat r;                 // residual after attention
    RowMat ln2_xhat, b;
    Eigen::VectorXd ln2_inv;
    RowMat h1, g;             // MLP pre/post activation
  };
  RowMat x0;
  std::vector<Layer> layers;
  RowMat xl;
  Eigen::VectorXd lnf_xhat, f_cls;
  double lnf_inv = 0.0;
  Eigen::VectorXd e, z;
  double e_norm = 0.0;
};

ToyEncoder::ToyEncoder(const EncoderConfig& config) : cfg_(config) {
  validate(cfg_);
  layout_ = std::make_shared<const Layout>(cfg_);
  init_parameters();
}

void ToyEncoder::init_parameters() {
  const Layout& lay = layout();
  params_.assign(lay.total, 0.0);
  std::mt19937_64 rng(cfg_.seed);
  std::normal_distribution<double> gauss(0.0, 0.02);
  auto draw = [&](std::size_t off, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) params_[off + i] = gauss(rng);
  };
  auto fill = [&](std::size_t off, std::size_t n, double v) {
    for (std::size_t i = 0; i < n; ++i) params_[off + i] = v;
  };
  const std::size_t d = static_cast<std::size_t>(lay.dim);
  draw(lay.patch_w, d * lay.patch_dim);
  draw(lay.cls, d);
  for (const auto& b : lay.blocks) {
    fill(b.ln1_g, d, 1.0);
    draw(b.wq, d * d);
    draw(b.wk, d * d);
    draw(b.wv, d * d);
    draw(b.wo, d * d);
    fill(b.ln2_g, d, 1.0);
    draw(b.w1, static_cast<std::size_t>(lay.mlp_dim) * d);
    draw(b.w2, d * lay.mlp_dim);
  }
  fill(lay.lnf_g, d, 1.0);
  draw(lay.proj, d * d);
  draw(lay.tok_emb, static_cast<std::size_t>(lay.vocab) * d);
  draw(lay.text_proj, d * d);
}

void ToyEncoder::forward_image(const ImageTensor& image, Trace& tr) const {
  if (image.height != cfg_.image_size || image.width != cfg_.image_size || image.channels != 3) {
    raise(ErrorKind::config, "encode_image: image dimensions do not match the encoder config");
  }
  const Layout& lay = layout();
  const int D = lay.dim;
  const int T = lay.tokens;
  const int P = cfg_.patch_size;
  const int grid = cfg_.image_size / P;
  const double scale = 1.0 / std::sqrt(static_cast<double>(lay.head_dim));

  ConstMapMat patch_w(params_.data() + lay.patch_w, D, lay.patch_dim);
  ConstMapVec cls(params_.data() + lay.cls, D);

  // No positional term: tokens carry patch content only, so attention is
  // purely content-driven and cannot latch onto fixed image locations.
  tr.x0.resize(T, D);
  tr.x0.row(0) = cls.transpose();
  Eigen::VectorXd patch(lay.patch_dim);
  for (int gy = 0; gy < grid; ++gy) {
    for (int gx = 0; gx < grid; ++gx) {
      int j = 0;
      for (int py = 0; py < P; ++py) {
        for (int px = 0; px < P; ++px) {
          for (int c = 0; c < 3; ++c) patch(j++) = image.at(gy * P + py, gx * P + px, c);
        }
      }
      tr.x0.row(1 + gy * grid + gx) = (patch_w * patch).transpose();
    }
  }

  tr.layers.assign(static_cast<std::size_t>(lay.layers), Trace::Layer{});
  RowMat x = tr.x0;
  for (int l = 0; l < lay.layers; ++l) {
    const auto& blk = lay.blocks[l];
    auto& t = tr.layers[l];
    t.u = x;

    ConstMapVec ln1_g(params_.data() + blk.ln1_g, D);
    layernorm_rows(t.u, ln1_g, t.a, t.ln1_xhat, t.ln1_inv);

    ConstMapMat wq(params_.data() + blk.wq, D, D);
    ConstMapMat wk(params_.data() + blk.wk, D, D);
    ConstMapMat wv(params_.data() + blk.wv, D, D);
    t.q = t.a * wq.transpose();
    t.k = t.a * wk.transpose();
    t.v = t.a * wv.transpose();

    t.attn.assign(static_cast<std::size_t>(lay.heads), RowMat{});
    t.o_cat.resize(T, D);
    for (int h = 0; h < lay.heads; ++h) {
      const auto qh = t.q.middleCols(h * lay.head_dim, lay.head_dim);
      const auto kh = t.k.middleCols(h * lay.head_dim, lay.head_dim);
      const auto vh = t.v.middleCols(h * lay.head_dim, lay.head_dim);
      RowMat s = qh * kh.transpose() * scale;
      for (Eigen::Index row = 0; row < s.rows(); ++row) {
        const double m = s.row(row).maxCoeff();
        s.row(row) = (s.row(row).array() - m).exp().matrix();
        s.row(row) /= s.row(row).sum();
      }
      t.attn[h] = std::move(s);
      t.o_cat.middleCols(h * lay.head_dim, lay.head_dim) = t.attn[h] * vh;
    }

    ConstMapMat wo(params_.data() + blk.wo, D, D);
    t.r = t.u + t.o_cat * wo.transpose();

    ConstMapVec ln2_g(params_.data() + blk.ln2_g, D);
    layernorm_rows(t.r, ln2_g, t.b, t.ln2_xhat, t.ln2_inv);

    ConstMapMat w1(params_.data() + blk.w1, lay.mlp_dim, D);
    ConstMapMat w2(params_.data() + blk.w2, D, lay.mlp_dim);
    t.h1 = t.b * w1.transpose();
    t.g = t.h1.unaryExpr([](double v) { return v * gauss_cdf(v); });
    x = t.r + t.g * w2.transpose();
  }
  tr.xl = std::move(x);

  // Final LayerNorm feeds only the CLS readout, so normalize row 0 alone.
  ConstMapVec lnf_g(params_.data() + lay.lnf_g, D);
  const double mu = tr.xl.row(0).mean();
  const double var = (tr.xl.row(0).array() - mu).square().mean();
  tr.lnf_inv = 1.0 / std::sqrt(var + kLnEps);
  tr.lnf_xhat = ((tr.xl.row(0).array() - mu) * tr.lnf_inv).matrix().transpose();
  tr.f_cls = (tr.lnf_xhat.array() * lnf_g.array()).matrix();

  ConstMapMat proj(params_.data() + lay.proj, D, D);
  tr.e = proj * tr.f_cls;
  tr.e_norm = tr.e.norm();
  if (!(tr.e_norm > 0.0) || !tr.e.allFinite()) {
    raise(ErrorKind::numerical, "encode_image: non-finite or zero-norm embedding");
  }
  tr.z = tr.e / tr.e_norm;
}

void ToyEncoder::backward_image(const ImageTensor& image, const Trace& tr,
                                const std::vector<double>& grad_z, ImageTensor* grad_image,
                                std::vector<double>* grad_params) const {
  const Layout& lay = layout();
  const int D = lay.dim;
  const int T = lay.tokens;
  const int P = cfg_.patch_size;
  const int grid = cfg_.image_size / P;
  const double scale = 1.0 / std::sqrt(static_cast<double>(lay.head_dim));

  ConstMapVec gz(grad_z.data(), D);
  double* gp = grad_params ? grad_params->data() : nullptr;

  // z = e / |e|
  Eigen::VectorXd ge = (gz - gz.dot(tr.z) * tr.z) / tr.e_norm;

  ConstMapMat proj(params_.data() + lay.proj, D, D);
  if (gp) MapMat(gp + lay.proj, D, D) += ge * tr.f_cls.transpose();
  Eigen::VectorXd gfc = proj.transpose() * ge;

  ConstMapVec lnf_g(params_.data() + lay.lnf_g, D);
  Eigen::ArrayXd q = gfc.array() * lnf_g.array();
  const double mq = q.mean();
  const double mqx = (q * tr.lnf_xhat.array()).mean();
  Eigen::VectorXd gx0 = (tr.lnf_inv * (q - mq - tr.lnf_xhat.array() * mqx)).matrix();
  if (gp) MapVec(gp + lay.lnf_g, D) += (gfc.array() * tr.lnf_xhat.array()).matrix();

  RowMat gx = RowMat::Zero(T, D);
  gx.row(0) = gx0.transpose();

  for (int l = lay.layers - 1; l >= 0; --l) {
    const auto& blk = lay.blocks[l];
    const auto& t = tr.layers[l];

    // x_next = r + gelu(ln2(r) W1^T) W2^T
    RowMat gr = gx;
    const RowMat& gh2 = gx;

    ConstMapMat w2(params_.data() + blk.w2, D, lay.mlp_dim);
    if (gp) MapMat(gp + blk.w2, D, lay.mlp_dim) += gh2.transpose() * t.g;
    RowMat gg = gh2 * w2;
    RowMat gh1 = gg.cwiseProduct(
        t.h1.unaryExpr([](double v) { return gauss_cdf(v) + v * gauss_pdf(v); }));

    ConstMapMat w1(params_.data() + blk.w1, lay.mlp_dim, D);
    if (gp) MapMat(gp + blk.w1, lay.mlp_dim, D) += gh1.transpose() * t.b;
    RowMat gb = gh1 * w1;

    ConstMapVec ln2_g(params_.data() + blk.ln2_g, D);
    gr += layernorm_backward(gb, t.ln2_xhat, t.ln2_inv, ln2_g, gp ? gp + blk.ln2_g : nullptr);

    // r = u + o_cat Wo^T
    RowMat gu = gr;
    const RowMat& gy = gr;

    ConstMapMat wo(params_.data() + blk.wo, D, D);
    if (gp) MapMat(gp + blk.wo, D, D) += gy.transpose() * t.o_cat;
    RowMat go = gy * wo;

    RowMat gq = RowMat::Zero(T, D);
    RowMat gk = RowMat::Zero(T, D);
    RowMat gv = RowMat::Zero(T, D);
    for (int h = 0; h < lay.heads; ++h) {
      const auto goh = go.middleCols(h * lay.head_dim, lay.head_dim);
      const auto qh = t.q.middleCols(h * lay.head_dim, lay.head_dim);
      const auto kh = t.k.middleCols(h * lay.head_dim, lay.head_dim);
      const auto vh = t.v.middleCols(h * lay.head_dim, lay.head_dim);
      const RowMat& p = t.attn[h];

      RowMat gph = goh * vh.transpose();
      gv.middleCols(h * lay.head_dim, lay.head_dim) = p.transpose() * goh;

      RowMat gsh(p.rows(), p.cols());
      for (Eigen::Index row = 0; row < p.rows(); ++row) {
        const double dot = gph.row(row).dot(p.row(row));
        gsh.row(row) = (p.row(row).array() * (gph.row(row).array() - dot)).matrix();
      }
      gsh *= scale;
      gq.middleCols(h * lay.head_dim, lay.head_dim) = gsh * kh;
      gk.middleCols(h * lay.head_dim, lay.head_dim) = gsh.transpose() * qh;
    }

    ConstMapMat wq(params_.data() + blk.wq, D, D);
    ConstMapMat wk(params_.data() + blk.wk, D, D);
    ConstMapMat wv(params_.data() + blk.wv, D, D);
    if (gp) {
      MapMat(gp + blk.wq, D, D) += gq.transpose() * t.a;
      MapMat(gp + blk.wk, D, D) += gk.transpose() * t.a;
      MapMat(gp + blk.wv, D, D) += gv.transpose() * t.a;
    }
    RowMat ga = gq * wq + gk * wk + gv * wv;

    ConstMapVec ln1_g(params_.data() + blk.ln1_g, D);
    gu += layernorm_backward(ga, t.ln1_xhat, t.ln1_inv, ln1_g, gp ? gp + blk.ln1_g : nullptr);
    gx = std::move(gu);
  }

  if (gp) MapVec(gp + lay.cls, D) += gx.row(0).transpose();

  ConstMapMat patch_w(params_.data() + lay.patch_w, D, lay.patch_dim);
  Eigen::VectorXd patch(lay.patch_dim);
  for (int gy2 = 0; gy2 < grid; ++gy2) {
    for (int gx2 = 0; gx2 < grid; ++gx2) {
      const int tok = 1 + gy2 * grid + gx2;
      const Eigen::VectorXd gtok = gx.row(tok).transpose();
      if (gp) {
        int j = 0;
        for (int py = 0; py < P; ++py) {
          for (int px = 0; px < P; ++px) {
            for (int c = 0; c < 3; ++c) patch(j++) = image.at(gy2 * P + py, gx2 * P + px, c);
          }
        }
        MapMat(gp + lay.patch_w, D, lay.patch_dim) += gtok * patch.transpose();
      }
      if (grad_image) {
        const Eigen::VectorXd gpix = patch_w.transpose() * gtok;
        int j = 0;
        for (int py = 0; py < P; ++py) {
          for (int px = 0; px < P; ++px) {
            for (int c = 0; c < 3; ++c) {
              grad_image->at(gy2 * P + py, gx2 * P + px, c) += gpix(j++);
            }
          }
        }
      }
    }
  }
}

Embedding ToyEncoder::encode_image(const ImageTensor& image) const {
  Trace tr;
  forward_image(image, tr);
  Embedding z;
  z.values.assign(tr.z.data(), tr.z.data() + tr.z.size());
  return z;
}

Embedding ToyEncoder::encode_text(const TextPrompt& prompt) const {
  if (prompt.text.empty()) raise(ErrorKind::input, "encode_text: empty prompt");
  const std::vector<std::string> tokens = tokenize(prompt.text);
  if (tokens.empty()) raise(ErrorKind::input, "encode_text: prompt contains no tokenizable words");

  const Layout& lay = layout();
  const int D = lay.dim;
  ConstMapMat tok_emb(params_.data() + lay.tok_emb, lay.vocab, D);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(D);
  for (const auto& tok : tokens) {
    const auto idx = static_cast<Eigen::Index>(fnv1a64(tok) % static_cast<std::uint64_t>(lay.vocab));
    mean += tok_emb.row(idx).transpose();
  }
  mean /= static_cast<double>(tokens.size());

  ConstMapMat text_proj(params_.data() + lay.text_proj, D, D);
  Eigen::VectorXd e = text_proj * mean;
  const double n = e.norm();
  if (!(n > 0.0) || !e.allFinite()) raise(ErrorKind::numerical, "encode_text: degenerate embedding");
  e /= n;
  Embedding z;
  z.values.assign(e.data(), e.data() + e.size());
  return z;
}

std::vector<std::vector<double>> ToyEncoder::cls_attention_rows(const ImageTensor& image) const {
  Trace tr;
  forward_image(image, tr);
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(cfg_.num_layers) * cfg_.num_heads);
  for (const auto& layer : tr.layers) {
    for (const auto& p : layer.attn) {
      rows.emplace_back(p.row(0).data(), p.row(0).data() + p.cols());
    }
  }
  return rows;
}

AttentionMap ToyEncoder::extract_cls_attention(const ImageTensor& image) const {
  const int grid = patch_grid();
  std::vector<std::vector<double>> rows = cls_attention_rows(image);
  std::vector<std::vector<double>> patch_rows;
  patch_rows.reserve(rows.size());
  for (auto& row : rows) {
    patch_rows.emplace_back(row.begin() + 1, row.end()); // drop the CLS->CLS entry
  }
  return average_cls_attention(patch_rows, grid);
}

ImageTensor ToyEncoder::image_gradient(const ImageTensor& image, const EmbeddingObjective& loss) const {
  Trace tr;
  forward_image(image, tr);
  Embedding z;
  z.values.assign(tr.z.data(), tr.z.data() + tr.z.size());
  Embedding gz = loss.gradient(z);
  if (gz.dim() != cfg_.embed_dim) {
    raise(ErrorKind::input, "image_gradient: objective gradient has wrong dimension");
  }
  ImageTensor grad = ImageTensor::zeros(image.height, image.width, image.channels);
  backward_image(image, tr, gz.values, &grad, nullptr);
  if (!all_finite(grad)) raise(ErrorKind::numerical, "image_gradient: non-finite gradient");
  return grad;
}

double ToyEncoder::objective_with_param_gradient(const ImageTensor& image,
                                                 const EmbeddingObjective& loss,
                                                 std::vector<double>& grad) const {
  if (grad.size() != params_.size()) {
    raise(ErrorKind::input, "objective_with_param_gradient: gradient buffer has wrong size");
  }
  Trace tr;
  forward_image(image, tr);
  Embedding z;
  z.values.assign(tr.z.data(), tr.z.data() + tr.z.size());
  const double value = loss.value(z);
  Embedding gz = loss.gradient(z);
  backward_image(image, tr, gz.values, nullptr, &grad);
  return value;
}

void ToyEncoder::save_checkpoint(const std::filesystem::path& path) const {
  nlohmann::json header;
  header["image_size"] = cfg_.image_size;
  header["patch_size"] = cfg_.patch_size;
  header["embed_dim"] = cfg_.embed_dim;
  header["num_layers"] = cfg_.num_layers;
  header["num_heads"] = cfg_.num_heads;
  header["text_vocab"] = cfg_.text_vocab;
  header["seed"] = cfg_.seed;
  header["param_count"] = params_.size();
  const std::string head = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::io, "cannot open checkpoint for writing: " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint64_t len = head.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(reinterpret_cast<const char*>(params_.data()),
            static_cast<std::streamsize>(params_.size() * sizeof(double)));
  if (!out) raise(ErrorKind::io, "failed writing checkpoint: " + path.string());
}

ToyEncoder ToyEncoder::load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::io, "cannot open checkpoint: " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    raise(ErrorKind::io, "not a toy-encoder checkpoint: " + path.string());
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (1u << 20)) raise(ErrorKind::io, "corrupt checkpoint header: " + path.string());
  std::string head(len, '\0');
  in.read(head.data(), static_cast<std::streamsize>(len));
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(head);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::io, std::string("corrupt checkpoint header: ") + e.what());
  }

  EncoderConfig cfg;
  cfg.image_size = header.at("image_size").get<int>();
  cfg.patch_size = header.at("patch_size").get<int>();
  cfg.embed_dim = header.at("embed_dim").get<int>();
  cfg.num_layers = header.at("num_layers").get<int>();
  cfg.num_heads = header.at("num_heads").get<int>();
  cfg.text_vocab = header.at("text_vocab").get<int>();
  cfg.seed = header.at("seed").get<std::uint64_t>();

  ToyEncoder enc(cfg);
  const auto expected = header.at("param_count").get<std::size_t>();
  if (expected != enc.params_.size()) {
    raise(ErrorKind::io, "checkpoint parameter count does not match config");
  }
  in.read(reinterpret_cast<char*>(enc.params_.data()),
          static_cast<std::streamsize>(enc.params_.size() * sizeof(double)));
  if (!in) raise(ErrorKind::io, "truncated checkpoint: " + path.string());
  return enc;
}

} // namespace segdebias
