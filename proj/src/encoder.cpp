#include "segdebias/encoder.hpp"

#include <cmath>

namespace segdebias {

void validate(const EncoderConfig& c) {
  if (c.image_size <= 0 || c.patch_size <= 0 || c.embed_dim <= 0 || c.num_layers <= 0 ||
      c.num_heads <= 0 || c.text_vocab <= 0) {
    raise(ErrorKind::config, "encoder config fields must be positive");
  }
  if (c.image_size % c.patch_size != 0) {
    raise(ErrorKind::config, "image_size must be a multiple of patch_size");
  }
  if (c.embed_dim % c.num_heads != 0) {
    raise(ErrorKind::config, "embed_dim must be divisible by num_heads");
  }
}

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

} // namespace

double cosine_similarity(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) raise(ErrorKind::input, "cosine_similarity: dimension mismatch");
  const double na = norm2(a.values);
  const double nb = norm2(b.values);
  if (na == 0.0 || nb == 0.0) raise(ErrorKind::numerical, "cosine_similarity: zero-norm vector");
  double dot = 0.0;
  for (int i = 0; i < a.dim(); ++i) dot += a.values[i] * b.values[i];
  return dot / (na * nb);
}

Embedding cosine_gradient(const Embedding& z, const Embedding& t) {
  if (z.dim() != t.dim()) raise(ErrorKind::input, "cosine_gradient: dimension mismatch");
  const double nz = norm2(z.values);
  const double nt = norm2(t.values);
  if (nz == 0.0 || nt == 0.0) raise(ErrorKind::numerical, "cosine_gradient: zero-norm vector");
  double dot = 0.0;
  for (int i = 0; i < z.dim(); ++i) dot += z.values[i] * t.values[i];
  Embedding g{std::vector<double>(z.values.size(), 0.0)};
  const double a = 1.0 / (nz * nt);
  const double b = dot / (nz * nz * nz * nt);
  for (int i = 0; i < z.dim(); ++i) g.values[i] = t.values[i] * a - z.values[i] * b;
  return g;
}

AttentionMap average_cls_attention(const std::vector<std::vector<double>>& rows, int grid) {
  const std::size_t cells = static_cast<std::size_t>(grid) * grid;
  if (rows.empty()) raise(ErrorKind::input, "average_cls_attention: no attention rows");
  AttentionMap map;
  map.grid = grid;
  map.values.assign(cells, 0.0);
  for (const auto& row : rows) {
    if (row.size() != cells) raise(ErrorKind::input, "average_cls_attention: row size mismatch");
    for (std::size_t i = 0; i < cells; ++i) {
      if (row[i] < 0.0) raise(ErrorKind::input, "average_cls_attention: negative attention weight");
      map.values[i] += row[i];
    }
  }
  double total = 0.0;
  for (auto& v : map.values) {
    v /= static_cast<double>(rows.size());
    total += v;
  }
  if (total <= 0.0) raise(ErrorKind::numerical, "average_cls_attention: zero attention mass");
  for (auto& v : map.values) v /= total;
  return map;
}

} // namespace segdebias
