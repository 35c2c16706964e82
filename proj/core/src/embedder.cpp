#include "cain/embedder.hpp"

#include "cain/errors.hpp"

namespace cain {

namespace {

torch::Tensor order_free_sum(const torch::Tensor& t, int64_t dim) {
  return std::get<0>(t.sort(dim)).sum(dim);
}

void check_same_shapes(const std::vector<torch::Tensor>& ts, const char* what) {
  for (const auto& t : ts)
    if (t.sizes() != ts.front().sizes())
      throw ShapeError(std::string(what) + ": shape " + shape_string(t) + " differs from " +
                       shape_string(ts.front()));
}

}  // namespace

TargetedEmbedderImpl::TargetedEmbedderImpl(int embed_channels_) : embed_channels(embed_channels_) {
  const int half = std::max(1, embed_channels / 2);
  down1 = register_module("down1", ResBlock(9, half, 2));
  down2 = register_module("down2", ResBlock(half, embed_channels, 2));
  trunk = register_module("trunk", torch::nn::ModuleList());
  for (int i = 0; i < 4; ++i) trunk->push_back(ResBlock(embed_channels, embed_channels));
  e_head = register_module("e_head", ResBlock(embed_channels, embed_channels));
  r_head = register_module("r_head", ResBlock(embed_channels, embed_channels));
}

std::pair<torch::Tensor, torch::Tensor> TargetedEmbedderImpl::forward(
    const torch::Tensor& frames, const torch::Tensor& landmarks,
    const torch::Tensor& target_landmarks) {
  auto h = down2(down1(torch::cat({frames, landmarks, target_landmarks}, 1)));
  for (const auto& block : *trunk) h = block->as<ResBlockImpl>()->forward(h);
  auto e = e_head(h);
  auto r = torch::softplus(r_head(h)) + kResponsibilityEpsilon;
  return {e, r};
}

std::pair<SpatialEmbedding, ResponsibilityMap> embed_single(const torch::Tensor& frame,
                                                            const torch::Tensor& landmark,
                                                            const torch::Tensor& target_landmark,
                                                            TargetedEmbedder& embedder) {
  const bool ok = frame.dim() == 3 && frame.size(0) == 3 && frame.sizes() == landmark.sizes() &&
                  frame.sizes() == target_landmark.sizes();
  if (!ok)
    throw ShapeError("embed_single: frame " + shape_string(frame) + ", landmarks " +
                     shape_string(landmark) + ", target landmarks " +
                     shape_string(target_landmark) + " must all be 3xHxW of equal size");
  auto [e, r] = embedder->forward(frame.unsqueeze(0), landmark.unsqueeze(0),
                                  target_landmark.unsqueeze(0));
  return {SpatialEmbedding{e.squeeze(0)}, ResponsibilityMap{r.squeeze(0)}};
}

torch::Tensor combine_stacked(const torch::Tensor& e, const torch::Tensor& r, int64_t dim) {
  if (e.sizes() != r.sizes())
    throw ShapeError("combine: embedding " + shape_string(e) + " vs responsibility " +
                     shape_string(r));
  if (e.size(dim) == 0) throw UsageError("combine: no embeddings");
  if (e.size(dim) == 1) return e.squeeze(dim);
  return order_free_sum(e * r, dim) / order_free_sum(r, dim);
}

torch::Tensor combine_uniform_stacked(const torch::Tensor& e, int64_t dim) {
  if (e.size(dim) == 0) throw UsageError("combine_uniform: no embeddings");
  if (e.size(dim) == 1) return e.squeeze(dim);
  return order_free_sum(e, dim) / static_cast<double>(e.size(dim));
}

SpatialEmbedding combine_embeddings(
    const std::vector<std::pair<SpatialEmbedding, ResponsibilityMap>>& pairs) {
  if (pairs.empty()) throw UsageError("combine_embeddings: empty list");
  std::vector<torch::Tensor> es, rs;
  for (const auto& [e, r] : pairs) {
    es.push_back(e.values);
    rs.push_back(r.values);
  }
  check_same_shapes(es, "combine_embeddings");
  check_same_shapes(rs, "combine_embeddings");
  return {combine_stacked(torch::stack(es), torch::stack(rs), 0)};
}

SpatialEmbedding combine_uniform(const std::vector<SpatialEmbedding>& embeddings) {
  if (embeddings.empty()) throw UsageError("combine_uniform: empty list");
  std::vector<torch::Tensor> es;
  for (const auto& e : embeddings) es.push_back(e.values);
  check_same_shapes(es, "combine_uniform");
  return {combine_uniform_stacked(torch::stack(es), 0)};
}

}  // namespace cain
