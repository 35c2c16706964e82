#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace cain {

/// Maps [-1, 1] to 8-bit with round((x + 1) / 2 * 255), clamped.
std::uint8_t quantize_pixel(float x);

/// 3xHxW float tensor in [-1, 1] -> 8-bit RGB PNG.
void write_png(const std::string& path, const torch::Tensor& image);

/// Encodes into memory; identical bytes to write_png.
std::vector<std::uint8_t> encode_png(const torch::Tensor& image);

/// 8-bit RGB/RGBA/gray PNG -> 3xHxW float tensor in [-1, 1].
torch::Tensor read_png(const std::string& path);

/// Concatenates equally sized 3xHxW images into a grid of `columns` columns.
torch::Tensor tile_images(const std::vector<torch::Tensor>& images, int columns);

}  // namespace cain
