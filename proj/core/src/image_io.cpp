#include "cain/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

#include "cain/errors.hpp"

namespace cain {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void check_image(const torch::Tensor& image) {
  if (image.dim() != 3 || image.size(0) != 3)
    throw ShapeError("expected a 3xHxW image, got " + shape_string(image));
}

std::vector<std::uint8_t> to_rgb8(const torch::Tensor& image) {
  check_image(image);
  auto hwc = image.detach().to(torch::kCPU, torch::kFloat32).permute({1, 2, 0}).contiguous();
  const float* src = hwc.data_ptr<float>();
  std::vector<std::uint8_t> out(static_cast<std::size_t>(hwc.numel()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = quantize_pixel(src[i]);
  return out;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void png_flush_noop(png_structp) {}

}  // namespace

std::uint8_t quantize_pixel(float x) {
  if (!std::isfinite(x)) x = -1.0f;
  const double v = std::round((static_cast<double>(x) + 1.0) / 2.0 * 255.0);
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

std::vector<std::uint8_t> encode_png(const torch::Tensor& image) {
  const auto rgb = to_rgb8(image);
  const auto height = static_cast<png_uint_32>(image.size(1));
  const auto width = static_cast<png_uint_32>(image.size(2));

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> out;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (png_uint_32 y = 0; y < height; ++y)
    png_write_row(png, const_cast<png_bytep>(rgb.data() + static_cast<std::size_t>(y) * width * 3));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const std::string& path, const torch::Tensor& image) {
  const auto bytes = encode_png(image);
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot open " + path + " for writing");
  if (std::fwrite(bytes.data(), 1, bytes.size(), f.get()) != bytes.size())
    throw IoError("short write to " + path);
}

torch::Tensor read_png(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw DataError("cannot open image " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("cannot decode PNG " + path);
  }
  png_init_io(png, f.get());
  png_read_info(png, info);

  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  const auto rowbytes = png_get_rowbytes(png, info);
  if (rowbytes != static_cast<std::size_t>(width) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("unsupported PNG layout in " + path);
  }
  std::vector<std::uint8_t> pixels(rowbytes * height);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  auto hwc = torch::from_blob(pixels.data(), {static_cast<int64_t>(height),
                                              static_cast<int64_t>(width), 3},
                              torch::kUInt8)
                 .to(torch::kFloat32);
  return (hwc / 255.0f * 2.0f - 1.0f).permute({2, 0, 1}).contiguous();
}

torch::Tensor tile_images(const std::vector<torch::Tensor>& images, int columns) {
  if (images.empty() || columns < 1) throw UsageError("tile_images needs images and columns >= 1");
  for (const auto& im : images) {
    check_image(im);
    if (im.sizes() != images.front().sizes())
      throw ShapeError("tile_images: mixed sizes " + shape_string(images.front()) + " vs " +
                       shape_string(im));
  }
  const auto n = static_cast<int>(images.size());
  const int rows = (n + columns - 1) / columns;
  std::vector<torch::Tensor> row_tensors;
  for (int r = 0; r < rows; ++r) {
    std::vector<torch::Tensor> cells;
    for (int c = 0; c < columns; ++c) {
      const int i = r * columns + c;
      cells.push_back(i < n ? images[i].detach().to(torch::kFloat32)
                            : torch::full_like(images.front(), -1.0f, torch::kFloat32));
    }
    row_tensors.push_back(torch::cat(cells, 2));
  }
  return torch::cat(row_tensors, 1);
}

}  // namespace cain
