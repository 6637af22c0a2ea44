#include "dascd/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <memory>
#include <string>

namespace dascd {

Tensor to_tensor(const Image8& image) {
  Tensor t(Shape{image.channels, image.height, image.width});
  for (std::size_t c = 0; c < image.channels; ++c)
    for (std::size_t y = 0; y < image.height; ++y)
      for (std::size_t x = 0; x < image.width; ++x) t.at(c, y, x) = image.at(y, x, c) / 255.0;
  return t;
}

namespace {

png_uint_32 format_for(std::size_t channels) {
  if (channels == 1) return PNG_FORMAT_GRAY;
  if (channels == 3) return PNG_FORMAT_RGB;
  throw ContractError("PNG images must have 1 or 3 channels, got " + std::to_string(channels));
}

}  // namespace

void save_image(const std::filesystem::path& path, const Image8& image) {
  if (image.pixels.size() != image.height * image.width * image.channels || image.height == 0 || image.width == 0) {
    throw ContractError("save_image: inconsistent image buffer for " + path.string());
  }
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = format_for(image.channels);
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, image.pixels.data(), 0, nullptr)) {
    throw IngestError("cannot write " + path.string() + ": " + img.message);
  }
}

Image8 load_image(const std::filesystem::path& path, std::size_t channels) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    throw IngestError("cannot read image " + path.string() + ": " + img.message);
  }
  img.format = format_for(channels);
  Image8 out(img.height, img.width, channels);
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw IngestError("cannot decode image " + path.string() + ": " + msg);
  }
  return out;
}

void save_mask(const std::filesystem::path& path, const BinaryMap& mask) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) throw IngestError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IngestError("libpng initialization failed");
  }
  // Packed rows: 8 pixels per byte, most significant bit first.
  const std::size_t stride = (mask.width + 7) / 8;
  std::vector<png_byte> rows(stride * mask.height, 0);
  for (std::size_t y = 0; y < mask.height; ++y)
    for (std::size_t x = 0; x < mask.width; ++x)
      if (mask(y, x)) rows[y * stride + x / 8] |= static_cast<png_byte>(0x80u >> (x % 8));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IngestError("failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(mask.width), static_cast<png_uint_32>(mask.height), 1,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < mask.height; ++y) png_write_row(png, &rows[y * stride]);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

LabelMap label_from_gray(const Image8& gray, const std::string& origin) {
  if (gray.channels != 1) throw IngestError("label " + origin + " must be single-channel");
  bool has_255 = false, has_other = false;
  for (auto v : gray.pixels) {
    has_255 = has_255 || v == 255;
    has_other = has_other || (v != 0 && v != 1 && v != 255);
  }
  if (has_other) throw IngestError("label " + origin + " has values outside {0, 255}");
  LabelMap out(gray.height, gray.width);
  for (std::size_t p = 0; p < out.size(); ++p) {
    const auto v = gray.pixels[p];
    if (has_255 && v == 1) throw IngestError("label " + origin + " mixes 0/1 and 0/255 encodings");
    out.values[p] = v != 0 ? 1 : 0;
  }
  return out;
}

LabelMap load_label(const std::filesystem::path& path) { return label_from_gray(load_image(path, 1), path.string()); }

}  // namespace dascd
