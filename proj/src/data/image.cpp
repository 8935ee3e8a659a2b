// SPDX-License-Identifier: Apache-2.0
#include "tanet/data/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <vector>

namespace tanet::data {

namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

Image from_bytes(std::size_t h, std::size_t w, const std::vector<std::uint8_t>& bytes) {
  Image out = make_image(h, w);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = bytes[i] / 255.0;
  return out;
}

std::vector<std::uint8_t> to_bytes(const Image& image) {
  std::vector<std::uint8_t> bytes(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) bytes[i] = to_byte(image[i]);
  return bytes;
}

void require_rgb(const Image& image, const std::filesystem::path& path) {
  const Shape& s = image.shape();
  if (s.batch() != 1 || s.channels() != 3) {
    throw ShapeError("cannot write " + path.string() + ": expected a (1, H, W, 3) image, got " +
                     s.str());
  }
}

// Next whitespace-separated PPM header token, skipping '#' comments.
std::string ppm_token(std::istream& in) {
  std::string token;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!token.empty()) return token;
      continue;
    }
    token.push_back(c);
  }
  return token;
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  if (ppm_token(in) != "P6") throw IoError(path.string() + ": not a binary PPM (P6)");
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(ppm_token(in));
    h = std::stoul(ppm_token(in));
    maxval = std::stoul(ppm_token(in));
  } catch (const std::exception&) {
    throw IoError(path.string() + ": malformed PPM header");
  }
  if (w == 0 || h == 0) throw IoError(path.string() + ": empty PPM image");
  if (maxval != 255) throw IoError(path.string() + ": only 8-bit PPM (maxval 255) is supported");
  std::vector<std::uint8_t> bytes(w * h * 3);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw IoError(path.string() + ": truncated PPM payload");
  }
  return from_bytes(h, w, bytes);
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P6\n" << image.shape().width() << ' ' << image.shape().height() << "\n255\n";
  const auto bytes = to_bytes(image);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Image read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw IoError("cannot read " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, bytes.data(), 0, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw IoError("cannot decode " + path.string() + ": " + message);
  }
  return from_bytes(png.height, png.width, bytes);
}

void write_png(const std::filesystem::path& path, const Image& image) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.shape().width());
  png.height = static_cast<png_uint_32>(image.shape().height());
  png.format = PNG_FORMAT_RGB;
  const auto bytes = to_bytes(image);
  if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw IoError("cannot write " + path.string() + ": " + png.message);
  }
}

// Mirror index into [0, n) without repeating the edge sample.
std::size_t reflect_index(long long i, std::size_t n) {
  if (n == 1) return 0;
  const long long period = 2 * static_cast<long long>(n) - 2;
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < static_cast<long long>(n) ? i : period - i);
}

}  // namespace

Image make_image(std::size_t height, std::size_t width, double fill) {
  return Image(Shape(1, height, width, 3), fill);
}

bool is_image_file(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  return ext == ".png" || ext == ".ppm";
}

Image read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such image: " + path.string());
  const std::string ext = lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm") return read_ppm(path);
  throw IoError(path.string() + ": unsupported image extension (use .png or .ppm)");
}

void write_image(const std::filesystem::path& path, const Image& image) {
  require_rgb(image, path);
  const std::string ext = lower_extension(path);
  if (ext == ".png") return write_png(path, image);
  if (ext == ".ppm") return write_ppm(path, image);
  throw IoError(path.string() + ": unsupported image extension (use .png or .ppm)");
}

Image quantize8(const Image& image) {
  Image out = image;
  for (auto& v : out.data()) v = to_byte(v) / 255.0;
  return out;
}

template <std::floating_point T>
Tensor<T> reflect_pad(const Tensor<T>& image, std::size_t multiple) {
  if (multiple == 0) throw ParameterError("reflect_pad: multiple must be >= 1");
  const Shape& s = image.shape();
  const std::size_t h = (s.height() + multiple - 1) / multiple * multiple;
  const std::size_t w = (s.width() + multiple - 1) / multiple * multiple;
  if (h == s.height() && w == s.width()) return image;
  Tensor<T> out(Shape(s.batch(), h, w, s.channels()));
  for (std::size_t n = 0; n < s.batch(); ++n) {
    for (std::size_t y = 0; y < h; ++y) {
      const std::size_t sy = reflect_index(static_cast<long long>(y), s.height());
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t sx = reflect_index(static_cast<long long>(x), s.width());
        for (std::size_t c = 0; c < s.channels(); ++c) out.at(n, y, x, c) = image.at(n, sy, sx, c);
      }
    }
  }
  return out;
}

template <std::floating_point T>
Tensor<T> crop(const Tensor<T>& image, std::size_t y0, std::size_t x0, std::size_t height,
               std::size_t width) {
  const Shape& s = image.shape();
  if (y0 + height > s.height() || x0 + width > s.width()) {
    throw ShapeError("crop window exceeds image " + s.str());
  }
  Tensor<T> out(Shape(s.batch(), height, width, s.channels()));
  const std::size_t row = width * s.channels();
  for (std::size_t n = 0; n < s.batch(); ++n) {
    for (std::size_t y = 0; y < height; ++y) {
      std::copy_n(image.raw() + image.offset(n, y0 + y, x0, 0), row,
                  out.raw() + out.offset(n, y, 0, 0));
    }
  }
  return out;
}

template Tensor<float> reflect_pad(const Tensor<float>&, std::size_t);
template Tensor<double> reflect_pad(const Tensor<double>&, std::size_t);
template Tensor<float> crop(const Tensor<float>&, std::size_t, std::size_t, std::size_t,
                            std::size_t);
template Tensor<double> crop(const Tensor<double>&, std::size_t, std::size_t, std::size_t,
                             std::size_t);

}  // namespace tanet::data
