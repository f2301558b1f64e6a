// Copyright (c) 2026, The tvgan Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// 8-bit grayscale image files: PNG (via libpng) and portable graymap (P2/P5).

#pragma once

#include <png.h>

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tvgan/errors.hpp"

namespace tvgan {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(w * h, fill) {}

  std::uint8_t& at(std::size_t row, std::size_t col) { return pixels[row * width + col]; }
  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }

  bool operator==(const GrayImage&) const = default;
};

namespace detail {

inline GrayImage read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DataError(path.string() + ": malformed PNG (" + msg + ")");
  }
  image.format = PNG_FORMAT_GRAY;
  GrayImage img(image.width, image.height);
  if (!png_image_finish_read(&image, nullptr, img.pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DataError(path.string() + ": malformed PNG (" + msg + ")");
  }
  return img;
}

inline GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(path.string() + ": cannot open");
  auto bad = [&](const std::string& why) { return DataError(path.string() + ": malformed PGM (" + why + ")"); };
  std::string magic;
  is >> magic;
  if (magic != "P5" && magic != "P2") throw bad("magic " + magic);
  auto next_int = [&]() -> long {
    while (true) {
      is >> std::ws;
      if (is.peek() == '#') {
        std::string comment;
        std::getline(is, comment);
        continue;
      }
      long v = -1;
      if (!(is >> v)) throw bad("truncated header");
      return v;
    }
  };
  const long w = next_int(), h = next_int(), maxval = next_int();
  if (w <= 0 || h <= 0) throw bad("non-positive size");
  if (maxval <= 0 || maxval > 255) throw bad("maxval must be in [1, 255]");
  GrayImage img(static_cast<std::size_t>(w), static_cast<std::size_t>(h));
  if (magic == "P5") {
    is.get();  // single whitespace after maxval
    is.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (is.gcount() != static_cast<std::streamsize>(img.pixels.size())) throw bad("truncated pixel data");
  } else {
    for (auto& p : img.pixels) {
      long v = next_int();
      if (v < 0 || v > maxval) throw bad("pixel out of range");
      p = static_cast<std::uint8_t>(v);
    }
  }
  if (maxval != 255) {
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>((p * 255 + maxval / 2) / maxval);
  }
  return img;
}

}  // namespace detail

inline bool is_image_file(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".png" || ext == ".pgm";
}

/// Reads an 8-bit grayscale PNG or PGM; the format is chosen by content.
/// Colour PNGs are converted to gray.
inline GrayImage read_image(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError(path.string() + ": cannot open");
  unsigned char sig[8] = {};
  is.read(reinterpret_cast<char*>(sig), 8);
  if (is.gcount() >= 8 && png_sig_cmp(sig, 0, 8) == 0) return detail::read_png(path);
  if (is.gcount() >= 2 && sig[0] == 'P' && (sig[1] == '5' || sig[1] == '2')) {
    return detail::read_pgm(path);
  }
  throw DataError(path.string() + ": not a PNG or PGM image");
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError(path.string() + ": cannot open for writing");
  os << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!os) throw DataError(path.string() + ": write failed");
}

inline void write_png(const std::filesystem::path& path, const GrayImage& img) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DataError(path.string() + ": PNG write failed (" + msg + ")");
  }
}

/// Writes PNG for a .png extension and PGM otherwise.
inline void write_image(const std::filesystem::path& path, const GrayImage& img) {
  if (path.extension() == ".png") {
    write_png(path, img);
  } else {
    write_pgm(path, img);
  }
}

}  // namespace tvgan
