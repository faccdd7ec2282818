#include "mods/image.hpp"

#include <png.h>

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace mods {

namespace {

int pgm_next_int(std::istream& in) {
  // Skips whitespace and '#' comments between header tokens.
  while (in) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  in >> value;
  return value;
}

Image load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  char p = 0, kind = 0;
  in.get(p);
  in.get(kind);
  if (p != 'P' || (kind != '2' && kind != '5')) fail(ErrorCode::IoError, path + ": not a P2/P5 PGM file");
  int w = pgm_next_int(in);
  int h = pgm_next_int(in);
  int maxval = pgm_next_int(in);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) fail(ErrorCode::IoError, path + ": bad PGM header");

  Image img(w, h);
  float scale = 1.0f / static_cast<float>(maxval);
  if (kind == '5') {
    in.get();  // single whitespace after maxval
    std::vector<std::uint8_t> row(static_cast<std::size_t>(w));
    for (int y = 0; y < h; ++y) {
      in.read(reinterpret_cast<char*>(row.data()), w);
      if (!in) fail(ErrorCode::IoError, path + ": truncated PGM data");
      for (int x = 0; x < w; ++x) img.at(y, x) = row[x] * scale;
    }
  } else {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        int value = pgm_next_int(in);
        if (value < 0) fail(ErrorCode::IoError, path + ": truncated PGM data");
        img.at(y, x) = value * scale;
      }
  }
  return img;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image load_png_file(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail(ErrorCode::IoError, "cannot open " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::IoError, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::IoError, path + ": PNG decode error");
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_uint_32 w = 0, h = 0;
  int depth = 0, color = 0;
  png_get_IHDR(png, info, &w, &h, &depth, &color, nullptr, nullptr, nullptr);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  int channels = png_get_channels(png, info);
  std::vector<std::uint8_t> raster(static_cast<std::size_t>(w) * h * channels);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = raster.data() + static_cast<std::size_t>(y) * w * channels;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(static_cast<int>(w), static_cast<int>(h));
  const float inv = 1.0f / 255.0f;
  for (png_uint_32 y = 0; y < h; ++y) {
    const std::uint8_t* row = raster.data() + static_cast<std::size_t>(y) * w * channels;
    for (png_uint_32 x = 0; x < w; ++x) {
      if (channels >= 3) {
        const std::uint8_t* p = row + x * channels;
        // BT.601 luma
        img.at(y, x) = (0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2]) * inv;
      } else {
        img.at(y, x) = row[x * channels] * inv;
      }
    }
  }
  return img;
}

std::uint8_t to_byte(float s) {
  float c = s < 0.0f ? 0.0f : (s > 1.0f ? 1.0f : s);
  return static_cast<std::uint8_t>(c * 255.0f + 0.5f);
}

void write_png_raster(const std::string& path, int w, int h, int channels, const std::uint8_t* raster) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail(ErrorCode::IoError, "cannot open " + path + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::IoError, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::IoError, path + ": PNG encode error");
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, w, h, 8, channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y)
    rows[y] = const_cast<png_bytep>(raster + static_cast<std::size_t>(y) * w * channels);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  std::string tail = s.substr(s.size() - suffix.size());
  for (auto& c : tail) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return tail == suffix;
}

}  // namespace

Image load_image(const std::string& path) {
  if (has_suffix(path, ".pgm")) return load_pgm(path);
  if (has_suffix(path, ".png")) return load_png_file(path);
  // Sniff the magic bytes for files with other extensions.
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  in.close();
  if (magic[0] == 'P' && (magic[1] == '2' || magic[1] == '5')) return load_pgm(path);
  return load_png_file(path);
}

void save_png(const std::string& path, const Image& img) {
  std::vector<std::uint8_t> raster(static_cast<std::size_t>(img.width()) * img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      raster[static_cast<std::size_t>(y) * img.width() + x] = to_byte(img.at(y, x));
  write_png_raster(path, img.width(), img.height(), 1, raster.data());
}

void save_png(const std::string& path, const RgbImage& img) {
  write_png_raster(path, img.w, img.h, 3, img.data.data());
}

void save_pgm(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      out.put(static_cast<char>(to_byte(img.at(y, x))));
}

}  // namespace mods
