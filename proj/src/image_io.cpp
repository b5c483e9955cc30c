#include "mouldmark/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

// jpeglib.h needs FILE and size_t declared first.
#include <jpeglib.h>

#include "mouldmark/error.hpp"

namespace mouldmark {

ImageFormat detect_format(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kPng[] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (bytes.size() >= 8 && std::equal(std::begin(kPng), std::end(kPng), bytes.begin())) {
    return ImageFormat::Png;
  }
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    return ImageFormat::Jpeg;
  }
  if (bytes.size() >= 3 && bytes[0] == 'P' &&
      (bytes[1] == '2' || bytes[1] == '3' || bytes[1] == '5' || bytes[1] == '6') &&
      std::isspace(bytes[2])) {
    return ImageFormat::Pnm;
  }
  return ImageFormat::Unknown;
}

namespace {

// ---------------------------------------------------------------- PNG

struct PngReadState {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void png_read_callback(png_structp png, png_bytep out, png_size_t count) {
  auto* state = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (state->offset + count > state->bytes.size()) png_error(png, "truncated PNG");
  std::memcpy(out, state->bytes.data() + state->offset, count);
  state->offset += count;
}

void png_error_callback(png_structp png, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = msg;
  png_longjmp(png, 1);
}

void png_warning_callback(png_structp, png_const_charp) {}

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message,
                                           png_error_callback, png_warning_callback);
  if (!png) throw Error(ErrorCode::Io, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  PngReadState state{bytes, 0};
  std::vector<std::uint8_t> raw;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int channels = 0, depth = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::UnsupportedFormat, "PNG decode failed: " + message);
  }
  png_set_read_fn(png, &state, png_read_callback);
  png_read_info(png, info);
  int color_type = png_get_color_type(png, info);
  depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_strip_alpha(png);
  }
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  channels = png_get_channels(png, info);
  depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  raw.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = raw.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const double maxval = depth == 16 ? 65535.0 : 255.0;
  std::vector<double> out(static_cast<std::size_t>(width) * height * 3);
  for (png_uint_32 y = 0; y < height; ++y) {
    for (png_uint_32 x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const int src_c = channels >= 3 ? c : 0;
        const std::size_t idx = static_cast<std::size_t>(x) * channels + src_c;
        double v = 0;
        if (depth == 16) {
          std::uint16_t s;
          std::memcpy(&s, rows[y] + 2 * idx, 2);
          v = s / maxval;
        } else {
          v = rows[y][idx] / maxval;
        }
        out[(static_cast<std::size_t>(y) * width + x) * 3 + c] = v;
      }
    }
  }
  return RgbImage(static_cast<int>(width), static_cast<int>(height), std::move(out));
}

void png_write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_callback(png_structp) {}

std::vector<std::uint8_t> encode_png_raw(int width, int height, int channels,
                                         const std::vector<std::uint8_t>& pixels) {
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message,
                                            png_error_callback, png_warning_callback);
  if (!png) throw Error(ErrorCode::Io, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> out;
  std::vector<png_const_bytep> rows(static_cast<std::size_t>(height));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::Io, "PNG encode failed: " + message);
  }
  png_set_write_fn(png, &out, png_write_callback, png_flush_callback);
  png_set_IHDR(png, info, width, height, 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  // Fixed zlib settings and no timestamps keep the output byte-stable.
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    rows[y] = pixels.data() + static_cast<std::size_t>(y) * width * channels;
  }
  png_write_rows(png, const_cast<png_bytepp>(rows.data()), height);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// ---------------------------------------------------------------- JPEG

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

RgbImage decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager jerr{};
  cinfo.err = jpeg_std_error(&jerr.base);
  jerr.base.error_exit = jpeg_error_exit;
  std::vector<std::uint8_t> raw;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorCode::UnsupportedFormat, std::string("JPEG decode failed: ") + jerr.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.jpeg_color_space == JCS_GRAYSCALE ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const int width = static_cast<int>(cinfo.output_width);
  const int height = static_cast<int>(cinfo.output_height);
  const int channels = cinfo.output_components;
  raw.resize(static_cast<std::size_t>(width) * height * channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = raw.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);

  std::vector<double> out(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < static_cast<std::size_t>(width) * height; ++i) {
    for (int c = 0; c < 3; ++c) {
      out[i * 3 + c] = raw[i * channels + (channels >= 3 ? c : 0)] / 255.0;
    }
  }
  return RgbImage(width, height, std::move(out));
}

// ---------------------------------------------------------------- PNM

class PnmReader {
 public:
  explicit PnmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  long next_int() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw Error(ErrorCode::UnsupportedFormat, "malformed PNM header");
    }
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > 1'000'000'000L) throw Error(ErrorCode::UnsupportedFormat, "PNM value too large");
    }
    return v;
  }

  void skip_single_space() {
    if (pos_ < bytes_.size() && std::isspace(bytes_[pos_])) ++pos_;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::uint8_t byte() { return bytes_[pos_++]; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

RgbImage decode_pnm(std::span<const std::uint8_t> bytes) {
  const char kind = static_cast<char>(bytes[1]);
  const bool color = kind == '3' || kind == '6';
  const bool binary = kind == '5' || kind == '6';
  PnmReader reader(bytes);
  const long width = reader.next_int();
  const long height = reader.next_int();
  const long maxval = reader.next_int();
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
    throw Error(ErrorCode::UnsupportedFormat, "invalid PNM dimensions or maxval");
  }
  const int channels = color ? 3 : 1;
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  std::vector<double> samples(count);
  if (binary) {
    reader.skip_single_space();
    const int bytes_per = maxval > 255 ? 2 : 1;
    if (reader.remaining() < count * bytes_per) {
      throw Error(ErrorCode::UnsupportedFormat, "truncated PNM raster");
    }
    for (std::size_t i = 0; i < count; ++i) {
      unsigned v = reader.byte();
      if (bytes_per == 2) v = (v << 8) | reader.byte();
      samples[i] = std::min(1.0, v / static_cast<double>(maxval));
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      samples[i] = std::min(1.0, reader.next_int() / static_cast<double>(maxval));
    }
  }
  std::vector<double> out(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < static_cast<std::size_t>(width) * height; ++i) {
    for (int c = 0; c < 3; ++c) out[i * 3 + c] = samples[i * channels + (color ? c : 0)];
  }
  return RgbImage(static_cast<int>(width), static_cast<int>(height), std::move(out));
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace

RgbImage decode_image(std::span<const std::uint8_t> bytes) {
  switch (detect_format(bytes)) {
    case ImageFormat::Png: return decode_png(bytes);
    case ImageFormat::Jpeg: return decode_jpeg(bytes);
    case ImageFormat::Pnm: return decode_pnm(bytes);
    case ImageFormat::Unknown: break;
  }
  throw Error(ErrorCode::UnsupportedFormat, "unsupported image format");
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

RgbImage read_image(const std::filesystem::path& path) {
  return decode_image(read_file_bytes(path));
}

GrayImage read_gray(const std::filesystem::path& path) { return to_grayscale(read_image(path)); }

std::vector<std::uint8_t> encode_png(const GrayImage& img) {
  std::vector<std::uint8_t> px(img.pixels().size());
  const auto v = img.pixels().values();
  std::transform(v.begin(), v.end(), px.begin(), to_byte);
  return encode_png_raw(img.width(), img.height(), 1, px);
}

std::vector<std::uint8_t> encode_png(const RgbImage& img) {
  std::vector<std::uint8_t> px(img.data().size());
  std::transform(img.data().begin(), img.data().end(), px.begin(), to_byte);
  return encode_png_raw(img.width(), img.height(), 3, px);
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  std::ostringstream header;
  header << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  const std::string h = header.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());
  for (double v : img.pixels().values()) out.push_back(to_byte(v));
  return out;
}

void write_image(const std::filesystem::path& path, const GrayImage& img) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    write_file_bytes(path, encode_png(img));
  } else if (ext == ".pgm") {
    write_file_bytes(path, encode_pgm(img));
  } else {
    throw Error(ErrorCode::UnsupportedFormat, "gray images are written as .png or .pgm");
  }
}

void write_image(const std::filesystem::path& path, const RgbImage& img) {
  if (lower_extension(path) != ".png") {
    throw Error(ErrorCode::UnsupportedFormat, "RGB images are written as .png");
  }
  write_file_bytes(path, encode_png(img));
}

GrayImage normalize_for_display(const Field& field) {
  Field out(field.width(), field.height(), 0.5);
  if (field.empty()) return GrayImage(std::move(out));
  const auto v = field.values();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double range = *hi - *lo;
  if (range > 0) {
    auto o = out.values();
    for (std::size_t i = 0; i < v.size(); ++i) o[i] = (v[i] - *lo) / range;
  }
  return GrayImage::clamped(std::move(out));
}

}  // namespace mouldmark
