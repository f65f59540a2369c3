#include "arspl/core/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "arspl/core/error.hpp"

namespace arspl {

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
bool next_token(const std::string& bytes, std::size_t& pos, std::string& token) {
  token.clear();
  while (pos < bytes.size()) {
    const char c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    token.push_back(bytes[pos++]);
  }
  return !token.empty();
}

int parse_header_int(const std::string& bytes, std::size_t& pos, const char* field) {
  std::string token;
  if (!next_token(bytes, pos, token)) {
    throw Error(ErrorCode::kMalformedHeader, std::string("PGM header missing ") + field);
  }
  if (!std::all_of(token.begin(), token.end(),
                   [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) ||
      token.size() > 9) {
    throw Error(ErrorCode::kMalformedHeader,
                std::string("PGM header field ") + field + " is not a number: " + token);
  }
  return std::stoi(token);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace

std::uint8_t quantize_unit(double value) {
  const double v = std::clamp(value, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

GrayImage decode_pgm(const std::string& bytes) {
  std::size_t pos = 0;
  std::string magic;
  if (!next_token(bytes, pos, magic)) throw Error(ErrorCode::kMalformedHeader, "empty PGM");
  if (magic != "P5") {
    if (magic.size() == 2 && magic[0] == 'P') {
      throw Error(ErrorCode::kUnsupportedFormat, "only binary PGM (P5) is supported, got " + magic);
    }
    throw Error(ErrorCode::kMalformedHeader, "not a PGM file");
  }
  const int width = parse_header_int(bytes, pos, "width");
  const int height = parse_header_int(bytes, pos, "height");
  const int maxval = parse_header_int(bytes, pos, "maxval");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kMalformedHeader, "PGM dimensions must be positive");
  if (maxval != 255) {
    throw Error(ErrorCode::kUnsupportedMaxval, "PGM maxval must be 255, got " + std::to_string(maxval));
  }
  // Exactly one whitespace byte separates the header from the payload.
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw Error(ErrorCode::kTruncatedPayload, "PGM payload missing");
  }
  ++pos;
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (bytes.size() - pos < n) {
    throw Error(ErrorCode::kTruncatedPayload, "PGM payload has " + std::to_string(bytes.size() - pos) +
                                                  " bytes, expected " + std::to_string(n));
  }
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = static_cast<unsigned char>(bytes[pos + i]) / 255.0;
  }
  return GrayImage(width, height, std::move(data));
}

GrayImage load_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }

std::string encode_pgm(const GrayImage& image) {
  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.reserve(out.size() + image.data.size());
  for (double v : image.data) out.push_back(static_cast<char>(quantize_unit(v)));
  return out;
}

void save_pgm(const GrayImage& image, const std::filesystem::path& path) {
  write_file(path, encode_pgm(image));
}

GrayImage labels_to_image(const LabelGrid& labels) {
  GrayImage img(labels.width, labels.height);
  for (std::size_t i = 0; i < labels.labels.size(); ++i) img.data[i] = labels.labels[i] ? 1.0 : 0.0;
  return img;
}

LabelGrid image_to_labels(const GrayImage& image) {
  LabelGrid out(image.width, image.height);
  for (std::size_t i = 0; i < image.data.size(); ++i) out.labels[i] = image.data[i] >= 0.5 ? 1 : 0;
  return out;
}

LabelGrid load_label_pgm(const std::filesystem::path& path) { return image_to_labels(load_pgm(path)); }

void save_label_pgm(const LabelGrid& labels, const std::filesystem::path& path) {
  save_pgm(labels_to_image(labels), path);
}

}  // namespace arspl
