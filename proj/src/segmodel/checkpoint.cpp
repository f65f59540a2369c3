#include "arspl/segmodel/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "arspl/core/error.hpp"

namespace arspl::segmodel {

namespace {

constexpr char kMagic[8] = {'A', 'R', 'S', 'P', 'L', 'C', 'K', 'P'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::string& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

void put_f64(std::string& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_f64(const std::string& in, std::size_t at) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::kCheckpointFormat, what); }

}  // namespace

std::string encode_checkpoint(const SegModel& model) {
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& p : model.params) {
    tensors.push_back({{"name", p.name}, {"shape", p.shape}, {"offset", offset}, {"count", p.values.size()}});
    offset += p.values.size();
  }
  const nlohmann::json header = {
      {"format_version", kCheckpointVersion},
      {"architecture",
       {{"kind", "unet2"}, {"widths", model.arch.widths}, {"dropout_rate", model.arch.dropout_rate}}},
      {"seed", model.seed},
      {"step_count", model.step_count},
      {"tensors", tensors}};
  const std::string text = header.dump();
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  for (const auto& p : model.params) {
    for (double v : p.values) put_f64(out, v);
  }
  return out;
}

SegModel decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) bad("not a model checkpoint");
  const std::uint32_t version = get_u32(bytes, 8);
  if (version != kCheckpointVersion) bad("unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t header_len = get_u32(bytes, 12);
  if (bytes.size() < 16 + static_cast<std::size_t>(header_len)) bad("checkpoint header is truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(16, header_len));
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("checkpoint header is not JSON: ") + e.what());
  }
  const std::size_t payload = 16 + header_len;
  SegModel m;
  try {
    const auto& arch = header.at("architecture");
    m.arch.widths = arch.at("widths").get<std::array<int, 3>>();
    m.arch.dropout_rate = arch.at("dropout_rate").get<double>();
    m.seed = header.at("seed").get<std::uint64_t>();
    m.step_count = header.at("step_count").get<std::int64_t>();
    for (const auto& t : header.at("tensors")) {
      ParamTensor p{t.at("name").get<std::string>(), t.at("shape").get<std::vector<int>>(), {}};
      const std::size_t offset = t.at("offset").get<std::size_t>();
      const std::size_t count = t.at("count").get<std::size_t>();
      if (payload + (offset + count) * 8 > bytes.size()) bad("checkpoint tensor " + p.name + " is truncated");
      p.values.resize(count);
      for (std::size_t i = 0; i < count; ++i) p.values[i] = get_f64(bytes, payload + (offset + i) * 8);
      m.params.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("checkpoint header field missing: ") + e.what());
  }
  return m;
}

void save_checkpoint(const SegModel& model, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

SegModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace arspl::segmodel
