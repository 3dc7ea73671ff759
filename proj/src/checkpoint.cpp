#include "hag/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include <zlib.h>

namespace hag {

namespace {

constexpr char kMagic[8] = {'H', 'A', 'G', 'C', 'K', 'P', 'T', '\0'};

template <class T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <class T>
T get_le(const std::string& in, std::size_t pos) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

std::uint32_t crc32_of(const std::string& bytes, std::size_t len) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(len)));
}

}  // namespace

const TensorBlob* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["config"] = format_config(ckpt.config);
  header["dims"] = {{"vocab", ckpt.dims.vocab},
                    {"aspect_vocab", ckpt.dims.aspect_vocab},
                    {"relations", ckpt.dims.relations},
                    {"users", ckpt.dims.users},
                    {"items", ckpt.dims.items}};
  header["vocab"] = ckpt.vocab;
  header["trainer"] = ckpt.trainer;
  nlohmann::json dir = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& t : ckpt.tensors) {
    if (t.data.size() != t.shape.size()) throw CheckpointError("tensor " + t.name + ": data does not match shape");
    dir.push_back({{"name", t.name}, {"shape", {t.shape.rows, t.shape.cols}}, {"offset", offset}});
    offset += t.data.size();
  }
  header["tensors"] = dir;
  const std::string h = header.dump();

  std::string out(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, h.size());
  out += h;
  out.reserve(out.size() + offset * 8 + 4);
  for (const auto& t : ckpt.tensors)
    for (double d : t.data) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(d));
  put_le<std::uint32_t>(out, crc32_of(out, out.size()));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("cannot write checkpoint " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw CheckpointError("write failed for checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::string in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const std::string where = "checkpoint " + path.string();
  if (in.size() < sizeof kMagic + 4 + 8 + 4 || std::memcmp(in.data(), kMagic, sizeof kMagic) != 0) {
    throw CheckpointError(where + ": not a checkpoint file");
  }
  const auto version = get_le<std::uint32_t>(in, 8);
  if (version != kCheckpointVersion) {
    throw CheckpointError(where + ": version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const auto stored_crc = get_le<std::uint32_t>(in, in.size() - 4);
  if (crc32_of(in, in.size() - 4) != stored_crc) throw CheckpointError(where + ": checksum mismatch (corrupt or truncated)");
  const auto header_len = get_le<std::uint64_t>(in, 12);
  const std::size_t header_at = 20;
  if (header_len > in.size() - header_at - 4) throw CheckpointError(where + ": header length out of range");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(in.substr(header_at, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(where + ": bad header (" + e.what() + ")");
  }
  Checkpoint ckpt;
  try {
    ckpt.config = parse_config(header.at("config").get<std::string>());
    const auto& d = header.at("dims");
    ckpt.dims = {d.at("vocab"), d.at("aspect_vocab"), d.at("relations"), d.at("users"), d.at("items")};
    ckpt.vocab = header.at("vocab");
    ckpt.trainer = header.at("trainer");
    const std::size_t payload_at = header_at + header_len;
    const std::size_t payload_doubles = (in.size() - 4 - payload_at) / 8;
    if ((in.size() - 4 - payload_at) % 8 != 0) throw CheckpointError(where + ": payload is not a whole number of doubles");
    for (const auto& e : header.at("tensors")) {
      TensorBlob t;
      t.name = e.at("name").get<std::string>();
      t.shape = {e.at("shape").at(0).get<std::size_t>(), e.at("shape").at(1).get<std::size_t>()};
      const auto off = e.at("offset").get<std::size_t>();
      if (off + t.shape.size() > payload_doubles) throw CheckpointError(where + ": tensor " + t.name + " runs past the payload");
      t.data.resize(t.shape.size());
      for (std::size_t i = 0; i < t.data.size(); ++i)
        t.data[i] = std::bit_cast<double>(get_le<std::uint64_t>(in, payload_at + 8 * (off + i)));
      ckpt.tensors.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(where + ": bad header (" + e.what() + ")");
  }
  return ckpt;
}

void add_model_tensors(Checkpoint& ckpt, const HagModel& model, const std::string& prefix) {
  for (const auto& [name, t] : model.named_parameters())
    ckpt.tensors.push_back({prefix + name, t.shape(), {t.values().begin(), t.values().end()}});
}

void load_model_tensors(const Checkpoint& ckpt, HagModel& model, const std::string& prefix, bool strict) {
  std::set<std::string> expected;
  for (const auto& [name, t] : model.named_parameters()) {
    expected.insert(prefix + name);
    const TensorBlob* blob = ckpt.find(prefix + name);
    if (!blob) throw CheckpointError("checkpoint lacks tensor " + prefix + name);
    if (blob->shape != t.shape()) {
      throw CheckpointError("tensor " + prefix + name + ": checkpoint shape " + blob->shape.str() + ", model shape " +
                            t.shape().str());
    }
    Tensor dst = t;
    std::copy(blob->data.begin(), blob->data.end(), dst.mutable_values().begin());
  }
  if (!strict) return;
  for (const auto& t : ckpt.tensors) {
    if (t.name.compare(0, prefix.size(), prefix) != 0) continue;
    if (prefix.empty() && t.name.find('/') != std::string::npos) continue;
    if (!expected.count(t.name)) throw CheckpointError("unknown tensor name " + t.name);
  }
}

}  // namespace hag
