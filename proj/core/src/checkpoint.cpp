#include "fedsim/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "fedsim/errors.hpp"

namespace fedsim {

namespace {

constexpr char kMagic[8] = {'F', 'S', 'I', 'M', 'C', 'K', 'P', 'T'};

using json = nlohmann::json;

void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

std::uint64_t get_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  }
  return v;
}

std::string header_json(const ParameterSet& params) {
  json tensors = json::array();
  for (const auto& e : params.entries()) {
    tensors.push_back({{"name", e.name}, {"shape", e.shape}});
  }
  json header = {{"schema", 1},
                 {"dtype", "f64"},
                 {"schema_hash", params.schema_hash()},
                 {"tensors", tensors}};
  return header.dump();
}

}  // namespace

std::size_t checkpoint_byte_size(const ParameterSet& params) {
  return 16 + header_json(params).size() + 8 * params.total_elements();
}

void write_param_checkpoint(const std::filesystem::path& path,
                            const ParameterSet& params) {
  std::string buf;
  buf.reserve(checkpoint_byte_size(params));
  buf.append(kMagic, sizeof(kMagic));
  const std::string header = header_json(params);
  put_u64_le(buf, header.size());
  buf += header;
  for (const auto& e : params.entries()) {
    for (double v : e.values) {
      put_u64_le(buf, std::bit_cast<std::uint64_t>(v));
    }
  }

  // Write to a temp name and rename so a crash never leaves a torn file.
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot open '" + tmp.string() + "' for writing");
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) {
      throw IoError("short write to '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoError("rename '" + tmp.string() + "' -> '" + path.string() +
                  "': " + ec.message());
  }
}

ParameterSet read_param_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open checkpoint '" + path.string() + "'");
  }
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(buf.data());

  if (buf.size() < 16 || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CorruptCheckpoint("'" + path.string() +
                            "' is not a parameter checkpoint");
  }
  const std::uint64_t header_len = get_u64_le(data + 8);
  if (16 + header_len > buf.size()) {
    throw CorruptCheckpoint("'" + path.string() + "': truncated header");
  }

  json header;
  try {
    header = json::parse(buf.substr(16, header_len));
  } catch (const json::parse_error& e) {
    throw CorruptCheckpoint("'" + path.string() + "': bad header JSON: " +
                            e.what());
  }
  if (header.value("dtype", "") != "f64") {
    throw CorruptCheckpoint("'" + path.string() + "': unsupported dtype");
  }

  std::vector<TensorEntry> entries;
  std::size_t off = 16 + header_len;
  for (const auto& t : header.at("tensors")) {
    TensorEntry e;
    e.name = t.at("name").get<std::string>();
    e.shape = t.at("shape").get<std::vector<std::size_t>>();
    const std::size_t n = e.element_count();
    if (off + 8 * n > buf.size()) {
      throw CorruptCheckpoint("'" + path.string() + "': truncated payload");
    }
    e.values.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      e.values[j] = std::bit_cast<double>(get_u64_le(data + off));
      off += 8;
    }
    entries.push_back(std::move(e));
  }
  if (off != buf.size()) {
    throw CorruptCheckpoint("'" + path.string() + "': trailing bytes");
  }

  ParameterSet params(std::move(entries));
  const std::string declared = header.value("schema_hash", "");
  if (!declared.empty() && declared != params.schema_hash()) {
    throw CorruptCheckpoint("'" + path.string() +
                            "': schema hash does not match header");
  }
  return params;
}

}  // namespace fedsim
