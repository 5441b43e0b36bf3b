#pragma once

// Named numeric array archive in the safetensors layout: an 8-byte
// little-endian header length, a JSON header describing every array
// (dtype, shape, byte offsets) plus a string->string "__metadata__" map,
// then the raw little-endian array bytes.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "wfp/error.hpp"
#include "wfp/traces.hpp"

namespace wfp {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

struct NamedArray {
  std::string dtype;  // "I8", "I64", "F32", "F64"
  std::vector<std::int64_t> shape;
  std::vector<std::byte> bytes;

  std::int64_t element_count() const {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
};

namespace detail {

template <class T>
constexpr const char* dtype_name() {
  if constexpr (std::is_same_v<T, std::int8_t>) return "I8";
  else if constexpr (std::is_same_v<T, std::int64_t>) return "I64";
  else if constexpr (std::is_same_v<T, float>) return "F32";
  else if constexpr (std::is_same_v<T, double>) return "F64";
  else static_assert(!sizeof(T), "unsupported dtype");
}

inline std::size_t dtype_size(const std::string& dtype) {
  if (dtype == "I8") return 1;
  if (dtype == "F32") return 4;
  if (dtype == "I64" || dtype == "F64") return 8;
  throw IoError("unsupported dtype " + dtype);
}

}  // namespace detail

template <class T>
NamedArray make_array(std::span<const T> values, std::vector<std::int64_t> shape) {
  NamedArray a{detail::dtype_name<T>(), std::move(shape), {}};
  if (a.element_count() != static_cast<std::int64_t>(values.size())) throw ShapeError("array shape does not match value count");
  a.bytes.resize(values.size_bytes());
  if (!values.empty()) std::memcpy(a.bytes.data(), values.data(), values.size_bytes());
  return a;
}

template <class T>
std::vector<T> array_values(const NamedArray& a) {
  if (a.dtype != detail::dtype_name<T>()) throw IoError("expected dtype " + std::string(detail::dtype_name<T>()) + ", found " + a.dtype);
  std::vector<T> out(a.bytes.size() / sizeof(T));
  if (!out.empty()) std::memcpy(out.data(), a.bytes.data(), a.bytes.size());
  return out;
}

struct Archive {
  std::map<std::string, NamedArray> arrays;
  std::map<std::string, std::string> metadata;

  const NamedArray& at(const std::string& name) const {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw IoError("archive has no array '" + name + "'");
    return it->second;
  }
};

inline std::string encode_archive(const Archive& archive) {
  nlohmann::json header = nlohmann::json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, a] : archive.arrays) {
    if (name == "__metadata__") throw IoError("reserved array name");
    header[name] = {{"dtype", a.dtype}, {"shape", a.shape}, {"data_offsets", {offset, offset + a.bytes.size()}}};
    offset += a.bytes.size();
  }
  if (!archive.metadata.empty()) header["__metadata__"] = archive.metadata;

  std::string text = header.dump();
  while ((text.size() + 8) % 8 != 0) text.push_back(' ');

  std::string out;
  out.reserve(8 + text.size() + offset);
  const std::uint64_t n = text.size();
  out.append(reinterpret_cast<const char*>(&n), 8);
  out += text;
  for (const auto& [name, a] : archive.arrays) out.append(reinterpret_cast<const char*>(a.bytes.data()), a.bytes.size());
  return out;
}

inline Archive decode_archive(std::string_view data) {
  if (data.size() < 8) throw IoError("archive truncated");
  std::uint64_t n = 0;
  std::memcpy(&n, data.data(), 8);
  if (n > data.size() - 8) throw IoError("archive header length out of range");
  const auto header = nlohmann::json::parse(data.substr(8, n), nullptr, false);
  if (header.is_discarded() || !header.is_object()) throw IoError("archive header is not a JSON object");
  const std::string_view body = data.substr(8 + n);

  Archive archive;
  for (const auto& [name, entry] : header.items()) {
    if (name == "__metadata__") {
      archive.metadata = entry.get<std::map<std::string, std::string>>();
      continue;
    }
    NamedArray a;
    a.dtype = entry.at("dtype").get<std::string>();
    a.shape = entry.at("shape").get<std::vector<std::int64_t>>();
    const auto offsets = entry.at("data_offsets").get<std::vector<std::uint64_t>>();
    if (offsets.size() != 2 || offsets[0] > offsets[1] || offsets[1] > body.size())
      throw IoError("bad offsets for array '" + name + "'");
    const auto size = offsets[1] - offsets[0];
    if (size != static_cast<std::uint64_t>(a.element_count()) * detail::dtype_size(a.dtype))
      throw IoError("size mismatch for array '" + name + "'");
    a.bytes.resize(size);
    if (size) std::memcpy(a.bytes.data(), body.data() + offsets[0], size);
    archive.arrays.emplace(name, std::move(a));
  }
  return archive;
}

inline void write_archive(const std::filesystem::path& path, const Archive& archive) {
  detail::write_file(path, encode_archive(archive));
}

inline Archive read_archive(const std::filesystem::path& path) {
  try {
    return decode_archive(detail::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace wfp
