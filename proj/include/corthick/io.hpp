// io.hpp - volume file IO.
//
// MVOL is the native on-disk format: an 8-byte magic "MVOL\0\0\0\1", a
// little-endian uint32 length, a UTF-8 JSON header of that length
//   {"channels":1|3,"dims":[nx,ny,nz],"dtype":"f32","spacing_mm":[sx,sy,sz]}
// and a little-endian IEEE-754 float32 payload, x-fastest, channel-interleaved
// when channels == 3.
//
// NIfTI-1 support is read-only and deliberately narrow: uncompressed "n+1"
// single-file volumes, datatypes uint8/int16/float32, 3D only, little-endian.
// Orientation matrices and scl_slope/scl_inter scaling are ignored; spacing
// comes from pixdim.

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "corthick/grid.hpp"

namespace corthick {

inline constexpr char kMvolMagic[8] = {'M', 'V', 'O', 'L', 0, 0, 0, 1};

enum class ScalarKind { intensity, partial_volume };

namespace detail {

inline std::vector<char> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open file: " + path);
  in.seekg(0, std::ios::end);
  const std::streamoff size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<char> bytes(static_cast<std::size_t>(size));
  if (size > 0) in.read(bytes.data(), size);
  require(in.good(), "read failure: " + path);
  return bytes;
}

template <typename T>
inline T read_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;  // little-endian host assumed; checked below for NIfTI
}

struct MvolRaw {
  GridMeta meta;
  int channels = 1;
  std::vector<float> payload;  // channel-interleaved
};

inline MvolRaw parse_mvol(const std::vector<char>& bytes, const std::string& path) {
  require(bytes.size() >= 12, path + ": truncated MVOL (no header)");
  require(std::memcmp(bytes.data(), kMvolMagic, 8) == 0, path + ": bad MVOL magic");
  const std::uint32_t header_len = read_le<std::uint32_t>(bytes.data() + 8);
  require(header_len > 0 && header_len < (1u << 20), path + ": implausible MVOL header length");
  require(bytes.size() >= 12 + static_cast<std::size_t>(header_len),
          path + ": truncated MVOL header");
  nlohmann::json hdr;
  try {
    hdr = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": MVOL header is not valid JSON: " + e.what());
  }
  for (auto& [key, value] : hdr.items()) {
    (void)value;
    require(key == "dims" || key == "spacing_mm" || key == "dtype" || key == "channels",
            path + ": unknown MVOL header key \"" + key + "\"");
  }
  require(hdr.contains("dims") && hdr["dims"].is_array() && hdr["dims"].size() == 3,
          path + ": MVOL header field \"dims\" missing or not a 3-array");
  require(hdr.contains("spacing_mm") && hdr["spacing_mm"].is_array() &&
              hdr["spacing_mm"].size() == 3,
          path + ": MVOL header field \"spacing_mm\" missing or not a 3-array");
  require(hdr.contains("dtype") && hdr["dtype"] == "f32",
          path + ": MVOL header field \"dtype\" must be \"f32\"");
  require(hdr.contains("channels"), path + ": MVOL header field \"channels\" missing");

  MvolRaw raw;
  for (int a = 0; a < 3; ++a) {
    raw.meta.dims[a] = hdr["dims"][a].get<int>();
    raw.meta.spacing_mm[a] = hdr["spacing_mm"][a].get<double>();
  }
  raw.meta.validate();
  raw.channels = hdr["channels"].get<int>();
  require(raw.channels == 1 || raw.channels == 3,
          path + ": MVOL header field \"channels\" must be 1 or 3");

  const std::size_t count = raw.meta.voxels() * raw.channels;
  const std::size_t expected = 12 + header_len + count * 4;
  require(bytes.size() == expected,
          path + ": MVOL payload size mismatch (file " + std::to_string(bytes.size()) +
              " bytes, expected " + std::to_string(expected) + ")");
  raw.payload.resize(count);
  std::memcpy(raw.payload.data(), bytes.data() + 12 + header_len, count * 4);
  for (std::size_t i = 0; i < count; ++i)
    require(std::isfinite(raw.payload[i]),
            path + ": non-finite payload value at linear index " + std::to_string(i));
  return raw;
}

inline void write_mvol(const std::string& path, const GridMeta& meta, int channels,
                       const float* payload, std::size_t count) {
  nlohmann::json hdr;
  hdr["dims"] = {meta.dims[0], meta.dims[1], meta.dims[2]};
  hdr["spacing_mm"] = {meta.spacing_mm[0], meta.spacing_mm[1], meta.spacing_mm[2]};
  hdr["dtype"] = "f32";
  hdr["channels"] = channels;
  const std::string header = hdr.dump();  // keys serialize sorted: deterministic bytes
  const std::uint32_t header_len = static_cast<std::uint32_t>(header.size());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot open file for writing: " + path);
  out.write(kMvolMagic, 8);
  out.write(reinterpret_cast<const char*>(&header_len), 4);
  out.write(header.data(), header.size());
  out.write(reinterpret_cast<const char*>(payload), count * 4);
  out.flush();
  require(out.good(), "write failure: " + path);
}

} // namespace detail

inline void store_volume(const ScalarVolume& v, const std::string& path) {
  ScalarVolume copy = v;
  copy.validate();
  std::vector<float> payload(v.data.size());
  for (std::size_t i = 0; i < v.data.size(); ++i)
    payload[i] = static_cast<float>(v.data[i]);
  detail::write_mvol(path, v.meta, 1, payload.data(), payload.size());
}

inline void store_field(const VectorField& f, const std::string& path) {
  f.validate();
  std::vector<float> payload(f.data.size() * 3);
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    payload[3 * i + 0] = static_cast<float>(f.data[i].x);
    payload[3 * i + 1] = static_cast<float>(f.data[i].y);
    payload[3 * i + 2] = static_cast<float>(f.data[i].z);
  }
  detail::write_mvol(path, f.meta, 3, payload.data(), payload.size());
}

inline void store_labels(const LabelVolume& l, const std::string& path) {
  l.validate();
  std::vector<float> payload(l.labels.size());
  for (std::size_t i = 0; i < l.labels.size(); ++i)
    payload[i] = static_cast<float>(l.labels[i]);
  detail::write_mvol(path, l.meta, 1, payload.data(), payload.size());
}

namespace detail {

// Minimal NIfTI-1 header parse with explicit byte offsets.
struct NiftiRaw {
  GridMeta meta;
  std::vector<double> data;
};

inline NiftiRaw parse_nifti(const std::vector<char>& bytes, const std::string& path) {
  require(bytes.size() >= 352, path + ": file too small for a NIfTI-1 header");
  const std::int32_t sizeof_hdr = read_le<std::int32_t>(bytes.data() + 0);
  if (sizeof_hdr != 348) {
    // 0x5C010000 is 348 byte-swapped: a big-endian file.
    require(sizeof_hdr != 1543569408,
            path + ": NIfTI field sizeof_hdr indicates a big-endian file (unsupported)");
    throw std::runtime_error(path + ": NIfTI field sizeof_hdr must be 348, got " +
                             std::to_string(sizeof_hdr));
  }
  require(bytes[344] == 'n' && bytes[345] == '+' && bytes[346] == '1' && bytes[347] == 0,
          path + ": NIfTI field magic must be \"n+1\"");

  std::int16_t dim[8];
  for (int i = 0; i < 8; ++i) dim[i] = read_le<std::int16_t>(bytes.data() + 40 + 2 * i);
  require(dim[0] >= 1 && dim[0] <= 7,
          path + ": NIfTI field dim[0] out of range: " + std::to_string(dim[0]));
  for (int i = 4; i <= dim[0]; ++i)
    require(dim[i] <= 1, path + ": NIfTI field dim[" + std::to_string(i) +
                             "] > 1 (4D+ volumes unsupported)");
  NiftiRaw raw;
  for (int a = 0; a < 3; ++a) {
    const int extent = (dim[0] > a) ? dim[a + 1] : 1;
    require(extent >= 1, path + ": NIfTI field dim[" + std::to_string(a + 1) +
                             "] must be >= 1, got " + std::to_string(extent));
    raw.meta.dims[a] = extent;
    const float pd = read_le<float>(bytes.data() + 76 + 4 * (a + 1));
    require(std::isfinite(pd) && pd > 0.0f,
            path + ": NIfTI field pixdim[" + std::to_string(a + 1) +
                "] must be finite and > 0");
    raw.meta.spacing_mm[a] = pd;
  }
  raw.meta.validate();

  const std::int16_t datatype = read_le<std::int16_t>(bytes.data() + 70);
  const float vox_offset_f = read_le<float>(bytes.data() + 108);
  require(std::isfinite(vox_offset_f) && vox_offset_f >= 348.0f,
          path + ": NIfTI field vox_offset must be >= 348");
  const std::size_t vox_offset = static_cast<std::size_t>(vox_offset_f);
  const std::size_t n = raw.meta.voxels();

  std::size_t elem = 0;
  switch (datatype) {
    case 2: elem = 1; break;   // uint8
    case 4: elem = 2; break;   // int16
    case 16: elem = 4; break;  // float32
    default:
      throw std::runtime_error(path + ": NIfTI field datatype " +
                               std::to_string(datatype) +
                               " unsupported (expect 2, 4, or 16)");
  }
  require(bytes.size() >= vox_offset + n * elem, path + ": NIfTI payload truncated");

  raw.data.resize(n);
  const char* p = bytes.data() + vox_offset;
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    if (datatype == 2) v = static_cast<unsigned char>(p[i]);
    else if (datatype == 4) v = read_le<std::int16_t>(p + 2 * i);
    else v = read_le<float>(p + 4 * i);
    require(std::isfinite(v),
            path + ": non-finite voxel value at linear index " + std::to_string(i));
    raw.data[i] = v;
  }
  return raw;
}

// Dispatch on the leading bytes: an "MVOL" prefix routes to the MVOL parser
// (which then validates the full versioned magic), a 348 sizeof_hdr routes to
// NIfTI. Anything else is an unrecognized magic.
inline bool looks_like_mvol(const std::vector<char>& bytes) {
  return bytes.size() >= 4 && std::memcmp(bytes.data(), "MVOL", 4) == 0;
}

inline bool looks_like_nifti(const std::vector<char>& bytes) {
  if (bytes.size() < 348) return false;
  const std::int32_t sizeof_hdr = read_le<std::int32_t>(bytes.data());
  return sizeof_hdr == 348 || sizeof_hdr == 1543569408;  // native or byte-swapped
}

} // namespace detail

inline ScalarVolume load_scalar_volume(const std::string& path,
                                       ScalarKind kind = ScalarKind::intensity) {
  const std::vector<char> bytes = detail::read_file_bytes(path);
  ScalarVolume v;
  if (detail::looks_like_mvol(bytes)) {
    detail::MvolRaw raw = detail::parse_mvol(bytes, path);
    detail::require(raw.channels == 1,
                    path + ": expected a scalar volume, file has 3 channels");
    v.meta = raw.meta;
    v.data.assign(raw.payload.begin(), raw.payload.end());
  } else if (detail::looks_like_nifti(bytes)) {
    detail::NiftiRaw raw = detail::parse_nifti(bytes, path);
    v.meta = raw.meta;
    v.data = std::move(raw.data);
  } else {
    throw std::runtime_error(path +
                             ": unrecognized volume magic (neither MVOL nor NIfTI-1)");
  }
  v.validate(kind == ScalarKind::partial_volume);
  return v;
}

inline VectorField load_field(const std::string& path) {
  const std::vector<char> bytes = detail::read_file_bytes(path);
  detail::require(detail::looks_like_mvol(bytes),
                  path + ": vector fields must be MVOL files");
  detail::MvolRaw raw = detail::parse_mvol(bytes, path);
  detail::require(raw.channels == 3,
                  path + ": expected a 3-channel field, file has 1 channel");
  VectorField f(raw.meta);
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    f.data[i].x = raw.payload[3 * i + 0];
    f.data[i].y = raw.payload[3 * i + 1];
    f.data[i].z = raw.payload[3 * i + 2];
  }
  return f;
}

inline LabelVolume load_label_volume(const std::string& path) {
  ScalarVolume v = load_scalar_volume(path, ScalarKind::intensity);
  LabelVolume l(v.meta);
  for (std::size_t i = 0; i < v.data.size(); ++i) {
    const double val = v.data[i];
    detail::require(val >= 0.0 && std::abs(val - std::round(val)) < 1e-6,
                    path + ": label value " + std::to_string(val) +
                        " at linear index " + std::to_string(i) +
                        " is not a non-negative integer");
    l.labels[i] = static_cast<std::uint32_t>(std::llround(val));
  }
  return l;
}

} // namespace corthick
