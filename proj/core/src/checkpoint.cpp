#include "varprune/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "varprune/errors.hpp"

namespace varprune {

namespace {

constexpr char kWeightMagic[4] = {'V', 'A', 'R', 'W'};
constexpr char kMaskMagic[4] = {'V', 'A', 'R', 'M'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
  }

  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }

  void u32(std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    bytes(b, 4);
  }

  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  void close() {
    out_.flush();
    if (!out_) throw IoError("write failed for '" + path_.string() + "'");
    out_.close();
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  void bytes(void* p, std::size_t n) {
    if (pos_ + n > buf_.size())
      throw IoError("'" + path_.string() + "': truncated at byte offset " +
                    std::to_string(pos_));
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }

  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  }

  float f32() { return std::bit_cast<float>(u32()); }

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return buf_.size() - pos_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

void check_magic(Reader& r, const char expected[4]) {
  char magic[4];
  const std::size_t at = r.offset();
  r.bytes(magic, 4);
  if (std::memcmp(magic, expected, 4) != 0)
    throw IoError("'" + r.path().string() + "': bad magic at byte offset " +
                  std::to_string(at));
}

void check_version(Reader& r) {
  const std::size_t at = r.offset();
  const std::uint32_t v = r.u32();
  if (v != kFormatVersion)
    throw IoError("'" + r.path().string() + "': unsupported format version " +
                  std::to_string(v) + " at byte offset " + std::to_string(at));
}

std::string read_name(Reader& r) {
  const std::uint32_t len = r.u32();
  std::string name(len, '\0');
  r.bytes(name.data(), len);
  return name;
}

std::vector<std::size_t> read_shape(Reader& r) {
  const std::uint32_t rank = r.u32();
  const std::size_t at = r.offset();
  if (rank == 0 || rank > 4)
    throw IoError("'" + r.path().string() + "': invalid rank " + std::to_string(rank) +
                  " before byte offset " + std::to_string(at));
  std::vector<std::size_t> shape(rank);
  for (auto& e : shape) {
    e = r.u32();
    if (e == 0)
      throw IoError("'" + r.path().string() + "': zero extent before byte offset " +
                    std::to_string(r.offset()));
  }
  return shape;
}

}  // namespace

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path) {
  Writer w(path);
  w.bytes(kWeightMagic, 4);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(params.entries.size()));
  for (const auto& e : params.entries) {
    w.u32(static_cast<std::uint32_t>(e.name.size()));
    w.bytes(e.name.data(), e.name.size());
    w.u32(static_cast<std::uint32_t>(e.value.rank()));
    for (auto ext : e.value.shape) w.u32(static_cast<std::uint32_t>(ext));
    for (float v : e.value.data) w.f32(v);
  }
  w.close();
}

ParamSet load_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  check_magic(r, kWeightMagic);
  check_version(r);
  const std::uint32_t count = r.u32();
  ParamSet params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = read_name(r);
    const auto shape = read_shape(r);
    std::vector<float> data(shape_product(shape));
    for (auto& v : data) v = r.f32();
    const bool prunable = name.ends_with(".weight");
    params.add(name, Tensor(shape, std::move(data)), prunable);
  }
  if (r.remaining() != 0)
    throw IoError("'" + path.string() + "': trailing bytes at offset " +
                  std::to_string(r.offset()));
  return params;
}

void save_mask(const Mask& mask, const std::filesystem::path& path) {
  Writer w(path);
  w.bytes(kMaskMagic, 4);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(mask.entries.size()));
  for (const auto& e : mask.entries) {
    w.u32(static_cast<std::uint32_t>(e.name.size()));
    w.bytes(e.name.data(), e.name.size());
    w.u32(static_cast<std::uint32_t>(e.shape.size()));
    for (auto ext : e.shape) w.u32(static_cast<std::uint32_t>(ext));
    w.bytes(e.keep.data(), e.keep.size());
  }
  w.close();
}

Mask load_mask(const std::filesystem::path& path) {
  Reader r(path);
  check_magic(r, kMaskMagic);
  check_version(r);
  const std::uint32_t count = r.u32();
  Mask mask;
  for (std::uint32_t i = 0; i < count; ++i) {
    MaskEntry e;
    e.name = read_name(r);
    e.shape = read_shape(r);
    e.keep.resize(shape_product(e.shape));
    const std::size_t at = r.offset();
    r.bytes(e.keep.data(), e.keep.size());
    for (std::size_t j = 0; j < e.keep.size(); ++j)
      if (e.keep[j] > 1)
        throw IoError("'" + path.string() + "': mask byte not 0/1 at offset " +
                      std::to_string(at + j));
    mask.entries.push_back(std::move(e));
  }
  if (r.remaining() != 0)
    throw IoError("'" + path.string() + "': trailing bytes at offset " +
                  std::to_string(r.offset()));
  return mask;
}

}  // namespace varprune
