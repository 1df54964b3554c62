#include "spiralforge/tensor.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace sf::tensor_file {

namespace {

constexpr char kMagic[4] = {'T', 'N', 'S', 'R'};

enum Dtype : std::uint8_t { kF32 = 0, kF64 = 1, kC64 = 2 };

// All scalars little-endian; this code assumes a little-endian host.
void write_header(std::ofstream& out, Dtype dtype,
                  const std::vector<std::int64_t>& shape) {
  out.write(kMagic, 4);
  std::uint16_t version = kFormatVersion;
  out.write(reinterpret_cast<const char*>(&version), 2);
  std::uint8_t d = static_cast<std::uint8_t>(dtype);
  out.write(reinterpret_cast<const char*>(&d), 1);
  std::uint8_t ndim = static_cast<std::uint8_t>(shape.size());
  out.write(reinterpret_cast<const char*>(&ndim), 1);
  for (auto s : shape) {
    std::uint64_t u = static_cast<std::uint64_t>(s);
    out.write(reinterpret_cast<const char*>(&u), 8);
  }
}

struct Header {
  Dtype dtype;
  std::vector<std::int64_t> shape;
};

Header read_header(std::ifstream& in, const std::string& path) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw Error(ErrorCode::FormatError, "bad magic in " + path);
  std::uint16_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 2);
  if (version > kFormatVersion)
    throw Error(ErrorCode::FormatError, "unsupported tensor version in " + path);
  std::uint8_t dtype = 0, ndim = 0;
  in.read(reinterpret_cast<char*>(&dtype), 1);
  in.read(reinterpret_cast<char*>(&ndim), 1);
  Header h;
  h.dtype = static_cast<Dtype>(dtype);
  h.shape.resize(ndim);
  for (auto& s : h.shape) {
    std::uint64_t u = 0;
    in.read(reinterpret_cast<char*>(&u), 8);
    s = static_cast<std::int64_t>(u);
  }
  if (!in) throw Error(ErrorCode::FormatError, "truncated header in " + path);
  return h;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open for write: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open for read: " + path);
  return in;
}

}  // namespace

void write_f64(const std::string& path, const RealArray& a) {
  auto out = open_out(path);
  write_header(out, kF64, a.shape);
  out.write(reinterpret_cast<const char*>(a.data.data()),
            static_cast<std::streamsize>(a.data.size() * sizeof(double)));
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

void write_f32(const std::string& path, const RealArray& a) {
  auto out = open_out(path);
  write_header(out, kF32, a.shape);
  std::vector<float> buf(a.data.begin(), a.data.end());
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

void write_c64(const std::string& path, const ComplexArray& a) {
  auto out = open_out(path);
  write_header(out, kC64, a.shape);
  std::vector<float> buf;
  buf.reserve(a.data.size() * 2);
  for (const auto& z : a.data) {
    buf.push_back(static_cast<float>(z.real()));
    buf.push_back(static_cast<float>(z.imag()));
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

RealArray read_real(const std::string& path) {
  auto in = open_in(path);
  Header h = read_header(in, path);
  RealArray a(h.shape);
  std::size_t n = a.data.size();
  if (h.dtype == kF64) {
    in.read(reinterpret_cast<char*>(a.data.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
  } else if (h.dtype == kF32) {
    std::vector<float> buf(n);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    for (std::size_t i = 0; i < n; ++i) a.data[i] = buf[i];
  } else {
    throw Error(ErrorCode::FormatError, "expected real dtype in " + path);
  }
  if (!in) throw Error(ErrorCode::FormatError, "truncated payload in " + path);
  return a;
}

ComplexArray read_complex(const std::string& path) {
  auto in = open_in(path);
  Header h = read_header(in, path);
  if (h.dtype != kC64)
    throw Error(ErrorCode::FormatError, "expected complex dtype in " + path);
  ComplexArray a(h.shape);
  std::size_t n = a.data.size();
  std::vector<float> buf(n * 2);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!in) throw Error(ErrorCode::FormatError, "truncated payload in " + path);
  for (std::size_t i = 0; i < n; ++i)
    a.data[i] = cplx(buf[2 * i], buf[2 * i + 1]);
  return a;
}

}  // namespace sf::tensor_file
