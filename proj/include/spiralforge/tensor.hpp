#pragma once

#include <complex>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "spiralforge/error.hpp"

namespace sf {

using cplx = std::complex<double>;

// Flat row-major n-d array. Shapes are fixed at construction; indexing is
// unchecked in release builds.
template <typename T>
struct NdArray {
  std::vector<std::int64_t> shape;
  std::vector<T> data;

  NdArray() = default;
  explicit NdArray(std::vector<std::int64_t> s) : shape(std::move(s)) {
    data.assign(static_cast<std::size_t>(numel()), T{});
  }

  std::int64_t numel() const {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }

  std::int64_t dim(std::size_t i) const { return shape.at(i); }

  T& operator()(std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
  const T& operator()(std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }

  T& operator()(std::int64_t i, std::int64_t j) {
    return data[static_cast<std::size_t>(i * shape[1] + j)];
  }
  const T& operator()(std::int64_t i, std::int64_t j) const {
    return data[static_cast<std::size_t>(i * shape[1] + j)];
  }

  T& operator()(std::int64_t i, std::int64_t j, std::int64_t k) {
    return data[static_cast<std::size_t>((i * shape[1] + j) * shape[2] + k)];
  }
  const T& operator()(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return data[static_cast<std::size_t>((i * shape[1] + j) * shape[2] + k)];
  }

  T& operator()(std::int64_t i, std::int64_t j, std::int64_t k, std::int64_t l) {
    return data[static_cast<std::size_t>(((i * shape[1] + j) * shape[2] + k) * shape[3] + l)];
  }
  const T& operator()(std::int64_t i, std::int64_t j, std::int64_t k, std::int64_t l) const {
    return data[static_cast<std::size_t>(((i * shape[1] + j) * shape[2] + k) * shape[3] + l)];
  }
};

using RealArray = NdArray<double>;
using ComplexArray = NdArray<cplx>;

// Binary tensor file: magic "TNSR", version u16 LE, dtype u8
// (0 = f32, 1 = f64, 2 = complex64 as interleaved f32 pairs),
// ndim u8, shape u64 LE array, payload row-major LE.
namespace tensor_file {

constexpr std::uint16_t kFormatVersion = 1;

void write_f64(const std::string& path, const RealArray& a);
void write_f32(const std::string& path, const RealArray& a);
void write_c64(const std::string& path, const ComplexArray& a);

// Reads any real dtype, widening f32 to f64.
RealArray read_real(const std::string& path);
ComplexArray read_complex(const std::string& path);

}  // namespace tensor_file

}  // namespace sf
