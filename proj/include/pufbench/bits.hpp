#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pufbench {

/// Fixed-width vector of bits, one byte per bit (values 0 or 1).
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t width) : bits_(width, 0) {}
  explicit BitVector(std::vector<std::uint8_t> bits);

  /// Parses "0101" with the first character as bit 0.
  static BitVector from_string(std::string_view text);
  /// Bit j of the vector is bit j of `value`.
  static BitVector from_u64(std::uint64_t value, std::size_t width);

  std::size_t size() const noexcept { return bits_.size(); }
  bool empty() const noexcept { return bits_.empty(); }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, bool value) { bits_[i] = value ? 1 : 0; }
  void flip(std::size_t i) { bits_[i] ^= 1; }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::uint64_t to_u64() const;
  std::string to_string() const;
  std::size_t weight() const noexcept;

  BitVector operator^(const BitVector& other) const;
  BitVector operator~() const;
  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

using Challenge = BitVector;
using Response = BitVector;

std::size_t hamming_distance(const BitVector& a, const BitVector& b);

/// Row-major N x width bit matrix; row i is one challenge or response.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::uint8_t operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::uint8_t& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const std::uint8_t> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<std::uint8_t> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  BitVector row_vector(std::size_t r) const;
  void set_row(std::size_t r, const BitVector& v);
  /// Column c copied out as a contiguous label vector.
  std::vector<std::uint8_t> column(std::size_t c) const;

  BitMatrix select_rows(std::span<const std::size_t> indices) const;

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> data_;
};

}  // namespace pufbench
