#include "pufbench/bits.hpp"

#include "pufbench/error.hpp"

#include <algorithm>

namespace pufbench {

BitVector::BitVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto& b : bits_) {
    if (b > 1) throw Error(ErrorKind::InvalidArgument, "bit values must be 0 or 1");
  }
}

BitVector BitVector::from_string(std::string_view text) {
  BitVector v(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '0' && text[i] != '1') throw Error(ErrorKind::InvalidArgument, "not a bit string");
    v.bits_[i] = text[i] == '1';
  }
  return v;
}

BitVector BitVector::from_u64(std::uint64_t value, std::size_t width) {
  if (width > 64) throw Error(ErrorKind::InvalidArgument, "width exceeds 64 bits");
  BitVector v(width);
  for (std::size_t i = 0; i < width; ++i) v.bits_[i] = (value >> i) & 1U;
  return v;
}

std::uint64_t BitVector::to_u64() const {
  if (bits_.size() > 64) throw Error(ErrorKind::InvalidArgument, "width exceeds 64 bits");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < bits_.size(); ++i) v |= std::uint64_t{bits_[i]} << i;
  return v;
}

std::string BitVector::to_string() const {
  std::string s(bits_.size(), '0');
  for (std::size_t i = 0; i < bits_.size(); ++i) s[i] = bits_[i] ? '1' : '0';
  return s;
}

std::size_t BitVector::weight() const noexcept {
  std::size_t w = 0;
  for (auto b : bits_) w += b;
  return w;
}

BitVector BitVector::operator^(const BitVector& other) const {
  if (other.size() != size()) throw Error(ErrorKind::WidthMismatch, "xor of vectors with different widths");
  BitVector out(size());
  for (std::size_t i = 0; i < size(); ++i) out.bits_[i] = bits_[i] ^ other.bits_[i];
  return out;
}

BitVector BitVector::operator~() const {
  BitVector out(size());
  for (std::size_t i = 0; i < size(); ++i) out.bits_[i] = bits_[i] ^ 1;
  return out;
}

std::size_t hamming_distance(const BitVector& a, const BitVector& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::WidthMismatch, "hamming distance of different widths");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

BitVector BitMatrix::row_vector(std::size_t r) const {
  auto s = row(r);
  return BitVector(std::vector<std::uint8_t>(s.begin(), s.end()));
}

void BitMatrix::set_row(std::size_t r, const BitVector& v) {
  if (v.size() != cols_) throw Error(ErrorKind::WidthMismatch, "row width differs from matrix width");
  auto dst = row(r);
  auto src = v.bits();
  std::copy(src.begin(), src.end(), dst.begin());
}

std::vector<std::uint8_t> BitMatrix::column(std::size_t c) const {
  std::vector<std::uint8_t> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = data_[r * cols_ + c];
  return out;
}

BitMatrix BitMatrix::select_rows(std::span<const std::size_t> indices) const {
  BitMatrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace pufbench
