#pragma once

#include <cstddef>
#include <cstdint>
#include <compare>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace codedba {

/// Longest sequence a Codeword can hold; codewords live in a machine word.
inline constexpr int kMaxSlots = 20;

/// Binary feedback sequence of L slots. Slot 1 is the most significant bit,
/// so ordering by value() is the big-endian integer order.
class Codeword {
 public:
  Codeword() = default;
  Codeword(std::uint32_t bits, int length);

  static Codeword from_string(std::string_view bits);

  std::uint32_t value() const noexcept { return bits_; }
  int length() const noexcept { return length_; }
  int weight() const noexcept;

  /// Bit of slot k, 1 <= k <= length().
  bool slot(int k) const;

  std::string to_string() const;

  friend int hamming_distance(const Codeword& a, const Codeword& b);
  friend Codeword operator^(const Codeword& a, const Codeword& b);

  friend bool operator==(const Codeword&, const Codeword&) = default;
  friend std::strong_ordering operator<=>(const Codeword& a, const Codeword& b) {
    if (auto c = a.length_ <=> b.length_; c != 0) return c;
    return a.bits_ <=> b.bits_;
  }

 private:
  std::uint32_t bits_ = 0;
  int length_ = 0;
};

enum class CodebookKind { Hamming74, Exhaustive, Uncoded, Custom };

struct CodebookSpec {
  CodebookKind kind = CodebookKind::Hamming74;
  int slots = 7;

  std::string name() const;
};

/// Feedback codebook with its distance profile. Immutable after construction.
class Codebook {
 public:
  /// Any distinct set of codewords of a common length; stored in canonical order.
  Codebook(std::span<const std::uint32_t> words, int length,
           CodebookKind kind = CodebookKind::Custom);

  static Codebook hamming74();
  static Codebook exhaustive(int slots);
  static Codebook uncoded(int slots);
  static Codebook build(const CodebookSpec& spec);

  /// Parses a one-bit-string-per-line listing (blank lines ignored).
  static Codebook from_listing(std::string_view text);
  std::string to_listing() const;

  CodebookKind kind() const noexcept { return kind_; }
  int length() const noexcept { return length_; }
  std::size_t size() const noexcept { return words_.size(); }
  const std::vector<Codeword>& codewords() const noexcept { return words_; }
  const Codeword& operator[](std::size_t i) const { return words_[i]; }

  /// Minimum pairwise distance. A single-codeword book reports 2L+1 so
  /// that epsilon() = L: every pattern decodes back to that codeword.
  int min_distance() const noexcept { return min_distance_; }
  int epsilon() const noexcept { return (min_distance_ - 1) / 2; }

  /// n_w for w = 0..L.
  const std::vector<std::size_t>& weight_distribution() const noexcept {
    return weight_counts_;
  }
  double mean_weight() const noexcept;

  /// Canonical index of a codeword, or size() when absent.
  std::size_t index_of(const Codeword& c) const;

  /// Minimum-distance decoding; ties go to the smallest codeword.
  Codeword decode(const Codeword& received) const;
  std::size_t decode_index(std::uint32_t received) const;

  /// decode_index for every received word in {0,1}^L.
  std::vector<std::uint32_t> decode_table() const;

 private:
  void analyze();

  std::vector<Codeword> words_;
  int length_ = 0;
  CodebookKind kind_ = CodebookKind::Custom;
  int min_distance_ = 0;
  std::vector<std::size_t> weight_counts_;
};

}  // namespace codedba
