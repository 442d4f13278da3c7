#include "codedba/codebook.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>
#include <sstream>

#include "codedba/error.hpp"

namespace codedba {

namespace {

std::uint32_t full_mask(int length) {
  return length >= 32 ? ~0u : ((1u << length) - 1u);
}

void check_length(int length) {
  require(length >= 1, "codeword length must be at least 1");
  if (length > kMaxSlots) {
    throw Error(ErrorKind::CapacityRefused,
                "codeword length " + std::to_string(length) + " exceeds " +
                    std::to_string(kMaxSlots) + " slots");
  }
}

}  // namespace

Codeword::Codeword(std::uint32_t bits, int length) : bits_(bits), length_(length) {
  check_length(length);
  require((bits & ~full_mask(length)) == 0, "codeword has bits beyond its length");
}

Codeword Codeword::from_string(std::string_view bits) {
  check_length(static_cast<int>(bits.size()));
  std::uint32_t v = 0;
  for (char ch : bits) {
    require(ch == '0' || ch == '1', "codeword string must contain only 0/1");
    v = (v << 1) | static_cast<std::uint32_t>(ch == '1');
  }
  return Codeword(v, static_cast<int>(bits.size()));
}

int Codeword::weight() const noexcept { return std::popcount(bits_); }

bool Codeword::slot(int k) const {
  require(k >= 1 && k <= length_, "slot index out of range");
  return (bits_ >> (length_ - k)) & 1u;
}

std::string Codeword::to_string() const {
  std::string s(static_cast<std::size_t>(length_), '0');
  for (int k = 1; k <= length_; ++k) {
    if (slot(k)) s[static_cast<std::size_t>(k - 1)] = '1';
  }
  return s;
}

int hamming_distance(const Codeword& a, const Codeword& b) {
  require(a.length_ == b.length_, "codeword length mismatch");
  return std::popcount(a.bits_ ^ b.bits_);
}

Codeword operator^(const Codeword& a, const Codeword& b) {
  require(a.length_ == b.length_, "codeword length mismatch");
  return Codeword(a.bits_ ^ b.bits_, a.length_);
}

std::string CodebookSpec::name() const {
  switch (kind) {
    case CodebookKind::Hamming74: return "hamming74";
    case CodebookKind::Exhaustive: return "exhaustive" + std::to_string(slots);
    case CodebookKind::Uncoded: return "uncoded" + std::to_string(slots);
    case CodebookKind::Custom: return "custom" + std::to_string(slots);
  }
  return "unknown";
}

Codebook::Codebook(std::span<const std::uint32_t> words, int length, CodebookKind kind)
    : length_(length), kind_(kind) {
  check_length(length);
  require(!words.empty(), "codebook must contain at least one codeword");
  std::vector<std::uint32_t> sorted(words.begin(), words.end());
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
          "codebook contains duplicate codewords");
  words_.reserve(sorted.size());
  for (auto w : sorted) words_.emplace_back(w, length);
  analyze();
}

Codebook Codebook::hamming74() {
  // Null space of the parity-check matrix whose column j is binary(j).
  std::vector<std::uint32_t> words;
  for (std::uint32_t v = 0; v < 128; ++v) {
    std::uint32_t syndrome = 0;
    for (int k = 1; k <= 7; ++k) {
      if ((v >> (7 - k)) & 1u) syndrome ^= static_cast<std::uint32_t>(k);
    }
    if (syndrome == 0) words.push_back(v);
  }
  return Codebook(words, 7, CodebookKind::Hamming74);
}

Codebook Codebook::exhaustive(int slots) {
  check_length(slots);
  std::vector<std::uint32_t> words;
  for (int k = 0; k < slots; ++k) words.push_back(1u << k);
  return Codebook(words, slots, CodebookKind::Exhaustive);
}

Codebook Codebook::uncoded(int slots) {
  check_length(slots);
  std::vector<std::uint32_t> words(std::size_t{1} << slots);
  std::iota(words.begin(), words.end(), 0u);
  return Codebook(words, slots, CodebookKind::Uncoded);
}

Codebook Codebook::build(const CodebookSpec& spec) {
  switch (spec.kind) {
    case CodebookKind::Hamming74: return hamming74();
    case CodebookKind::Exhaustive: return exhaustive(spec.slots);
    case CodebookKind::Uncoded: return uncoded(spec.slots);
    case CodebookKind::Custom: break;
  }
  throw_invalid("custom codebooks are built from a codeword list");
}

Codebook Codebook::from_listing(std::string_view text) {
  std::vector<std::uint32_t> words;
  int length = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    Codeword c = Codeword::from_string(line);
    require(length == 0 || c.length() == length, "listing mixes codeword lengths");
    length = c.length();
    words.push_back(c.value());
  }
  require(!words.empty(), "listing contains no codewords");
  return Codebook(words, length);
}

std::string Codebook::to_listing() const {
  std::string out;
  for (const auto& c : words_) {
    out += c.to_string();
    out += '\n';
  }
  return out;
}

void Codebook::analyze() {
  weight_counts_.assign(static_cast<std::size_t>(length_) + 1, 0);
  for (const auto& c : words_) ++weight_counts_[static_cast<std::size_t>(c.weight())];

  if (words_.size() == 1) {
    min_distance_ = 2 * length_ + 1;
    return;
  }
  // Smallest w such that c and c^e are both codewords for some e of weight w.
  // Enumerating error patterns by weight costs |C| * C(L, w) instead of |C|^2.
  std::vector<bool> member(std::size_t{1} << length_, false);
  for (const auto& c : words_) member[c.value()] = true;
  const std::uint32_t space = 1u << length_;
  for (int w = 1; w <= length_; ++w) {
    for (std::uint32_t e = 1; e < space; ++e) {
      if (std::popcount(e) != w) continue;
      for (const auto& c : words_) {
        if (member[c.value() ^ e]) {
          min_distance_ = w;
          return;
        }
      }
    }
  }
}

double Codebook::mean_weight() const noexcept {
  double total = 0.0;
  for (std::size_t w = 0; w < weight_counts_.size(); ++w) {
    total += static_cast<double>(w) * static_cast<double>(weight_counts_[w]);
  }
  return total / static_cast<double>(words_.size());
}

std::size_t Codebook::index_of(const Codeword& c) const {
  auto it = std::lower_bound(words_.begin(), words_.end(), c);
  if (it == words_.end() || *it != c) return words_.size();
  return static_cast<std::size_t>(it - words_.begin());
}

std::size_t Codebook::decode_index(std::uint32_t received) const {
  require((received & ~full_mask(length_)) == 0, "received word longer than codebook");
  std::size_t best = 0;
  int best_distance = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < words_.size(); ++i) {
    const int d = std::popcount(words_[i].value() ^ received);
    if (d < best_distance) {
      best_distance = d;
      best = i;
    }
  }
  return best;
}

Codeword Codebook::decode(const Codeword& received) const {
  require(received.length() == length_, "received word length does not match codebook");
  return words_[decode_index(received.value())];
}

std::vector<std::uint32_t> Codebook::decode_table() const {
  // Multi-source breadth-first search over the hypercube. The nearest
  // codewords of a word at distance d are exactly the nearest codewords of its
  // neighbours at distance d-1, so the smallest index propagates level by level.
  const std::uint32_t space = 1u << length_;
  constexpr std::uint32_t kUnset = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> label(space, kUnset);
  std::vector<std::uint32_t> frontier;
  frontier.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    label[words_[i].value()] = static_cast<std::uint32_t>(i);
    frontier.push_back(words_[i].value());
  }
  std::vector<std::uint32_t> next;
  std::vector<bool> in_next(space, false);
  while (!frontier.empty()) {
    next.clear();
    for (auto v : frontier) {
      for (int b = 0; b < length_; ++b) {
        const std::uint32_t u = v ^ (1u << b);
        if (label[u] != kUnset && !in_next[u]) continue;
        if (!in_next[u]) {
          in_next[u] = true;
          next.push_back(u);
          label[u] = label[v];
        } else {
          label[u] = std::min(label[u], label[v]);
        }
      }
    }
    for (auto u : next) in_next[u] = false;
    frontier.swap(next);
  }
  return label;
}

}  // namespace codedba
