#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ratex {

/// Token to dense id map. Ids 0, 1, 2 are reserved for CLS, PAD and UNK.
class Vocab {
 public:
  static constexpr std::size_t kCls = 0;
  static constexpr std::size_t kPad = 1;
  static constexpr std::size_t kUnk = 2;
  static constexpr std::string_view kClsToken = "<cls>";
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocab();
  /// Reserved tokens followed by `tokens` in order; duplicates are rejected.
  explicit Vocab(std::span<const std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  /// Unknown tokens map to kUnk.
  std::size_t id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  /// Every token after the reserved ones, in id order.
  std::span<const std::string> regular_tokens() const;

  std::vector<std::size_t> encode(std::span<const std::string> tokens) const;

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  void insert(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> ids_;
};

}  // namespace ratex
