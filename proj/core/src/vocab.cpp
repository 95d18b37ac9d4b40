#include "ratex/vocab.hpp"

#include <stdexcept>

namespace ratex {

Vocab::Vocab() {
  insert(std::string(kClsToken));
  insert(std::string(kPadToken));
  insert(std::string(kUnkToken));
}

Vocab::Vocab(std::span<const std::string> tokens) : Vocab() {
  for (const auto& t : tokens) insert(t);
}

void Vocab::insert(std::string token) {
  if (ids_.contains(token)) throw std::invalid_argument("duplicate vocabulary token '" + token + "'");
  ids_.emplace(token, tokens_.size());
  tokens_.push_back(std::move(token));
}

std::size_t Vocab::id(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const { return ids_.contains(std::string(token)); }

std::span<const std::string> Vocab::regular_tokens() const {
  return std::span<const std::string>(tokens_).subspan(3);
}

std::vector<std::size_t> Vocab::encode(std::span<const std::string> tokens) const {
  std::vector<std::size_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

}  // namespace ratex
