#pragma once

#include <cstdint>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mobility {

/// Dense non-negative symbol ids; kMissing marks an unobserved time bin.
using Symbol = std::int64_t;
inline constexpr Symbol kMissing = -1;

enum class Formulation { next_cell, next_place };

inline std::string_view to_string(Formulation f) {
  return f == Formulation::next_cell ? "next_cell" : "next_place";
}

struct SymbolStream {
  std::vector<Symbol> symbols;
  Formulation formulation = Formulation::next_place;
};

/// Assigns dense ids in order of first appearance.
template <typename Key, typename Hash = std::hash<Key>>
class Interner {
 public:
  Symbol intern(const Key& key) {
    auto [it, inserted] = ids_.try_emplace(key, static_cast<Symbol>(keys_.size()));
    if (inserted) keys_.push_back(key);
    return it->second;
  }
  const Key& key(Symbol s) const { return keys_.at(static_cast<std::size_t>(s)); }
  std::size_t size() const { return keys_.size(); }

 private:
  std::unordered_map<Key, Symbol, Hash> ids_;
  std::vector<Key> keys_;
};

}  // namespace mobility
