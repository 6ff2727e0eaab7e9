#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace morsel {

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept {
    return std::hash<std::string_view>{}(s);
  }
};

struct StringEq {
  using is_transparent = void;
  bool operator()(std::string_view a, std::string_view b) const noexcept { return a == b; }
};

// Sparse map from stable string feature identifiers to real values.
// Entries that become exactly zero are dropped, so absent == zero.
class SparseFeatureVector {
 public:
  using Map = std::unordered_map<std::string, double, StringHash, StringEq>;

  SparseFeatureVector() = default;
  SparseFeatureVector(std::initializer_list<std::pair<const char*, double>> init) {
    for (const auto& [k, v] : init) add(k, v);
  }

  double get(std::string_view key) const {
    auto it = map_.find(key);
    return it == map_.end() ? 0.0 : it->second;
  }

  void set(std::string_view key, double v) {
    auto it = map_.find(key);
    if (v == 0.0) {
      if (it != map_.end()) map_.erase(it);
      return;
    }
    if (it == map_.end()) {
      map_.emplace(std::string(key), v);
    } else {
      it->second = v;
    }
  }

  void add(std::string_view key, double v) {
    if (v == 0.0) return;
    auto it = map_.find(key);
    if (it == map_.end()) {
      map_.emplace(std::string(key), v);
      return;
    }
    it->second += v;
    if (it->second == 0.0) map_.erase(it);
  }

  // this += a * x
  void add_scaled(const SparseFeatureVector& x, double a) {
    if (a == 0.0) return;
    for (const auto& [k, v] : x.map_) add(k, a * v);
  }

  double dot(const SparseFeatureVector& o) const {
    const Map* small = &map_;
    const Map* big = &o.map_;
    if (small->size() > big->size()) std::swap(small, big);
    double s = 0.0;
    for (const auto& [k, v] : *small) {
      auto it = big->find(k);
      if (it != big->end()) s += v * it->second;
    }
    return s;
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& [k, v] : map_) s += v * v;
    return s;
  }

  std::size_t size() const { return map_.size(); }
  bool empty() const { return map_.empty(); }
  void clear() { map_.clear(); }
  const Map& entries() const { return map_; }

  std::vector<std::pair<std::string, double>> sorted_entries() const {
    std::vector<std::pair<std::string, double>> out(map_.begin(), map_.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  friend bool operator==(const SparseFeatureVector& a, const SparseFeatureVector& b) {
    return a.map_ == b.map_;
  }

 private:
  Map map_;
};

}  // namespace morsel
