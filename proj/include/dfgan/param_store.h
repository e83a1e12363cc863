#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dfgan/matrix.h"

namespace dfgan {

struct ParamEntry {
  std::string name;
  RealMatrix value;
  RealMatrix grad;
  // Non-trainable entries (batchnorm running statistics) are skipped by the
  // optimizer and by gradient checks, but still checkpointed.
  bool trainable = true;
};

/// Ordered collection of named parameter arrays, each with a same-shape
/// gradient slot. Writes through mutable_value() bump version(), which is how
/// tapes detect that they were recorded against older parameters.
class ParamStore {
 public:
  RealMatrix& add(std::string name, RealMatrix init, bool trainable = true);

  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;

  const RealMatrix& value(std::string_view name) const;
  RealMatrix& mutable_value(std::string_view name);
  /// Mutable access for non-trainable buffers; does not bump version().
  RealMatrix& buffer(std::string_view name);
  RealMatrix& grad(std::string_view name);
  const RealMatrix& grad(std::string_view name) const;

  std::span<ParamEntry> entries() { return entries_; }
  std::span<const ParamEntry> entries() const { return entries_; }
  ParamEntry& entry(std::size_t i) { return entries_.at(i); }
  const ParamEntry& entry(std::size_t i) const { return entries_.at(i); }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  void zero_grad();
  void mark_modified() { ++version_; }
  std::uint64_t version() const { return version_; }

  /// Sum of squared gradients over trainable entries.
  double grad_squared_norm() const;
  /// Total number of scalar values in trainable entries.
  std::size_t trainable_count() const;
  bool all_finite() const;

  /// Same names, shapes, flags and bit-identical values.
  bool same_values(const ParamStore& other) const;

 private:
  std::vector<ParamEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t version_ = 0;
};

}  // namespace dfgan
