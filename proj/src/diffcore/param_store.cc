#include "dfgan/param_store.h"

#include <cstring>

#include "dfgan/errors.h"

namespace dfgan {

RealMatrix& ParamStore::add(std::string name, RealMatrix init, bool trainable) {
  if (index_.contains(name)) {
    throw ConfigError("ParamStore: duplicate parameter '" + name + "'");
  }
  if (!init.allFinite()) {
    throw NumericError("ParamStore: non-finite initial value for '" + name + "'");
  }
  index_.emplace(name, entries_.size());
  ParamEntry e;
  e.name = std::move(name);
  e.grad = RealMatrix::Zero(init.rows(), init.cols());
  e.value = std::move(init);
  e.trainable = trainable;
  entries_.push_back(std::move(e));
  ++version_;
  return entries_.back().value;
}

bool ParamStore::contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

std::size_t ParamStore::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    throw ConfigError("ParamStore: no parameter named '" + std::string(name) + "'");
  }
  return it->second;
}

const RealMatrix& ParamStore::value(std::string_view name) const {
  return entries_[index_of(name)].value;
}

RealMatrix& ParamStore::mutable_value(std::string_view name) {
  ++version_;
  return entries_[index_of(name)].value;
}

RealMatrix& ParamStore::buffer(std::string_view name) {
  return entries_[index_of(name)].value;
}

RealMatrix& ParamStore::grad(std::string_view name) {
  return entries_[index_of(name)].grad;
}

const RealMatrix& ParamStore::grad(std::string_view name) const {
  return entries_[index_of(name)].grad;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.grad.setZero();
}

double ParamStore::grad_squared_norm() const {
  double total = 0.0;
  for (const auto& e : entries_) {
    if (e.trainable) total += e.grad.squaredNorm();
  }
  return total;
}

std::size_t ParamStore::trainable_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    if (e.trainable) n += static_cast<std::size_t>(e.value.size());
  }
  return n;
}

bool ParamStore::all_finite() const {
  for (const auto& e : entries_) {
    if (!e.value.allFinite()) return false;
  }
  return true;
}

bool ParamStore::same_values(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.trainable != b.trainable || a.value.rows() != b.value.rows() ||
        a.value.cols() != b.value.cols()) {
      return false;
    }
    if (a.value.size() > 0 &&
        std::memcmp(a.value.data(), b.value.data(),
                    sizeof(double) * static_cast<std::size_t>(a.value.size())) != 0) {
      return false;
    }
  }
  return true;
}

}  // namespace dfgan
