#include "dagfm/numcore/param_store.hpp"

#include "dagfm/numcore/errors.hpp"

namespace dagfm {

ParamHandle ParamStore::add(std::string name, Tensor value, bool trainable) {
  if (find(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  Entry entry;
  entry.name = std::move(name);
  entry.adam.first_moment = Tensor::zeros_like(value);
  entry.adam.second_moment = Tensor::zeros_like(value);
  entry.value = std::move(value);
  entry.trainable = trainable;
  entries_.push_back(std::move(entry));
  return ParamHandle{entries_.size() - 1};
}

std::optional<ParamHandle> ParamStore::find(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return ParamHandle{i};
  }
  return std::nullopt;
}

ParamHandle ParamStore::at(std::string_view name) const {
  if (auto h = find(name)) return *h;
  throw LookupError("no parameter named '" + std::string(name) + "'");
}

std::size_t ParamStore::set_trainable_prefix(std::string_view prefix, bool trainable) {
  std::size_t changed = 0;
  for (auto& entry : entries_) {
    if (std::string_view(entry.name).starts_with(prefix)) {
      entry.trainable = trainable;
      ++changed;
    }
  }
  return changed;
}

void ParamStore::set_all_trainable(bool trainable) {
  for (auto& entry : entries_) entry.trainable = trainable;
}

void ParamStore::reset_optimizer() {
  for (auto& entry : entries_) {
    entry.adam.first_moment.fill(0.0);
    entry.adam.second_moment.fill(0.0);
    entry.adam.step = 0;
  }
}

std::size_t ParamStore::total_elements() const {
  std::size_t n = 0;
  for (const auto& entry : entries_) n += entry.value.size();
  return n;
}

std::size_t ParamStore::total_elements_with_prefix(std::string_view prefix) const {
  std::size_t n = 0;
  for (const auto& entry : entries_) {
    if (std::string_view(entry.name).starts_with(prefix)) n += entry.value.size();
  }
  return n;
}

Gradients ParamStore::zero_gradients() const {
  std::vector<Tensor> tensors;
  tensors.reserve(entries_.size());
  for (const auto& entry : entries_) tensors.push_back(Tensor::zeros_like(entry.value));
  return Gradients(std::move(tensors));
}

std::vector<Tensor> ParamStore::snapshot() const {
  std::vector<Tensor> values;
  values.reserve(entries_.size());
  for (const auto& entry : entries_) values.push_back(entry.value);
  return values;
}

void ParamStore::restore(const std::vector<Tensor>& values) {
  if (values.size() != entries_.size()) throw ShapeError("snapshot has a different parameter count");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].shape() != entries_[i].value.shape()) {
      throw ShapeError("snapshot shape mismatch for '" + entries_[i].name + "'");
    }
    entries_[i].value = values[i];
  }
}

void Gradients::zero() {
  for (auto& t : tensors_) t.fill(0.0);
}

}  // namespace dagfm
