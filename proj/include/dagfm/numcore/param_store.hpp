#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dagfm/numcore/tensor.hpp"

namespace dagfm {

/// Stable index of a parameter inside a ParamStore.
struct ParamHandle {
  std::size_t index = 0;
};

struct AdamState {
  Tensor first_moment;
  Tensor second_moment;
  std::uint64_t step = 0;
};

class Gradients;

/// Named parameter tensors with trainable flags and per-parameter Adam state.
///
/// Insertion order is the canonical order used by checkpoints, gradient
/// buffers and parameter walks.
class ParamStore {
 public:
  ParamHandle add(std::string name, Tensor value, bool trainable = true);

  std::size_t size() const { return entries_.size(); }
  std::optional<ParamHandle> find(std::string_view name) const;
  ParamHandle at(std::string_view name) const;

  const std::string& name(ParamHandle h) const { return entries_[h.index].name; }
  Tensor& value(ParamHandle h) { return entries_[h.index].value; }
  const Tensor& value(ParamHandle h) const { return entries_[h.index].value; }
  bool trainable(ParamHandle h) const { return entries_[h.index].trainable; }
  void set_trainable(ParamHandle h, bool trainable) { entries_[h.index].trainable = trainable; }
  // Applies to every parameter whose name starts with `prefix`.
  std::size_t set_trainable_prefix(std::string_view prefix, bool trainable);
  void set_all_trainable(bool trainable);

  AdamState& adam(ParamHandle h) { return entries_[h.index].adam; }
  const AdamState& adam(ParamHandle h) const { return entries_[h.index].adam; }
  void reset_optimizer();

  std::size_t total_elements() const;
  std::size_t total_elements_with_prefix(std::string_view prefix) const;

  Gradients zero_gradients() const;

  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& values);

 private:
  struct Entry {
    std::string name;
    Tensor value;
    bool trainable = true;
    AdamState adam;
  };
  std::vector<Entry> entries_;
};

/// Gradient buffers parallel to a ParamStore (same order, same shapes).
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(std::vector<Tensor> tensors) : tensors_(std::move(tensors)) {}

  std::size_t size() const { return tensors_.size(); }
  Tensor& operator[](ParamHandle h) { return tensors_[h.index]; }
  const Tensor& operator[](ParamHandle h) const { return tensors_[h.index]; }
  double* ptr(ParamHandle h) { return tensors_[h.index].ptr(); }

  void zero();

 private:
  std::vector<Tensor> tensors_;
};

}  // namespace dagfm
