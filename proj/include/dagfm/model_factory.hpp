#pragma once

#include <cstdint>
#include <memory>

#include "dagfm/interactions/model.hpp"

namespace dagfm {

// Builds and initializes the model described by `spec`; the seed fixes every
// random initializer.
std::unique_ptr<Model> make_model(const ModelSpec& spec, std::uint64_t seed);

// Same architecture and parameter values; fresh optimizer state.
std::unique_ptr<Model> clone_model(const Model& model);

}  // namespace dagfm
