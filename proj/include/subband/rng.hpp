#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace subband {

using Rng = std::mt19937_64;

/// Derive an independent seed for a named sub-stream of `master`.
///
/// Every random component draws from its own stream (deploy, channel,
/// init, train, eval, ...) so that changing how many numbers one component
/// consumes never shifts another component's draws.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);

/// Indexed variant, e.g. one stream per snapshot.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t index);

inline Rng make_rng(std::uint64_t master, std::string_view stream) {
  return Rng(derive_seed(master, stream));
}

}  // namespace subband
