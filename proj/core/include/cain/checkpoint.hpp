#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "cain/trainer.hpp"

namespace cain {

inline constexpr std::int64_t kCheckpointFormatVersion = 1;

/// Single archive: format version, config text and hash, counters, RNG states, every network
/// and both optimizer states.
std::string serialize_checkpoint(const TrainState& state);
void save_checkpoint(const TrainState& state, const std::string& path);

std::unique_ptr<TrainState> load_checkpoint(const std::string& path);

/// Also checks that the stored config can continue under `expected` (run-length keys may differ).
std::unique_ptr<TrainState> load_checkpoint(const std::string& path, const TrainConfig& expected);

/// Throws IncompatibleCheckpointError naming both values of the first differing key.
void check_compatible(const TrainConfig& stored, const TrainConfig& requested);

}  // namespace cain
