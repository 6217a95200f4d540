#pragma once

#include "segt/data.hpp"

#include <cstdint>
#include <filesystem>

namespace segt {

/// Procedural polyp-like scenes: a shaded mucosa-coloured background with one
/// elliptical lesion of a shifted hue. Deterministic for a given seed.
DatasetSplit synthetic_split(std::size_t count, int64_t size, uint64_t seed, const std::string& name = "synthetic");

/// Writes `count` scenes as `root/images/sample_NNN.png` and
/// `root/masks/sample_NNN.png` ({0,255} masks).
void write_synthetic_dataset(const std::filesystem::path& root, std::size_t count, int64_t size, uint64_t seed);

}  // namespace segt
