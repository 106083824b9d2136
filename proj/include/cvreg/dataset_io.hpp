#pragma once

#include <filesystem>

#include "cvreg/dataset.hpp"

namespace cvreg {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binary dataset container (magic "CVRGDSET", version 1, little-endian):
// header, row-major X as f64, y, optional truth block, optional BankConfig
// block. Round-trips 64-bit floats exactly.
void write_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

// Plain loader for external data: whitespace-separated text, one row per
// line, last column is y.
Dataset read_external_text(const std::filesystem::path& path);

}  // namespace cvreg
