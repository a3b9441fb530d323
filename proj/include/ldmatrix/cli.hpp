#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ldmatrix/io.hpp"

namespace ldmatrix {

struct RunConfig {
  std::string command;  // spectral | ldp | edgeworth | tails | diagnose
  Json config;          // parsed configuration document
  std::uint64_t seed = 0;
  bool seed_set = false;  // seed must be given explicitly (no entropy)
  std::filesystem::path output_dir = ".";
  int threads = 1;
  std::string format = "csv";  // csv | json
};

// Executes the pipeline for cfg.command, writing data files plus
// manifest.json under cfg.output_dir. Returns the process exit code:
// 0 success, 2 validation error, 3 numerical failure. On failure the
// partial data files are removed and the manifest records the error.
int run(const RunConfig& cfg);

}  // namespace ldmatrix
