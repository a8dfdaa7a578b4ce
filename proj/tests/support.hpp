#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <unistd.h>

#include "avtopo/raster.hpp"

namespace support {

// Mask from rows of '#' (set) and anything else (clear).
inline avtopo::Mask mask_of(std::initializer_list<const char*> rows) {
  const auto h = static_cast<avtopo::Index>(rows.size());
  const auto w = static_cast<avtopo::Index>(std::string(*rows.begin()).size());
  avtopo::Mask m = avtopo::Mask::Zero(h, w);
  avtopo::Index y = 0;
  for (const char* r : rows) {
    for (avtopo::Index x = 0; x < w; ++x) m(y, x) = r[x] == '#';
    ++y;
  }
  return m;
}

// Fresh directory under the temp path, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("avtopo-test-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace support
