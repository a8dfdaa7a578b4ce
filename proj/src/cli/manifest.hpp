#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

namespace avtopo::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const fs::path& path);

/// Run record printed on stdout. Keys are sorted and no timing or scheduling
/// detail goes in, so identical runs print identical bytes.
class Manifest {
 public:
  explicit Manifest(std::string command);

  /// Hashes a file; a directory adds every regular file below it.
  void input(const fs::path& path);
  void output(const fs::path& path);

  json& params() { return doc_["params"]; }
  json& results() { return doc_["results"]; }

  std::string dump() const;

 private:
  void add(const char* section, const fs::path& path);
  json doc_;
};

/// Non-finite values become null.
json number(double v);

}  // namespace avtopo::cli
