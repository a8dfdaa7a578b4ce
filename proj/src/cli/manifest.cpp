#include "manifest.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <openssl/evp.h>

#include "avtopo/error.hpp"
#include "avtopo/image_io.hpp"

namespace avtopo::cli {

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  require(EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) == 1,
          ErrorKind::io, "sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string file_sha256(const fs::path& path) { return sha256_hex(io::read_bytes(path)); }

Manifest::Manifest(std::string command) {
  doc_["schema"] = 1;
  doc_["command"] = std::move(command);
  doc_["inputs"] = json::object();
  doc_["outputs"] = json::object();
  doc_["params"] = json::object();
  doc_["results"] = json::object();
}

void Manifest::add(const char* section, const fs::path& path) {
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(path))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) doc_[section][f.generic_string()] = file_sha256(f);
    return;
  }
  doc_[section][path.generic_string()] = file_sha256(path);
}

void Manifest::input(const fs::path& path) { add("inputs", path); }
void Manifest::output(const fs::path& path) { add("outputs", path); }

std::string Manifest::dump() const { return doc_.dump(2) + "\n"; }

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace avtopo::cli
