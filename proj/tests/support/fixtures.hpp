#pragma once

#include <filesystem>
#include <string>

namespace ambidoc::testing {

// Databases built from tests/fixtures/*.sql at build time.
inline std::filesystem::path fixture_db(const char* name) {
  return std::filesystem::path(AMBIDOC_FIXTURE_DB_DIR) / (std::string(name) + ".db");
}

// Source-tree fixture files (docs, replay script, transcripts).
inline std::filesystem::path fixture_file(const char* relative) {
  return std::filesystem::path(AMBIDOC_FIXTURE_SRC_DIR) / relative;
}

}  // namespace ambidoc::testing

#include <random>
#include <string>

namespace ambidoc::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("ambidoc-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace ambidoc::testing
