#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <string>

#include "eegcaps/error.hpp"

namespace testutil {

// Runs f and returns the code of the eegcaps::Error it throws.
template <typename F>
eegcaps::ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const eegcaps::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return eegcaps::ErrorCode::IoError;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("eegcaps_" + tag + "_" + std::to_string(rd()));
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

}  // namespace testutil
