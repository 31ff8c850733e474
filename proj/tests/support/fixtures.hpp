#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "stabeval/analysis.hpp"
#include "stabeval/toy.hpp"

namespace fixtures {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("stabeval_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline const stabeval::Dataset& toy_data() {
  static const stabeval::Dataset data = stabeval::generate_toy(0);
  return data;
}

inline const stabeval::LogisticModel& toy_logistic() {
  static const stabeval::LogisticModel model = stabeval::fit_logistic(toy_data());
  return model;
}

inline stabeval::EvalConfig config(stabeval::Price theta1, stabeval::Price theta2, stabeval::Phi phi, double r,
                                   stabeval::LossKind kind) {
  return stabeval::EvalConfig(stabeval::CostSpec(theta1, theta2), phi, r, kind);
}

inline stabeval::Price inf() { return stabeval::Price::infinity(); }

}  // namespace fixtures
