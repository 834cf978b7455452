#pragma once

#include <filesystem>
#include <string>

#include <doctest.h>

#include "vulnatlas/error.hpp"

namespace testutil {

inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::path(VULNATLAS_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil

#define CHECK_CODE(expr, expected_code)                                   \
  do {                                                                    \
    bool thrown_ = false;                                                 \
    try {                                                                 \
      (void)(expr);                                                       \
    } catch (const vulnatlas::Error& e_) {                                \
      thrown_ = true;                                                     \
      CHECK_MESSAGE(e_.code() == (expected_code), e_.what());             \
    }                                                                     \
    CHECK_MESSAGE(thrown_, "expected vulnatlas::Error from " #expr);      \
  } while (0)
