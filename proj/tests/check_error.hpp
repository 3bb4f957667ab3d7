#pragma once

#include "doctest.h"
#include "roughmarket/error.hpp"

#define CHECK_ERROR(expr, expected)                              \
  do {                                                           \
    bool thrown_ = false;                                        \
    try {                                                        \
      (void)(expr);                                              \
    } catch (const roughmarket::Error& e_) {                     \
      thrown_ = true;                                            \
      CHECK(e_.code() == roughmarket::ErrorCode::expected);      \
    }                                                            \
    CHECK_MESSAGE(thrown_, #expr " did not throw " #expected);   \
  } while (false)
