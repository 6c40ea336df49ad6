#pragma once

#include <unistd.h>

#include <cstdlib>

#include "physcorrect/linalg.hpp"

namespace physcorrect {

/// Program-entry helper. When the LAPACK self-test fails and the user has not
/// chosen an OpenBLAS kernel, re-executes the program with a portable one.
/// Returns normally when no restart is needed or possible.
inline void restart_with_portable_blas_if_needed(char** argv) {
    if (lapack_svd_verified() || std::getenv("OPENBLAS_CORETYPE") != nullptr) return;
    ::setenv("OPENBLAS_CORETYPE", "Haswell", 1);
    ::execv("/proc/self/exe", argv);
}

}  // namespace physcorrect
