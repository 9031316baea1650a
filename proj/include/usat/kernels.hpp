#pragma once

#include <cstddef>

// Data-parallel inner loops used by the per-variant scan path.
// Scalar reference implementations always exist; on x86-64 an AVX2/FMA
// variant is selected at load time when the CPU supports it.
namespace usat::kernels {

enum class Backend { Auto, Scalar, Avx2 };

double dot(const double* x, const double* y, std::size_t n);
double sum(const double* x, std::size_t n);
double sumsq(const double* x, std::size_t n);
// x[i] -= c
void shift(double* x, std::size_t n, double c);

// Name of the backend currently in use ("scalar" or "avx2").
const char* active_backend();
// Force a backend (tests use this for scalar/SIMD equivalence checks).
// Returns false if the requested backend is unavailable on this machine.
bool set_backend(Backend b);

}  // namespace usat::kernels
