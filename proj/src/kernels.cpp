#include "usat/kernels.hpp"

namespace usat::kernels {

namespace scalar {

double dot(const double* x, const double* y, std::size_t n) {
  double a0 = 0, a1 = 0, a2 = 0, a3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 += x[i] * y[i];
    a1 += x[i + 1] * y[i + 1];
    a2 += x[i + 2] * y[i + 2];
    a3 += x[i + 3] * y[i + 3];
  }
  for (; i < n; ++i) a0 += x[i] * y[i];
  return (a0 + a1) + (a2 + a3);
}

double sum(const double* x, std::size_t n) {
  double a0 = 0, a1 = 0, a2 = 0, a3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    a0 += x[i];
    a1 += x[i + 1];
    a2 += x[i + 2];
    a3 += x[i + 3];
  }
  for (; i < n; ++i) a0 += x[i];
  return (a0 + a1) + (a2 + a3);
}

double sumsq(const double* x, std::size_t n) { return dot(x, x, n); }

void shift(double* x, std::size_t n, double c) {
  for (std::size_t i = 0; i < n; ++i) x[i] -= c;
}

}  // namespace scalar

#ifdef USAT_HAVE_AVX2
namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
double sum(const double* x, std::size_t n);
double sumsq(const double* x, std::size_t n);
void shift(double* x, std::size_t n, double c);
}  // namespace avx2
#endif

namespace {

struct Vtable {
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  double (*sumsq)(const double*, std::size_t);
  void (*shift)(double*, std::size_t, double);
  const char* name;
};

constexpr Vtable kScalar{scalar::dot, scalar::sum, scalar::sumsq, scalar::shift, "scalar"};
#ifdef USAT_HAVE_AVX2
constexpr Vtable kAvx2{avx2::dot, avx2::sum, avx2::sumsq, avx2::shift, "avx2"};
#endif

bool avx2_available() {
#ifdef USAT_HAVE_AVX2
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Vtable* pick_default() {
#ifdef USAT_HAVE_AVX2
  if (avx2_available()) return &kAvx2;
#endif
  return &kScalar;
}

const Vtable* g_vt = pick_default();

}  // namespace

double dot(const double* x, const double* y, std::size_t n) { return g_vt->dot(x, y, n); }
double sum(const double* x, std::size_t n) { return g_vt->sum(x, n); }
double sumsq(const double* x, std::size_t n) { return g_vt->sumsq(x, n); }
void shift(double* x, std::size_t n, double c) { g_vt->shift(x, n, c); }
const char* active_backend() { return g_vt->name; }

bool set_backend(Backend b) {
  switch (b) {
    case Backend::Auto:
      g_vt = pick_default();
      return true;
    case Backend::Scalar:
      g_vt = &kScalar;
      return true;
    case Backend::Avx2:
#ifdef USAT_HAVE_AVX2
      if (avx2_available()) {
        g_vt = &kAvx2;
        return true;
      }
#endif
      return false;
  }
  return false;
}

}  // namespace usat::kernels
