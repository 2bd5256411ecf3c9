#include <atomic>

#include <omp.h>

#include "wkam/kernels.hpp"

namespace wkam::kernels {

namespace detail {
Stencil composed_stencil(const KernelTable &a, const KernelTable &b);
void compose_target(const KernelTable &a, const KernelTable &b, KernelTable &c,
                    int x);
void apply_target(const KernelTable &t, const double *u, double *out, int *arg,
                  int x);
} // namespace detail

namespace {
std::atomic<bool> g_parallel{true};
}

KernelTable compose_omp(const KernelTable &a, const KernelTable &b) {
  KernelTable c(detail::composed_stencil(a, b));
  const int size = c.stencil.grid.size();
#pragma omp parallel for schedule(static)
  for (int x = 0; x < size; ++x)
    detail::compose_target(a, b, c, x);
  return c;
}

void apply_omp(const KernelTable &t, const double *u, double *out, int *arg) {
  const int size = t.stencil.grid.size();
#pragma omp parallel for schedule(static)
  for (int x = 0; x < size; ++x)
    detail::apply_target(t, u, out, arg, x);
}

KernelTable compose(const KernelTable &a, const KernelTable &b) {
  return g_parallel ? compose_omp(a, b) : compose_serial(a, b);
}

void apply(const KernelTable &t, const double *u, double *out, int *arg) {
  if (g_parallel)
    apply_omp(t, u, out, arg);
  else
    apply_serial(t, u, out, arg);
}

void set_parallel(bool enabled) { g_parallel = enabled; }
bool parallel_enabled() { return g_parallel; }

} // namespace wkam::kernels
