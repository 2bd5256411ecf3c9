// Serial reference against OpenMP kernels: min-plus compose and apply.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include <omp.h>

#include "wkam/kernels.hpp"
#include "wkam/semigroup.hpp"

using namespace wkam;

template <class F> double best_of(int reps, F &&f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    best = std::min(best, s);
  }
  return best;
}

int main(int argc, char **argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 512;
  const int dim = argc > 2 ? std::atoi(argv[2]) : 1;
  const int reps = argc > 3 ? std::atoi(argv[3]) : 5;

  EnvSpec spec;
  spec.dimension = dim;
  spec.params["amplitude"] = 1.0;
  const auto env = sample_realization(spec, 0);
  const GridSpec grid{dim, n, 1.0};
  const ActionKernel kernel(make_mechanical(), env, grid, 1.0 / 64, 2.0);
  const KernelTable &a = kernel.table(dim == 1 ? 2 : 1);

  std::printf("grid dim=%d n=%d stencil=%d threads=%d\n", dim, n, a.count(),
              omp_get_max_threads());

  KernelTable cs, cp;
  const double t_cs = best_of(reps, [&] { cs = kernels::compose_serial(a, a); });
  const double t_cp = best_of(reps, [&] { cp = kernels::compose_omp(a, a); });
  std::printf("compose  serial %.4fs  omp %.4fs  speedup %.2f  identical %s\n",
              t_cs, t_cp, t_cs / t_cp, cs.values == cp.values ? "yes" : "no");

  const KernelTable &big = kernel.table(dim == 1 ? 16 : 2);
  std::vector<double> u(size_t(grid.size())), os(u.size()), op(u.size());
  std::vector<int> as(u.size()), ap(u.size());
  for (int i = 0; i < grid.size(); ++i)
    u[size_t(i)] = env.value(grid.point(i));
  const double t_as = best_of(reps, [&] {
    kernels::apply_serial(big, u.data(), os.data(), as.data());
  });
  const double t_ap = best_of(reps, [&] {
    kernels::apply_omp(big, u.data(), op.data(), ap.data());
  });
  std::printf("apply    serial %.4fs  omp %.4fs  speedup %.2f  identical %s\n",
              t_as, t_ap, t_as / t_ap, os == op && as == ap ? "yes" : "no");
  return cs.values == cp.values && os == op && as == ap ? 0 : 1;
}
