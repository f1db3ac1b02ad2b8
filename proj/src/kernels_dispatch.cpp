#include <cstdlib>
#include <mutex>

#include "cbs/error.hpp"
#include "cbs/kernels.hpp"

namespace cbs {

KernelGrid kernel_grid(const CurveFrames& f, const std::vector<double>& trap_weights) {
  require_input(int(trap_weights.size()) == f.nodes, "trapezoid weight count mismatch");
  KernelGrid g;
  g.n = f.nodes;
  g.t = f.t.data();
  g.cx = f.cx.data(); g.cy = f.cy.data(); g.cz = f.cz.data();
  g.tx = f.tx.data(); g.ty = f.ty.data(); g.tz = f.tz.data();
  g.nx = f.nx.data(); g.ny = f.ny.data(); g.nz = f.nz.data();
  g.bx = f.bx.data(); g.by = f.by.data(); g.bz = f.bz.data();
  g.tw = trap_weights.data();
  return g;
}

std::vector<double> trapezoid_weights(const std::vector<double>& t) {
  const int n = int(t.size());
  std::vector<double> w(n, 0.0);
  if (n < 2) return w;
  w[0] = 0.5 * (t[1] - t[0]);
  for (int i = 1; i + 1 < n; ++i) w[i] = 0.5 * (t[i + 1] - t[i - 1]);
  w[n - 1] = 0.5 * (t[n - 1] - t[n - 2]);
  return w;
}

namespace {

bool cpu_has_avx2() {
#if defined(__GNUC__) && defined(__x86_64__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

enum class Backend { kAuto, kScalar, kAvx2 };
Backend g_backend = Backend::kAuto;
std::once_flag g_env_once;

void apply_env_override() {
  if (const char* s = std::getenv("CBS_KERNEL")) {
    const std::string v(s);
    if (v == "scalar") g_backend = Backend::kScalar;
    else if (v == "avx2") g_backend = Backend::kAvx2;
  }
}

}  // namespace

void set_kernel_backend(const std::string& name) {
  std::call_once(g_env_once, apply_env_override);
  if (name == "scalar") g_backend = Backend::kScalar;
  else if (name == "avx2") g_backend = Backend::kAvx2;
  else if (name == "auto" || name.empty()) g_backend = Backend::kAuto;
  else throw InputError("unknown kernel backend '" + name + "' (scalar|avx2|auto)");
}

const KernelTable& active_kernels() {
  std::call_once(g_env_once, apply_env_override);
  switch (g_backend) {
    case Backend::kScalar:
      return scalar_kernels();
    case Backend::kAvx2: {
      const KernelTable* t = avx2_kernels();
      require_input(t && cpu_has_avx2(), "avx2 kernels requested but unavailable");
      return *t;
    }
    case Backend::kAuto:
    default: {
      const KernelTable* t = avx2_kernels();
      if (t && cpu_has_avx2()) return *t;
      return scalar_kernels();
    }
  }
}

std::string kernel_backend_name() { return active_kernels().name; }

}  // namespace cbs
