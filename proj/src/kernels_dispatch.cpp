#include "fcs/kernels.hpp"

#include <atomic>
#include <stdexcept>

namespace fcs::kern {
namespace {

std::atomic<const Ops*> g_active{nullptr};
std::atomic<Backend> g_backend{Backend::scalar};

const Ops* pick_default() {
  if (avx2_supported()) {
    g_backend.store(Backend::avx2, std::memory_order_relaxed);
    return &avx2_ops();
  }
  g_backend.store(Backend::scalar, std::memory_order_relaxed);
  return &scalar_ops();
}

}  // namespace

bool avx2_supported() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Ops& ops() {
  const Ops* p = g_active.load(std::memory_order_acquire);
  if (!p) {
    p = pick_default();
    g_active.store(p, std::memory_order_release);
  }
  return *p;
}

Backend active_backend() {
  ops();  // force selection
  return g_backend.load(std::memory_order_relaxed);
}

void force_backend(Backend b) {
  switch (b) {
    case Backend::scalar:
      g_active.store(&scalar_ops(), std::memory_order_release);
      break;
    case Backend::avx2:
      if (!avx2_supported())
        throw std::runtime_error("avx2 backend requested but not supported by this CPU");
      g_active.store(&avx2_ops(), std::memory_order_release);
      break;
  }
  g_backend.store(b, std::memory_order_relaxed);
}

Backend parse_backend(const std::string& name) {
  if (name == "auto") return avx2_supported() ? Backend::avx2 : Backend::scalar;
  if (name == "scalar") return Backend::scalar;
  if (name == "avx2") return Backend::avx2;
  throw std::runtime_error("unknown kernel backend '" + name +
                           "' (expected auto|scalar|avx2)");
}

const char* backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

}  // namespace fcs::kern
