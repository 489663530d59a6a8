#include "lpq/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "lpq/errors.hpp"

namespace lpq::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend detect_default() {
  if (const char* env = std::getenv("LPQ_KERNELS")) {
    const std::string v(env);
    if (v == "scalar") return Backend::Scalar;
    if (v == "avx2") {
      if (!backend_available(Backend::Avx2))
        throw Error::usage("LPQ_KERNELS=avx2 but AVX2 is unavailable on this host");
      return Backend::Avx2;
    }
    if (v != "auto" && !v.empty())
      throw Error::usage("unknown LPQ_KERNELS value '" + v + "' (scalar|avx2|auto)");
  }
  return backend_available(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<int>& backend_slot() {
  static std::atomic<int> slot{-1};
  return slot;
}

}  // namespace

const char* backend_name(Backend b) {
  return b == Backend::Avx2 ? "avx2" : "scalar";
}

bool backend_available(Backend b) {
  if (b == Backend::Scalar) return true;
  return avx2_kernels() != nullptr && cpu_has_avx2();
}

Backend active_backend() {
  int v = backend_slot().load(std::memory_order_acquire);
  if (v < 0) {
    const Backend detected = detect_default();
    int expected = -1;
    backend_slot().compare_exchange_strong(expected, static_cast<int>(detected));
    v = backend_slot().load(std::memory_order_acquire);
  }
  return static_cast<Backend>(v);
}

void set_backend(Backend b) {
  if (!backend_available(b))
    throw Error::usage(std::string("kernel backend '") + backend_name(b) +
                       "' is unavailable on this host");
  backend_slot().store(static_cast<int>(b), std::memory_order_release);
}

const Kernels& active() {
  return active_backend() == Backend::Avx2 ? *avx2_kernels() : scalar_kernels();
}

}  // namespace lpq::kernels
