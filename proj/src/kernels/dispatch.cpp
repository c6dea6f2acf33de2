#include <atomic>
#include <cstdlib>
#include <cstring>

#include "forest/kernels.hpp"

namespace forest::kernels {

namespace detail {
#if FORESTINV_AVX2_TU
const Vtable* avx2_vtable_impl();
#endif

const Vtable* avx2_vtable() {
#if FORESTINV_AVX2_TU
#if defined(__GNUC__) || defined(__clang__)
  if (__builtin_cpu_supports("avx2")) return avx2_vtable_impl();
#endif
#endif
  return nullptr;
}
}  // namespace detail

namespace {

struct State {
  const detail::Vtable* table;
  Backend backend;
};

State detect() {
  const char* env = std::getenv("FORESTINV_KERNELS");
  if (env && std::strcmp(env, "scalar") == 0) {
    return {&detail::scalar_vtable(), Backend::Scalar};
  }
  const detail::Vtable* avx2 = detail::avx2_vtable();
  if (avx2 && (!env || std::strcmp(env, "avx2") == 0)) {
    return {avx2, Backend::Avx2};
  }
  return {&detail::scalar_vtable(), Backend::Scalar};
}

State g_state = detect();

}  // namespace

Backend active_backend() { return g_state.backend; }

const char* backend_name() {
  return g_state.backend == Backend::Avx2 ? "avx2" : "scalar";
}

bool set_backend(Backend b) {
  if (b == Backend::Scalar) {
    g_state = {&detail::scalar_vtable(), Backend::Scalar};
    return true;
  }
  const detail::Vtable* avx2 = detail::avx2_vtable();
  if (!avx2) return false;
  g_state = {avx2, Backend::Avx2};
  return true;
}

void detect_backend() { g_state = detect(); }

void transform_points(std::size_t n, const double* xs, const double* ys, const double* zs,
                      const double rot[9], const double trans[3],
                      double* ox, double* oy, double* oz) {
  g_state.table->transform_points(n, xs, ys, zs, rot, trans, ox, oy, oz);
}

void radial_distances(std::size_t n, const double* xs, const double* ys,
                      double cx, double cy, double* out) {
  g_state.table->radial_distances(n, xs, ys, cx, cy, out);
}

void radial_distances_row(std::size_t n, const double* xs, double y,
                          double cx, double cy, double* out) {
  g_state.table->radial_distances_row(n, xs, y, cx, cy, out);
}

void squared_distances_xy(std::size_t n, const double* xs, const double* ys,
                          double px, double py, double* out) {
  g_state.table->squared_distances_xy(n, xs, ys, px, py, out);
}

void minmax_xy(std::size_t n, const double* xs, const double* ys,
               double& xmin, double& xmax, double& ymin, double& ymax) {
  g_state.table->minmax_xy(n, xs, ys, xmin, xmax, ymin, ymax);
}

double sum(std::size_t n, const double* v) { return g_state.table->sum(n, v); }

double sum_squares(std::size_t n, const double* v) { return g_state.table->sum_squares(n, v); }

}  // namespace forest::kernels
