#include <cmath>
#include <cstddef>
#include <limits>

#include "forest/kernels.hpp"

// AVX2 kernel variants. Same op order as the scalar reference: plain
// mul/add (no FMA), vsqrtpd for distances, lanes combined (l0+l1)+(l2+l3),
// tails folded in index order. This file is compiled with -mavx2 and only
// reached through the dispatcher after a cpuid check.

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace forest::kernels {
namespace {

void transform_points_avx2(std::size_t n, const double* xs, const double* ys, const double* zs,
                           const double* rot, const double* trans,
                           double* ox, double* oy, double* oz) {
  const std::size_t n4 = n / 4 * 4;
  const __m256d r0 = _mm256_set1_pd(rot[0]), r1 = _mm256_set1_pd(rot[1]), r2 = _mm256_set1_pd(rot[2]);
  const __m256d r3 = _mm256_set1_pd(rot[3]), r4 = _mm256_set1_pd(rot[4]), r5 = _mm256_set1_pd(rot[5]);
  const __m256d r6 = _mm256_set1_pd(rot[6]), r7 = _mm256_set1_pd(rot[7]), r8 = _mm256_set1_pd(rot[8]);
  const __m256d t0 = _mm256_set1_pd(trans[0]), t1 = _mm256_set1_pd(trans[1]), t2 = _mm256_set1_pd(trans[2]);
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d x = _mm256_loadu_pd(xs + i);
    const __m256d y = _mm256_loadu_pd(ys + i);
    const __m256d z = _mm256_loadu_pd(zs + i);
    const __m256d nx = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(r0, x), _mm256_mul_pd(r1, y)),
                                     _mm256_add_pd(_mm256_mul_pd(r2, z), t0));
    const __m256d ny = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(r3, x), _mm256_mul_pd(r4, y)),
                                     _mm256_add_pd(_mm256_mul_pd(r5, z), t1));
    const __m256d nz = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(r6, x), _mm256_mul_pd(r7, y)),
                                     _mm256_add_pd(_mm256_mul_pd(r8, z), t2));
    _mm256_storeu_pd(ox + i, nx);
    _mm256_storeu_pd(oy + i, ny);
    _mm256_storeu_pd(oz + i, nz);
  }
  for (std::size_t i = n4; i < n; ++i) {
    const double x = xs[i], y = ys[i], z = zs[i];
    const double nx = ((rot[0] * x + rot[1] * y) + (rot[2] * z + trans[0]));
    const double ny = ((rot[3] * x + rot[4] * y) + (rot[5] * z + trans[1]));
    const double nz = ((rot[6] * x + rot[7] * y) + (rot[8] * z + trans[2]));
    ox[i] = nx;
    oy[i] = ny;
    oz[i] = nz;
  }
}

void radial_distances_avx2(std::size_t n, const double* xs, const double* ys,
                           double cx, double cy, double* out) {
  const std::size_t n4 = n / 4 * 4;
  const __m256d vcx = _mm256_set1_pd(cx);
  const __m256d vcy = _mm256_set1_pd(cy);
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), vcx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), vcy);
    const __m256d d2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    _mm256_storeu_pd(out + i, _mm256_sqrt_pd(d2));
  }
  for (std::size_t i = n4; i < n; ++i) {
    const double dx = xs[i] - cx;
    const double dy = ys[i] - cy;
    out[i] = std::sqrt(dx * dx + dy * dy);
  }
}

void radial_distances_row_avx2(std::size_t n, const double* xs, double y,
                               double cx, double cy, double* out) {
  const double dy = y - cy;
  const double dy2 = dy * dy;
  const std::size_t n4 = n / 4 * 4;
  const __m256d vcx = _mm256_set1_pd(cx);
  const __m256d vdy2 = _mm256_set1_pd(dy2);
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), vcx);
    const __m256d d2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), vdy2);
    _mm256_storeu_pd(out + i, _mm256_sqrt_pd(d2));
  }
  for (std::size_t i = n4; i < n; ++i) {
    const double dx = xs[i] - cx;
    out[i] = std::sqrt(dx * dx + dy2);
  }
}

void squared_distances_xy_avx2(std::size_t n, const double* xs, const double* ys,
                               double px, double py, double* out) {
  const std::size_t n4 = n / 4 * 4;
  const __m256d vpx = _mm256_set1_pd(px);
  const __m256d vpy = _mm256_set1_pd(py);
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), vpx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), vpy);
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)));
  }
  for (std::size_t i = n4; i < n; ++i) {
    const double dx = xs[i] - px;
    const double dy = ys[i] - py;
    out[i] = dx * dx + dy * dy;
  }
}

inline double lane_min(double a, double b) { return a < b ? a : b; }
inline double lane_max(double a, double b) { return a > b ? a : b; }

void minmax_xy_avx2(std::size_t n, const double* xs, const double* ys,
                    double& xmin, double& xmax, double& ymin, double& ymax) {
  const std::size_t n4 = n / 4 * 4;
  __m256d vxmin = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  __m256d vymin = vxmin;
  __m256d vxmax = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  __m256d vymax = vxmax;
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d x = _mm256_loadu_pd(xs + i);
    const __m256d y = _mm256_loadu_pd(ys + i);
    vxmin = _mm256_min_pd(vxmin, x);
    vxmax = _mm256_max_pd(vxmax, x);
    vymin = _mm256_min_pd(vymin, y);
    vymax = _mm256_max_pd(vymax, y);
  }
  alignas(32) double lx[4], hx[4], ly[4], hy[4];
  _mm256_store_pd(lx, vxmin);
  _mm256_store_pd(hx, vxmax);
  _mm256_store_pd(ly, vymin);
  _mm256_store_pd(hy, vymax);
  double mnx = lane_min(lane_min(lx[0], lx[1]), lane_min(lx[2], lx[3]));
  double mxx = lane_max(lane_max(hx[0], hx[1]), lane_max(hx[2], hx[3]));
  double mny = lane_min(lane_min(ly[0], ly[1]), lane_min(ly[2], ly[3]));
  double mxy = lane_max(lane_max(hy[0], hy[1]), lane_max(hy[2], hy[3]));
  for (std::size_t i = n4; i < n; ++i) {
    mnx = lane_min(mnx, xs[i]);
    mxx = lane_max(mxx, xs[i]);
    mny = lane_min(mny, ys[i]);
    mxy = lane_max(mxy, ys[i]);
  }
  xmin = mnx;
  xmax = mxx;
  ymin = mny;
  ymax = mxy;
}

double sum_avx2(std::size_t n, const double* v) {
  const std::size_t n4 = n / 4 * 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_loadu_pd(v + i));
  }
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t i = n4; i < n; ++i) s += v[i];
  return s;
}

double sum_squares_avx2(std::size_t n, const double* v) {
  const std::size_t n4 = n / 4 * 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d a = _mm256_loadu_pd(v + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(a, a));
  }
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  double s = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (std::size_t i = n4; i < n; ++i) s += v[i] * v[i];
  return s;
}

}  // namespace

namespace detail {

const Vtable* avx2_vtable_impl() {
  static const Vtable table = {
      &transform_points_avx2,     &radial_distances_avx2,
      &radial_distances_row_avx2, &squared_distances_xy_avx2,
      &minmax_xy_avx2,            &sum_avx2,
      &sum_squares_avx2,
  };
  return &table;
}

}  // namespace detail
}  // namespace forest::kernels

#endif  // __x86_64__
