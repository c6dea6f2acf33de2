#pragma once

#include <cstddef>

// Data-parallel inner loops used across the pipeline. Every kernel has a
// scalar reference implementation and an AVX2 variant; the backend is picked
// once at runtime from cpuid (override with env FORESTINV_KERNELS=scalar|avx2
// or set_backend). The scalar reference fixes the exact operation and
// reduction order the vector code uses, so the two backends are bit-identical
// and equivalence-tested as such.

namespace forest::kernels {

enum class Backend { Scalar, Avx2 };

Backend active_backend();
const char* backend_name();

/// Returns false (and leaves the backend unchanged) if `b` is unsupported on
/// this CPU. Not safe to call concurrently with kernel use.
bool set_backend(Backend b);

/// Re-run detection, honoring FORESTINV_KERNELS.
void detect_backend();

/// out = R*p + t for every point, SoA layout. rot is row-major 3x3.
/// Output arrays may alias the inputs.
void transform_points(std::size_t n, const double* xs, const double* ys, const double* zs,
                      const double rot[9], const double trans[3],
                      double* ox, double* oy, double* oz);

/// out[i] = sqrt((xs[i]-cx)^2 + (ys[i]-cy)^2)
void radial_distances(std::size_t n, const double* xs, const double* ys,
                      double cx, double cy, double* out);

/// out[i] = sqrt((xs[i]-cx)^2 + (y-cy)^2); one grid row of candidate centers.
void radial_distances_row(std::size_t n, const double* xs, double y,
                          double cx, double cy, double* out);

/// out[i] = (xs[i]-px)^2 + (ys[i]-py)^2
void squared_distances_xy(std::size_t n, const double* xs, const double* ys,
                          double px, double py, double* out);

/// Bounding box over finite inputs. n must be >= 1.
void minmax_xy(std::size_t n, const double* xs, const double* ys,
               double& xmin, double& xmax, double& ymin, double& ymax);

double sum(std::size_t n, const double* v);
double sum_squares(std::size_t n, const double* v);

namespace detail {
struct Vtable {
  void (*transform_points)(std::size_t, const double*, const double*, const double*,
                           const double*, const double*, double*, double*, double*);
  void (*radial_distances)(std::size_t, const double*, const double*, double, double, double*);
  void (*radial_distances_row)(std::size_t, const double*, double, double, double, double*);
  void (*squared_distances_xy)(std::size_t, const double*, const double*, double, double, double*);
  void (*minmax_xy)(std::size_t, const double*, const double*, double&, double&, double&, double&);
  double (*sum)(std::size_t, const double*);
  double (*sum_squares)(std::size_t, const double*);
};
const Vtable& scalar_vtable();
const Vtable* avx2_vtable();  // nullptr when not compiled in or CPU lacks AVX2
}  // namespace detail

}  // namespace forest::kernels
