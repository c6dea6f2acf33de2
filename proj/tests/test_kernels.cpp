#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "forest/kernels.hpp"

using namespace forest;

namespace {

// Deterministic doubles in [-100, 100) straight from the engine bits so the
// inputs are identical on every platform.
std::vector<double> random_values(std::mt19937_64& engine, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) {
    x = (static_cast<double>(engine() >> 11) * 0x1p-53) * 200.0 - 100.0;
  }
  return v;
}

bool avx2_available() { return kernels::detail::avx2_vtable() != nullptr; }

struct BackendGuard {
  kernels::Backend saved;
  BackendGuard() : saved(kernels::active_backend()) {}
  ~BackendGuard() { kernels::set_backend(saved); }
};

// Sizes around the 4-lane boundaries exercise every tail path.
const std::size_t kSizes[] = {1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 63, 64, 65, 1000, 1021};

}  // namespace

TEST_CASE("scalar vtable is always available") {
  (void)kernels::detail::scalar_vtable();
  CHECK(kernels::backend_name() != nullptr);
}

TEST_CASE("scalar and avx2 backends produce identical bits") {
  if (!avx2_available()) {
    MESSAGE("AVX2 not available; skipping equivalence checks");
    return;
  }
  const auto& s = kernels::detail::scalar_vtable();
  const auto* a = kernels::detail::avx2_vtable();
  std::mt19937_64 engine(42);

  for (const std::size_t n : kSizes) {
    CAPTURE(n);
    const std::vector<double> xs = random_values(engine, n);
    const std::vector<double> ys = random_values(engine, n);
    const std::vector<double> zs = random_values(engine, n);

    // transform_points
    {
      const double rot[9] = {0.36, 0.48, -0.8, -0.8, 0.6, 0.0, 0.48, 0.64, 0.6};
      const double trans[3] = {1.25, -2.5, 0.75};
      std::vector<double> ox_s(n), oy_s(n), oz_s(n), ox_a(n), oy_a(n), oz_a(n);
      s.transform_points(n, xs.data(), ys.data(), zs.data(), rot, trans,
                         ox_s.data(), oy_s.data(), oz_s.data());
      a->transform_points(n, xs.data(), ys.data(), zs.data(), rot, trans,
                          ox_a.data(), oy_a.data(), oz_a.data());
      CHECK(ox_s == ox_a);
      CHECK(oy_s == oy_a);
      CHECK(oz_s == oz_a);

      // Aliased output must match the out-of-place result.
      std::vector<double> ix = xs, iy = ys, iz = zs;
      a->transform_points(n, ix.data(), iy.data(), iz.data(), rot, trans,
                          ix.data(), iy.data(), iz.data());
      CHECK(ix == ox_s);
      CHECK(iy == oy_s);
      CHECK(iz == oz_s);
    }

    // radial_distances / radial_distances_row / squared_distances_xy
    {
      std::vector<double> out_s(n), out_a(n);
      s.radial_distances(n, xs.data(), ys.data(), 3.5, -1.25, out_s.data());
      a->radial_distances(n, xs.data(), ys.data(), 3.5, -1.25, out_a.data());
      CHECK(out_s == out_a);

      s.radial_distances_row(n, xs.data(), 2.0, -0.5, 4.75, out_s.data());
      a->radial_distances_row(n, xs.data(), 2.0, -0.5, 4.75, out_a.data());
      CHECK(out_s == out_a);

      s.squared_distances_xy(n, xs.data(), ys.data(), -7.5, 0.125, out_s.data());
      a->squared_distances_xy(n, xs.data(), ys.data(), -7.5, 0.125, out_a.data());
      CHECK(out_s == out_a);
    }

    // minmax_xy
    {
      double sxmin, sxmax, symin, symax;
      double axmin, axmax, aymin, aymax;
      s.minmax_xy(n, xs.data(), ys.data(), sxmin, sxmax, symin, symax);
      a->minmax_xy(n, xs.data(), ys.data(), axmin, axmax, aymin, aymax);
      CHECK(sxmin == axmin);
      CHECK(sxmax == axmax);
      CHECK(symin == aymin);
      CHECK(symax == aymax);
    }

    // reductions
    CHECK(s.sum(n, xs.data()) == a->sum(n, xs.data()));
    CHECK(s.sum_squares(n, xs.data()) == a->sum_squares(n, xs.data()));
  }
}

TEST_CASE("kernel results are correct against plain loops") {
  const std::size_t n = 37;
  std::mt19937_64 engine(7);
  const std::vector<double> xs = random_values(engine, n);
  const std::vector<double> ys = random_values(engine, n);

  std::vector<double> out(n);
  kernels::radial_distances(n, xs.data(), ys.data(), 1.5, -2.0, out.data());
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(out[i] == doctest::Approx(std::hypot(xs[i] - 1.5, ys[i] + 2.0)).epsilon(1e-12));
  }

  kernels::squared_distances_xy(n, xs.data(), ys.data(), 0.25, 0.75, out.data());
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - 0.25;
    const double dy = ys[i] - 0.75;
    CHECK(out[i] == doctest::Approx(dx * dx + dy * dy).epsilon(1e-12));
  }

  double xmin, xmax, ymin, ymax;
  kernels::minmax_xy(n, xs.data(), ys.data(), xmin, xmax, ymin, ymax);
  CHECK(xmin == *std::min_element(xs.begin(), xs.end()));
  CHECK(xmax == *std::max_element(xs.begin(), xs.end()));
  CHECK(ymin == *std::min_element(ys.begin(), ys.end()));
  CHECK(ymax == *std::max_element(ys.begin(), ys.end()));

  double acc = 0.0;
  for (const double x : xs) acc += x;
  CHECK(kernels::sum(n, xs.data()) == doctest::Approx(acc).epsilon(1e-12));
}

TEST_CASE("identity transform is exact") {
  const std::size_t n = 9;
  std::mt19937_64 engine(11);
  const std::vector<double> xs = random_values(engine, n);
  const std::vector<double> ys = random_values(engine, n);
  const std::vector<double> zs = random_values(engine, n);
  const double rot[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  const double trans[3] = {0, 0, 0};
  std::vector<double> ox(n), oy(n), oz(n);
  kernels::transform_points(n, xs.data(), ys.data(), zs.data(), rot, trans,
                            ox.data(), oy.data(), oz.data());
  CHECK(ox == xs);
  CHECK(oy == ys);
  CHECK(oz == zs);
}

TEST_CASE("set_backend round-trips and rejects unsupported backends") {
  BackendGuard guard;
  CHECK(kernels::set_backend(kernels::Backend::Scalar));
  CHECK(kernels::active_backend() == kernels::Backend::Scalar);
  if (avx2_available()) {
    CHECK(kernels::set_backend(kernels::Backend::Avx2));
    CHECK(kernels::active_backend() == kernels::Backend::Avx2);
  } else {
    CHECK_FALSE(kernels::set_backend(kernels::Backend::Avx2));
    CHECK(kernels::active_backend() == kernels::Backend::Scalar);
  }
}

TEST_CASE("public entry points agree with the scalar reference") {
  BackendGuard guard;
  std::mt19937_64 engine(19);
  const std::size_t n = 129;
  const std::vector<double> xs = random_values(engine, n);
  const std::vector<double> ys = random_values(engine, n);

  kernels::set_backend(kernels::Backend::Scalar);
  std::vector<double> scalar_out(n);
  kernels::radial_distances(n, xs.data(), ys.data(), 0.0, 0.0, scalar_out.data());
  const double scalar_sum = kernels::sum(n, xs.data());

  if (avx2_available()) {
    kernels::set_backend(kernels::Backend::Avx2);
    std::vector<double> avx_out(n);
    kernels::radial_distances(n, xs.data(), ys.data(), 0.0, 0.0, avx_out.data());
    CHECK(avx_out == scalar_out);
    CHECK(kernels::sum(n, xs.data()) == scalar_sum);
  }
}
