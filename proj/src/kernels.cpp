#include "igeo/kernels.hpp"

#include <cmath>
#include <limits>

#include "igeo/errors.hpp"
#include "kernels_detail.hpp"

namespace igeo::kernels {

namespace detail {

double reduce_max_scalar(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  return m;
}

double reduce_sum_scalar(std::span<const double> v) {
  double s = 0.0, c = 0.0;
  for (double x : v) {
    double y = x - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

double dot_scalar(std::span<const double> a, std::span<const double> b) {
  double s = 0.0, c = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double y = a[i] * b[i] - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

void scale_scalar(std::span<double> v, double a) {
  for (double& x : v) x *= a;
}

double exp_shifted_sum_scalar(std::span<const double> v, double shift,
                              std::span<double> out) {
  double s = 0.0, c = 0.0;
  const bool store = !out.empty();
  for (std::size_t i = 0; i < v.size(); ++i) {
    double e = std::exp(v[i] - shift);
    if (store) out[i] = e;
    double y = e - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

void subset_sum_scalar(std::span<double> a, int nbits) {
  const std::size_t n = a.size();
  for (int b = 0; b < nbits; ++b) {
    const std::size_t stride = std::size_t{1} << b;
    for (std::size_t base = 0; base < n; base += 2 * stride)
      for (std::size_t k = 0; k < stride; ++k)
        a[base + stride + k] += a[base + k];
  }
}

void superset_sum_scalar(std::span<double> a, int nbits) {
  const std::size_t n = a.size();
  for (int b = 0; b < nbits; ++b) {
    const std::size_t stride = std::size_t{1} << b;
    for (std::size_t base = 0; base < n; base += 2 * stride)
      for (std::size_t k = 0; k < stride; ++k)
        a[base + k] += a[base + stride + k];
  }
}

double merge_compensated(const double* sums, const double* comps, int lanes) {
  /* Neumaier accumulation of the lane sums minus their compensations. */
  double s = 0.0, c = 0.0;
  auto add = [&](double x) {
    double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  };
  for (int i = 0; i < lanes; ++i) add(sums[i]);
  for (int i = 0; i < lanes; ++i) add(-comps[i]);
  return s + c;
}

}  // namespace detail

namespace {

bool cpu_has_avx2() {
#if defined(IGEO_HAVE_AVX2) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect_backend() { return cpu_has_avx2() ? Backend::avx2 : Backend::scalar; }

Backend& backend_slot() {
  static Backend b = detect_backend();
  return b;
}

}  // namespace

Backend active_backend() { return backend_slot(); }

bool avx2_supported() { return cpu_has_avx2(); }

std::string_view backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

void set_backend(Backend b) {
  if (b == Backend::avx2 && !avx2_supported())
    throw ValidationError("kernel backend avx2 is not supported on this host");
  backend_slot() = b;
}

double reduce_max(std::span<const double> v) {
#ifdef IGEO_HAVE_AVX2
  if (backend_slot() == Backend::avx2) return detail::reduce_max_avx2(v);
#endif
  return detail::reduce_max_scalar(v);
}

double reduce_sum(std::span<const double> v) {
#ifdef IGEO_HAVE_AVX2
  if (backend_slot() == Backend::avx2) return detail::reduce_sum_avx2(v);
#endif
  return detail::reduce_sum_scalar(v);
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("dot: size mismatch");
#ifdef IGEO_HAVE_AVX2
  if (backend_slot() == Backend::avx2) return detail::dot_avx2(a, b);
#endif
  return detail::dot_scalar(a, b);
}

void scale(std::span<double> v, double a) {
#ifdef IGEO_HAVE_AVX2
  if (backend_slot() == Backend::avx2) return detail::scale_avx2(v, a);
#endif
  detail::scale_scalar(v, a);
}

double exp_shifted_sum(std::span<const double> v, double shift,
                       std::span<double> out) {
  if (!out.empty() && out.size() != v.size())
    throw ValidationError("exp_shifted_sum: output size mismatch");
#ifdef IGEO_HAVE_AVX2
  if (backend_slot() == Backend::avx2)
    return detail::exp_shifted_sum_avx2(v, shift, out);
#endif
  return detail::exp_shifted_sum_scalar(v, shift, out);
}

static void check_pow2(std::size_t size, int nbits) {
  if (nbits < 0 || nbits > 30 || size != (std::size_t{1} << nbits))
    throw ValidationError("lattice transform: size must equal 2^nbits");
}

void subset_sum_inplace(std::span<double> a, int nbits) {
  check_pow2(a.size(), nbits);
#ifdef IGEO_HAVE_AVX2
  if (backend_slot() == Backend::avx2) return detail::subset_sum_avx2(a, nbits);
#endif
  detail::subset_sum_scalar(a, nbits);
}

void superset_sum_inplace(std::span<double> a, int nbits) {
  check_pow2(a.size(), nbits);
#ifdef IGEO_HAVE_AVX2
  if (backend_slot() == Backend::avx2) return detail::superset_sum_avx2(a, nbits);
#endif
  detail::superset_sum_scalar(a, nbits);
}

}  // namespace igeo::kernels
