#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace igeo::kernels {

/*
 * Array kernels behind the state-space reductions.  Every kernel has a scalar
 * reference implementation and, on x86-64 builds, an AVX2 variant.  The
 * backend is picked at runtime from CPUID; tests can force either one to
 * check equivalence.  For a fixed backend the accumulation order is fixed,
 * so results are bit-stable across runs.
 */

enum class Backend { scalar, avx2 };

Backend active_backend();
void set_backend(Backend b);  // throws ValidationError if unsupported
bool avx2_supported();
std::string_view backend_name(Backend b);

/* Maximum element; quiet -inf for an empty span. */
double reduce_max(std::span<const double> v);

/* Kahan-compensated sum. */
double reduce_sum(std::span<const double> v);

/* Kahan-compensated dot product. */
double dot(std::span<const double> a, std::span<const double> b);

/* v *= a elementwise. */
void scale(std::span<double> v, double a);

/*
 * out[i] = exp(v[i] - shift) (skipped when out is empty); returns the
 * compensated sum of the exponentials.  Shift by the max element first and
 * no finite input overflows.
 */
double exp_shifted_sum(std::span<const double> v, double shift,
                       std::span<double> out);

/*
 * In-place zeta transforms over the n-bit subset lattice (a.size() == 2^n).
 * subset_sum_inplace:   a[m] <- sum over s subseteq m of a[s]
 * superset_sum_inplace: a[m] <- sum over s superseteq m of a[s]
 */
void subset_sum_inplace(std::span<double> a, int nbits);
void superset_sum_inplace(std::span<double> a, int nbits);

}  // namespace igeo::kernels
