#pragma once

#include <span>

namespace igeo::kernels::detail {

double reduce_max_scalar(std::span<const double> v);
double reduce_sum_scalar(std::span<const double> v);
double dot_scalar(std::span<const double> a, std::span<const double> b);
void scale_scalar(std::span<double> v, double a);
double exp_shifted_sum_scalar(std::span<const double> v, double shift,
                              std::span<double> out);
void subset_sum_scalar(std::span<double> a, int nbits);
void superset_sum_scalar(std::span<double> a, int nbits);

#ifdef IGEO_HAVE_AVX2
double reduce_max_avx2(std::span<const double> v);
double reduce_sum_avx2(std::span<const double> v);
double dot_avx2(std::span<const double> a, std::span<const double> b);
void scale_avx2(std::span<double> v, double a);
double exp_shifted_sum_avx2(std::span<const double> v, double shift,
                            std::span<double> out);
void subset_sum_avx2(std::span<double> a, int nbits);
void superset_sum_avx2(std::span<double> a, int nbits);
#endif

/* Folds lane partial sums and their compensations into one double. */
double merge_compensated(const double* sums, const double* comps, int lanes);

}  // namespace igeo::kernels::detail
