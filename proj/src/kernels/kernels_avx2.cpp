// AVX2 kernels, 4 doubles per lane. Reductions keep a per-lane Neumaier
// compensation vector; the four (total, comp) pairs are folded with the
// scalar compensated accumulator so results match the reference to ~1 ulp.
// This TU is the only one compiled with -mavx2/-mfma.

#if defined(QCOST_HAVE_AVX2_TU)

#include <immintrin.h>

#include <cmath>
#include <span>

#include "kernels_impl.hpp"

namespace qcost::kernels::detail {
namespace {

struct VecCompensated {
    __m256d total = _mm256_setzero_pd();
    __m256d comp = _mm256_setzero_pd();

    // Neumaier update per lane: branchless |total| >= |x| selection.
    inline void add(__m256d x) {
        const __m256d t = _mm256_add_pd(total, x);
        const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
        const __m256d big_first =
            _mm256_add_pd(_mm256_sub_pd(total, t), x);  // (total - t) + x
        const __m256d small_first =
            _mm256_add_pd(_mm256_sub_pd(x, t), total);  // (x - t) + total
        const __m256d take_big = _mm256_cmp_pd(_mm256_and_pd(total, abs_mask),
                                               _mm256_and_pd(x, abs_mask), _CMP_GE_OQ);
        comp = _mm256_add_pd(comp, _mm256_blendv_pd(small_first, big_first, take_big));
        total = t;
    }

    // Fold the four lanes (and their compensations) into one scalar sum.
    inline double fold_into(CompensatedSum& acc) const {
        alignas(32) double t[4];
        alignas(32) double c[4];
        _mm256_store_pd(t, total);
        _mm256_store_pd(c, comp);
        for (int i = 0; i < 4; ++i) acc.add(t[i]);
        for (int i = 0; i < 4; ++i) acc.add(c[i]);
        return acc.value();
    }
};

double sum_avx2(std::span<const double> xs) {
    const std::size_t n = xs.size();
    const double* p = xs.data();
    VecCompensated vacc;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vacc.add(_mm256_loadu_pd(p + i));
    CompensatedSum tail;
    vacc.fold_into(tail);
    for (; i < n; ++i) tail.add(p[i]);
    return tail.value();
}

double dot_avx2(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = xs.size();
    const double* px = xs.data();
    const double* py = ys.data();
    VecCompensated vacc;
    std::size_t i = 0;
    // Plain multiply (no FMA) so products round identically to the scalar path.
    for (; i + 4 <= n; i += 4) {
        vacc.add(_mm256_mul_pd(_mm256_loadu_pd(px + i), _mm256_loadu_pd(py + i)));
    }
    CompensatedSum tail;
    vacc.fold_into(tail);
    for (; i < n; ++i) tail.add(px[i] * py[i]);
    return tail.value();
}

double sum_sq_dev_avx2(std::span<const double> xs, double mean) {
    const std::size_t n = xs.size();
    const double* p = xs.data();
    const __m256d m = _mm256_set1_pd(mean);
    VecCompensated vacc;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(p + i), m);
        vacc.add(_mm256_mul_pd(d, d));
    }
    CompensatedSum tail;
    vacc.fold_into(tail);
    for (; i < n; ++i) {
        const double d = p[i] - mean;
        tail.add(d * d);
    }
    return tail.value();
}

double sum_dev_prod_avx2(std::span<const double> xs, double mean_x,
                         std::span<const double> ys, double mean_y) {
    const std::size_t n = xs.size();
    const double* px = xs.data();
    const double* py = ys.data();
    const __m256d mx = _mm256_set1_pd(mean_x);
    const __m256d my = _mm256_set1_pd(mean_y);
    VecCompensated vacc;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(px + i), mx);
        const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(py + i), my);
        vacc.add(_mm256_mul_pd(dx, dy));
    }
    CompensatedSum tail;
    vacc.fold_into(tail);
    for (; i < n; ++i) tail.add((px[i] - mean_x) * (py[i] - mean_y));
    return tail.value();
}

void rho_vs_eta_prime_avx2(double a, double b, double c, double beta,
                           std::span<const double> eta_prime,
                           std::span<double> out) {
    const std::size_t n = eta_prime.size();
    const double* p = eta_prime.data();
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    const __m256d vc = _mm256_set1_pd(c);
    const __m256d v2beta = _mm256_set1_pd(2.0 * beta);
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d e = _mm256_loadu_pd(p + i);
        const __m256d num = _mm256_mul_pd(va, _mm256_fmadd_pd(vb, e, vc));
        const __m256d rad = _mm256_fmadd_pd(e, e, _mm256_fmadd_pd(v2beta, e, one));
        _mm256_storeu_pd(out.data() + i, _mm256_div_pd(num, _mm256_sqrt_pd(rad)));
    }
    for (; i < n; ++i) {
        const double e = p[i];
        out[i] = a * std::fma(b, e, c) /
                 std::sqrt(std::fma(e, e, std::fma(2.0 * beta, e, 1.0)));
    }
}

void rho_vs_eta_avx2(double alpha, std::span<const double> eta,
                     std::span<double> out) {
    const std::size_t n = eta.size();
    const double* p = eta.data();
    const __m256d valpha = _mm256_set1_pd(alpha);
    const __m256d v2alpha = _mm256_set1_pd(2.0 * alpha);
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d e = _mm256_loadu_pd(p + i);
        const __m256d num = _mm256_add_pd(e, valpha);
        const __m256d rad = _mm256_fmadd_pd(e, e, _mm256_fmadd_pd(v2alpha, e, one));
        _mm256_storeu_pd(out.data() + i, _mm256_div_pd(num, _mm256_sqrt_pd(rad)));
    }
    for (; i < n; ++i) {
        const double e = p[i];
        out[i] = (e + alpha) /
                 std::sqrt(std::fma(e, e, std::fma(2.0 * alpha, e, 1.0)));
    }
}

}  // namespace

const KernelTable avx2_table = {
    sum_avx2,        dot_avx2,
    sum_sq_dev_avx2, sum_dev_prod_avx2,
    rho_vs_eta_prime_avx2, rho_vs_eta_avx2,
};

}  // namespace qcost::kernels::detail

#endif  // QCOST_HAVE_AVX2_TU
