#pragma once

#include <cmath>
#include <span>

// Per-backend kernel entry points plus the dispatch table. Internal header.

namespace qcost::kernels::detail {

struct KernelTable {
    double (*sum)(std::span<const double>);
    double (*dot)(std::span<const double>, std::span<const double>);
    double (*sum_sq_dev)(std::span<const double>, double);
    double (*sum_dev_prod)(std::span<const double>, double,
                           std::span<const double>, double);
    void (*rho_vs_eta_prime)(double, double, double, double,
                             std::span<const double>, std::span<double>);
    void (*rho_vs_eta)(double, std::span<const double>, std::span<double>);
};

extern const KernelTable scalar_table;

#if defined(QCOST_HAVE_AVX2_TU)
extern const KernelTable avx2_table;
#endif

// Neumaier running sum; value is total + comp.
struct CompensatedSum {
    double total = 0.0;
    double comp = 0.0;

    void add(double x) {
        const double t = total + x;
        if (std::abs(total) >= std::abs(x)) {
            comp += (total - t) + x;
        } else {
            comp += (x - t) + total;
        }
        total = t;
    }

    double value() const { return total + comp; }
};

}  // namespace qcost::kernels::detail
