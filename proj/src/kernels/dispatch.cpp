#include "qcost/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "kernels_impl.hpp"

namespace qcost::kernels {

namespace {

using detail::KernelTable;

bool cpu_has_avx2() {
#if defined(QCOST_HAVE_AVX2_TU) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* table_for(Backend b) {
    switch (b) {
        case Backend::Scalar:
            return &detail::scalar_table;
        case Backend::Avx2:
#if defined(QCOST_HAVE_AVX2_TU)
            return &detail::avx2_table;
#else
            return nullptr;
#endif
    }
    return nullptr;
}

Backend initial_backend() {
    if (const char* env = std::getenv("QCOST_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
        if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) return Backend::Avx2;
    }
    return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

struct Dispatch {
    std::atomic<Backend> backend{initial_backend()};
    const KernelTable* table() const { return table_for(backend.load()); }
};

Dispatch& dispatch() {
    static Dispatch d;
    return d;
}

}  // namespace

Backend active_backend() { return dispatch().backend.load(); }

bool backend_available(Backend b) {
    if (b == Backend::Avx2) return cpu_has_avx2();
    return table_for(b) != nullptr;
}

bool set_backend(Backend b) {
    if (!backend_available(b)) return false;
    dispatch().backend.store(b);
    return true;
}

std::string backend_name(Backend b) {
    switch (b) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
    }
    return "unknown";
}

double sum(std::span<const double> xs) { return dispatch().table()->sum(xs); }

double dot(std::span<const double> xs, std::span<const double> ys) {
    return dispatch().table()->dot(xs, ys);
}

double sum_sq_dev(std::span<const double> xs, double mean) {
    return dispatch().table()->sum_sq_dev(xs, mean);
}

double sum_dev_prod(std::span<const double> xs, double mean_x,
                    std::span<const double> ys, double mean_y) {
    return dispatch().table()->sum_dev_prod(xs, mean_x, ys, mean_y);
}

void rho_vs_eta_prime(double coeff_a, double coeff_b, double coeff_c, double beta,
                      std::span<const double> eta_prime, std::span<double> out) {
    dispatch().table()->rho_vs_eta_prime(coeff_a, coeff_b, coeff_c, beta, eta_prime, out);
}

void rho_vs_eta(double alpha, std::span<const double> eta, std::span<double> out) {
    dispatch().table()->rho_vs_eta(alpha, eta, out);
}

}  // namespace qcost::kernels
