#pragma once

#include <cstddef>
#include <span>
#include <string>

// Data-parallel inner loops shared by the statistics and analysis layers.
//
// Every kernel exists in a scalar reference form and, on x86-64, an AVX2
// form. The backend is picked once at startup (CPUID probe, overridable via
// the QCOST_KERNELS environment variable or set_backend()), and the two are
// equivalence-tested against each other. Reductions use Neumaier compensated
// accumulation in both backends so results are order-robust to ~1 ulp.

namespace qcost::kernels {

enum class Backend { Scalar, Avx2 };

/// Backend currently in use.
Backend active_backend();

/// True if `b` is runnable on this machine/build.
bool backend_available(Backend b);

/// Select a backend explicitly (tests, benchmarking). Returns false and
/// leaves the selection unchanged if the backend is unavailable.
bool set_backend(Backend b);

std::string backend_name(Backend b);

/// Compensated sum of xs.
double sum(std::span<const double> xs);

/// Compensated dot product. Sizes must match.
double dot(std::span<const double> xs, std::span<const double> ys);

/// Compensated sum of (x - mean)^2.
double sum_sq_dev(std::span<const double> xs, double mean);

/// Compensated sum of (x - mean_x) * (y - mean_y). Sizes must match.
double sum_dev_prod(std::span<const double> xs, double mean_x,
                    std::span<const double> ys, double mean_y);

/// Elementwise correlation curve in the estimated-cost dispersion ratio:
///   out[i] = A * (B * e + C) / sqrt(e^2 + 2*beta*e + 1),  e = eta_prime[i].
/// Requires |beta| < 1 so the radicand stays positive. Sizes must match.
void rho_vs_eta_prime(double coeff_a, double coeff_b, double coeff_c, double beta,
                      std::span<const double> eta_prime, std::span<double> out);

/// Elementwise large-eta_prime correlation curve:
///   out[i] = (e + alpha) / sqrt(e^2 + 2*alpha*e + 1),  e = eta[i].
void rho_vs_eta(double alpha, std::span<const double> eta, std::span<double> out);

}  // namespace qcost::kernels
