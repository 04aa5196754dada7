#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Dense double-precision inner loops. Every kernel has a scalar reference
// implementation and, on x86-64, an AVX2/FMA variant. The variant is chosen
// once at startup from the CPU feature flags; ZSL_KERNELS=scalar in the
// environment forces the reference path.
namespace zsl::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);
Isa active_isa();
// Switches the process-wide dispatch table. Not thread-safe against
// concurrent kernel calls; intended for tests and startup code.
void set_active_isa(Isa isa);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
}  // namespace avx2

double dot(std::span<const double> a, std::span<const double> b);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace zsl::kernels
