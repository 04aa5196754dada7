#include <cassert>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "zsl/kernels.hpp"

namespace zsl::kernels {

namespace {

struct Table {
  Isa isa;
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*squared_distance)(const double*, const double*, std::size_t);
};

constexpr Table kScalar{Isa::scalar, &scalar::dot, &scalar::axpy, &scalar::squared_distance};
#if defined(ZSL_HAVE_AVX2)
constexpr Table kAvx2{Isa::avx2, &avx2::dot, &avx2::axpy, &avx2::squared_distance};
#endif

const Table& table_for(Isa isa) {
#if defined(ZSL_HAVE_AVX2)
  if (isa == Isa::avx2) return kAvx2;
#endif
  return kScalar;
}

Isa detect() {
  if (const char* forced = std::getenv("ZSL_KERNELS")) {
    if (std::string(forced) == "scalar") return Isa::scalar;
  }
  return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

const Table*& current() {
  static const Table* table = &table_for(detect());
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(ZSL_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() { return current()->isa; }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("kernel ISA not supported on this machine: " + std::string(isa_name(isa)));
  }
  current() = &table_for(isa);
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return current()->dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  current()->axpy(alpha, x.data(), y.data(), x.size());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return current()->squared_distance(a.data(), b.data(), a.size());
}

}  // namespace zsl::kernels
