#pragma once

#include <cstddef>
#include <cstdint>

namespace moran::kernels {

enum class Isa { Scalar, Avx2 };

// Best ISA supported by the running CPU.
Isa detected_isa();
// Currently dispatched ISA; force() clamps to what the CPU supports.
Isa active_isa();
void force(Isa isa);
const char* isa_name(Isa isa);

// Number of i with lo <= v[i] <= hi.
std::size_t count_in_range(const std::uint32_t* v, std::size_t n, std::uint32_t lo, std::uint32_t hi);

// out[k] += #{i : v[i] == k} for k < bins; every v[i] must be < bins <= 256.
void histogram_u8(const std::uint8_t* v, std::size_t n, unsigned bins, std::uint64_t* out);

namespace scalar {
std::size_t count_in_range(const std::uint32_t* v, std::size_t n, std::uint32_t lo, std::uint32_t hi);
void histogram_u8(const std::uint8_t* v, std::size_t n, unsigned bins, std::uint64_t* out);
}  // namespace scalar

#if defined(__x86_64__) || defined(__i386__)
#define MORAN_HAVE_AVX2_KERNELS 1
namespace avx2 {
std::size_t count_in_range(const std::uint32_t* v, std::size_t n, std::uint32_t lo, std::uint32_t hi);
void histogram_u8(const std::uint8_t* v, std::size_t n, unsigned bins, std::uint64_t* out);
}  // namespace avx2
#endif

}  // namespace moran::kernels
