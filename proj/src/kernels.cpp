#include "moran/kernels.hpp"

#include <atomic>

#if defined(MORAN_HAVE_AVX2_KERNELS)
#include <immintrin.h>
#endif

namespace moran::kernels {

namespace scalar {

std::size_t count_in_range(const std::uint32_t* v, std::size_t n, std::uint32_t lo, std::uint32_t hi) {
    if (lo > hi) return 0;
    const std::uint32_t width = hi - lo;
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i) c += (v[i] - lo) <= width;
    return c;
}

void histogram_u8(const std::uint8_t* v, std::size_t n, unsigned bins, std::uint64_t* out) {
    for (std::size_t i = 0; i < n; ++i) {
        if (v[i] < bins) ++out[v[i]];
    }
}

}  // namespace scalar

#if defined(MORAN_HAVE_AVX2_KERNELS)
namespace avx2 {

__attribute__((target("avx2,popcnt"))) std::size_t count_in_range(const std::uint32_t* v, std::size_t n,
                                                                  std::uint32_t lo, std::uint32_t hi) {
    if (lo > hi) return 0;
    const __m256i vlo = _mm256_set1_epi32(static_cast<int>(lo));
    const __m256i vw = _mm256_set1_epi32(static_cast<int>(hi - lo));
    std::size_t c = 0, i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256i x = _mm256_sub_epi32(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(v + i)), vlo);
        __m256i in = _mm256_cmpeq_epi32(_mm256_min_epu32(x, vw), x);
        c += static_cast<std::size_t>(_mm_popcnt_u32(static_cast<unsigned>(_mm256_movemask_ps(_mm256_castsi256_ps(in)))));
    }
    return c + scalar::count_in_range(v + i, n - i, lo, hi);
}

__attribute__((target("avx2,popcnt"))) void histogram_u8(const std::uint8_t* v, std::size_t n, unsigned bins,
                                                         std::uint64_t* out) {
    if (bins > 32) {
        scalar::histogram_u8(v, n, bins, out);
        return;
    }
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        __m256i x = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(v + i));
        for (unsigned k = 0; k < bins; ++k) {
            __m256i eq = _mm256_cmpeq_epi8(x, _mm256_set1_epi8(static_cast<char>(k)));
            out[k] += static_cast<std::uint64_t>(_mm_popcnt_u32(static_cast<unsigned>(_mm256_movemask_epi8(eq))));
        }
    }
    scalar::histogram_u8(v + i, n - i, bins, out);
}

}  // namespace avx2
#endif

namespace {

Isa probe() {
#if defined(MORAN_HAVE_AVX2_KERNELS)
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("popcnt")) return Isa::Avx2;
#endif
    return Isa::Scalar;
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{probe()};
    return isa;
}

}  // namespace

Isa detected_isa() {
    static const Isa isa = probe();
    return isa;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void force(Isa isa) {
    if (isa == Isa::Avx2 && detected_isa() != Isa::Avx2) isa = Isa::Scalar;
    current().store(isa, std::memory_order_relaxed);
}

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

std::size_t count_in_range(const std::uint32_t* v, std::size_t n, std::uint32_t lo, std::uint32_t hi) {
#if defined(MORAN_HAVE_AVX2_KERNELS)
    if (active_isa() == Isa::Avx2) return avx2::count_in_range(v, n, lo, hi);
#endif
    return scalar::count_in_range(v, n, lo, hi);
}

void histogram_u8(const std::uint8_t* v, std::size_t n, unsigned bins, std::uint64_t* out) {
#if defined(MORAN_HAVE_AVX2_KERNELS)
    if (active_isa() == Isa::Avx2) return avx2::histogram_u8(v, n, bins, out);
#endif
    scalar::histogram_u8(v, n, bins, out);
}

}  // namespace moran::kernels
