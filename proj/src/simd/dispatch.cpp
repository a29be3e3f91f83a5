#include <atomic>
#include <cstdlib>
#include <string_view>

#include "drivegaze/simd/kernels.hpp"

namespace drivegaze::simd {

#if defined(DRIVEGAZE_HAVE_AVX2)
const Kernels& avx2_kernel_table() noexcept;
#endif

namespace {

bool cpu_has_avx2() noexcept
{
#if defined(DRIVEGAZE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Kernels* initial_selection() noexcept
{
    const char* env = std::getenv("DRIVEGAZE_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") {
        return &scalar_kernels();
    }
    if (const Kernels* k = avx2_kernels()) {
        return k;
    }
    return &scalar_kernels();
}

std::atomic<const Kernels*>& selection() noexcept
{
    static std::atomic<const Kernels*> current{initial_selection()};
    return current;
}

}  // namespace

const Kernels* avx2_kernels() noexcept
{
#if defined(DRIVEGAZE_HAVE_AVX2)
    static const bool supported = cpu_has_avx2();
    return supported ? &avx2_kernel_table() : nullptr;
#else
    return nullptr;
#endif
}

const Kernels& active() noexcept { return *selection().load(std::memory_order_acquire); }

bool select_isa(Isa isa) noexcept
{
    const Kernels* table = isa == Isa::scalar ? &scalar_kernels() : avx2_kernels();
    if (table == nullptr) {
        return false;
    }
    selection().store(table, std::memory_order_release);
    return true;
}

std::string_view isa_name(Isa isa) noexcept
{
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "unknown";
}

}  // namespace drivegaze::simd
