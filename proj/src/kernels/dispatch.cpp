#include "nnsolve/kernels/kernels.hpp"

#include <cstdlib>
#include <string>

#include "nnsolve/errors.hpp"

namespace nnsolve::kern {

bool cpu_supports_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

bool cpu_supports_avx512() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx512f") && __builtin_cpu_supports("avx512dq");
#else
    return false;
#endif
}

const Kernels* kernels_by_name(std::string_view name) {
    if (name == "scalar") return &scalar_kernels();
    if (name == "avx2" && cpu_supports_avx2()) return avx2_kernels();
    if (name == "avx512" && cpu_supports_avx512()) return avx512_kernels();
    return nullptr;
}

std::vector<const Kernels*> available_kernels() {
    std::vector<const Kernels*> out{&scalar_kernels()};
    if (const Kernels* k = avx2_kernels(); k && cpu_supports_avx2()) out.push_back(k);
    if (const Kernels* k = avx512_kernels(); k && cpu_supports_avx512()) out.push_back(k);
    return out;
}

const Kernels& active_kernels() {
    static const Kernels* chosen = [] {
        if (const char* env = std::getenv("NNSOLVE_KERNELS")) {
            const Kernels* k = kernels_by_name(env);
            if (!k)
                throw ParamError("NNSOLVE_KERNELS=" + std::string(env) +
                                 " is unknown or unsupported on this CPU (scalar|avx2|avx512)");
            return k;
        }
        if (const Kernels* k = avx512_kernels(); k && cpu_supports_avx512()) return k;
        if (const Kernels* k = avx2_kernels(); k && cpu_supports_avx2()) return k;
        return &scalar_kernels();
    }();
    return *chosen;
}

} // namespace nnsolve::kern
