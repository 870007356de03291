#include "nnsolve/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "nnsolve/errors.hpp"

namespace nnsolve {

namespace {
constexpr char kMagic[8] = {'F', 'N', 'N', 'C', 'K', 'P', 'T', '1'};
}

void save_checkpoint(const std::string& path, const NetworkParams& params, std::uint64_t seed) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("checkpoint: cannot open " + path + " for writing");
    f.write(kMagic, sizeof kMagic);
    const std::uint32_t dims[3] = {static_cast<std::uint32_t>(params.arch.L),
                                   static_cast<std::uint32_t>(params.arch.M),
                                   static_cast<std::uint32_t>(params.arch.d)};
    f.write(reinterpret_cast<const char*>(dims), sizeof dims);
    f.write(reinterpret_cast<const char*>(&seed), sizeof seed);
    f.write(reinterpret_cast<const char*>(params.data.data()),
            static_cast<std::streamsize>(params.data.size() * sizeof(double)));
    if (!f) throw IoError("checkpoint: short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("checkpoint: cannot open " + path);
    char magic[8];
    f.read(magic, sizeof magic);
    if (!f || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw IoError("checkpoint: " + path + " is not a parameter checkpoint");
    std::uint32_t dims[3];
    std::uint64_t seed = 0;
    f.read(reinterpret_cast<char*>(dims), sizeof dims);
    f.read(reinterpret_cast<char*>(&seed), sizeof seed);
    if (!f) throw IoError("checkpoint: truncated header in " + path);
    Architecture arch{static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2])};
    arch.validate();
    Checkpoint ck{NetworkParams(arch), seed};
    f.read(reinterpret_cast<char*>(ck.params.data.data()),
           static_cast<std::streamsize>(ck.params.data.size() * sizeof(double)));
    if (!f || f.gcount() != static_cast<std::streamsize>(ck.params.data.size() * sizeof(double)))
        throw IoError("checkpoint: truncated parameter block in " + path);
    f.peek();
    if (!f.eof()) throw IoError("checkpoint: trailing bytes in " + path);
    return ck;
}

} // namespace nnsolve
