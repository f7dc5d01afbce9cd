#include "elab/rng.hpp"

namespace elab {

namespace {
std::mt19937_64 keyed_engine(std::uint64_t seed, std::uint64_t index, StreamTag tag) {
    const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
    const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    const auto t = static_cast<std::uint64_t>(tag);
    std::seed_seq seq{lo(seed), hi(seed), lo(t), hi(t), lo(index), hi(index)};
    return std::mt19937_64(seq);
}
}  // namespace

Stream::Stream(std::uint64_t seed, std::uint64_t index, StreamTag tag)
    : engine_(keyed_engine(seed, index, tag)), normal_(0.0, 1.0), uniform_(0.0, 1.0) {}

void Stream::normals(double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = normal_(engine_);
}

}  // namespace elab
