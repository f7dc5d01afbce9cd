#pragma once

#include <cstdint>
#include <random>

namespace elab {

/// Stream families. Keeping them distinct means e.g. the initial-condition draws of
/// path 7 never coincide with the increment draws of path 7 of another experiment part.
enum class StreamTag : std::uint64_t {
    Path = 1,
    Initial = 2,
    Sampler = 3,
    Bootstrap = 4,
    Cloud = 5,
    Misc = 6,
};

/// Random stream keyed by (seed, tag, index).
///
/// Each stream is an independent mt19937_64 whose state is derived from the key through
/// std::seed_seq, so the draws of stream i do not depend on how many other streams exist
/// or in which order (or on which thread) they are consumed.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t index, StreamTag tag = StreamTag::Path);

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }  // [0, 1)
    void normals(double* out, std::size_t n);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
    std::uniform_real_distribution<double> uniform_;
};

}  // namespace elab
