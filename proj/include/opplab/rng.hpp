#pragma once

// Counter-based random streams (Philox2x64-10, Random123 constants).
//
// Draw t of stream s under master seed m is a pure function of (m, s, t):
// no hidden state, so any worker can reproduce any stream slice, parallel
// runs merge deterministically, and a manifest entry (seed, stream id) pins
// an entire trajectory. Stream ids carry a namespace in their top 16 bits so
// the main run, centering oracles and verifier batches never share a stream.

#include "opplab/rational.hpp"

#include <cstdint>

namespace opplab {

// splitmix64: standard 64-bit finalizer-style mixer, used only to whiten the
// master seed into a Philox key.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

struct Philox2x64Block {
    std::uint64_t x0;
    std::uint64_t x1;
};

// One 10-round Philox2x64 block: 128 bits out per (key, counter, stream).
inline Philox2x64Block philox2x64(std::uint64_t key, std::uint64_t counter,
                                  std::uint64_t stream) {
    constexpr std::uint64_t kMul = 0xD2B74407B1CE6E93ULL;
    constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ULL;
    std::uint64_t c0 = counter;
    std::uint64_t c1 = stream;
    std::uint64_t k = key;
    for (int round = 0; round < 10; ++round) {
        const unsigned __int128 prod = static_cast<unsigned __int128>(c0) * kMul;
        const std::uint64_t lo = static_cast<std::uint64_t>(prod);
        const std::uint64_t hi = static_cast<std::uint64_t>(prod >> 64);
        c0 = hi ^ k ^ c1;
        c1 = lo;
        k += kWeyl;
    }
    return {c0, c1};
}

// Stream-id namespaces. Keeping these disjoint is what lets a single master
// seed drive the whole experiment without accidental draw reuse.
enum class StreamSpace : std::uint64_t {
    main = 0,        // replication r of the primary run
    centering = 1,   // Monte-Carlo centering oracle
    verifier = 2,    // verification sample batches
    aux = 3,         // anything else (smoke tests, scratch)
};

inline std::uint64_t stream_id(StreamSpace space, std::uint64_t index) {
    return (static_cast<std::uint64_t>(space) << 48) | (index & 0xFFFFFFFFFFFFULL);
}

// A stateful view over one stream. Cheap to construct; copying is fine (the
// copy continues from the same position).
class RandomStream {
public:
    RandomStream(std::uint64_t master_seed, std::uint64_t stream)
        : key_(splitmix64(master_seed)), stream_(stream) {}

    RandomStream(std::uint64_t master_seed, StreamSpace space, std::uint64_t index)
        : RandomStream(master_seed, stream_id(space, index)) {}

    std::uint64_t next_u64() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const Philox2x64Block b = philox2x64(key_, counter_++, stream_);
        spare_ = b.x1;
        have_spare_ = true;
        return b.x0;
    }

    // Uniform on (0, 1], 53-bit dyadic. Never returns 0, so 1/V is safe.
    double next_u01() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Uniform dyadic rational on (0, 1] with the given mantissa width
    // (1..128). This is the exact-mode draw.
    Rational next_dyadic(unsigned bits) {
        if (bits == 0 || bits > 128)
            throw std::invalid_argument("rng: dyadic precision must be 1..128 bits");
        BigInt m;
        if (bits <= 64) {
            m = BigInt(static_cast<unsigned long>(next_u64() >> (64 - bits)));
        } else {
            const std::uint64_t hi = next_u64() >> (128 - bits);
            const std::uint64_t lo = next_u64();
            m = BigInt(static_cast<unsigned long>(hi));
            m <<= 64;
            m += BigInt(static_cast<unsigned long>(lo));
        }
        m += 1;  // (0,1]: mantissa in [1, 2^bits]
        return dyadic(m, bits);
    }

    // Jump to an absolute block position (used by tests; pipelines just
    // allocate one stream per replication instead of splitting counters).
    void seek(std::uint64_t block) {
        counter_ = block;
        have_spare_ = false;
    }

    std::uint64_t stream() const { return stream_; }

private:
    std::uint64_t key_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::uint64_t spare_ = 0;
    bool have_spare_ = false;
};

}  // namespace opplab
