#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace artemis {

uint64_t splitmix64(uint64_t x);

// Combine a base seed with a stream/epoch index into a fresh engine seed.
uint64_t mix_seed(uint64_t seed, uint64_t stream);

// Deterministic random source. Wraps std::mt19937_64 but supplies its own
// distribution transforms: the standard library's distributions keep hidden
// state and are implementation-defined, which would break checkpoint/resume
// equivalence. Everything here is a pure function of the engine state.
class Rng {
public:
    Rng() : engine_(0) {}
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform();

    // Uniform integer in [0, n), n >= 1.
    uint64_t uniform_int(uint64_t n);

    // One N(0,1) draw (Box-Muller, spare discarded so no hidden state).
    double normal();

    void fill_normal(float* dst, size_t n, float mean = 0.0f, float stddev = 1.0f);
    void fill_uniform(float* dst, size_t n, float lo, float hi);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Engine state as text, for checkpoints.
    std::string serialize() const;
    void deserialize(const std::string& s);

private:
    std::mt19937_64 engine_;
};

} // namespace artemis
