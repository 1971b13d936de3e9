#include "artemis/rng.hpp"

#include <cmath>
#include <sstream>

namespace artemis {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

uint64_t Rng::uniform_int(uint64_t n) {
    // Debiased modulo (bias < 2^-64 * n is irrelevant here, but cheap to avoid).
    uint64_t threshold = (0ULL - n) % n;
    for (;;) {
        uint64_t r = engine_();
        if (r >= threshold) return r % n;
    }
}

double Rng::normal() {
    // Box-Muller; regenerate u1 until nonzero so log() stays finite.
    double u1;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

void Rng::fill_normal(float* dst, size_t n, float mean, float stddev) {
    for (size_t i = 0; i + 1 < n; i += 2) {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        dst[i] = mean + stddev * static_cast<float>(r * std::cos(2.0 * M_PI * u2));
        dst[i + 1] = mean + stddev * static_cast<float>(r * std::sin(2.0 * M_PI * u2));
    }
    if (n % 2 != 0) dst[n - 1] = mean + stddev * static_cast<float>(normal());
}

void Rng::fill_uniform(float* dst, size_t n, float lo, float hi) {
    for (size_t i = 0; i < n; ++i)
        dst[i] = lo + (hi - lo) * static_cast<float>(uniform());
}

std::string Rng::serialize() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

void Rng::deserialize(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
}

} // namespace artemis
