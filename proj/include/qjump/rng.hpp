#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace qjump {

// splitmix64, used to derive independent per-trajectory streams from
// (master seed, trajectory index)
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 1));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform on (0, 1]
    double uniform() {
        return 1.0 - (gen_() >> 11) * (1.0 / 9007199254740992.0);
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    // index weighted by w (weights need not be normalized)
    std::size_t categorical(const std::vector<double>& w) {
        double total = 0;
        for (double x : w) total += x;
        double u = uniform() * total;
        double acc = 0;
        for (std::size_t i = 0; i + 1 < w.size(); ++i) {
            acc += w[i];
            if (u <= acc) return i;
        }
        return w.empty() ? 0 : w.size() - 1;
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

}  // namespace qjump
