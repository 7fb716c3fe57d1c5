#include "domac/rng.hpp"

#include <sstream>

#include "domac/errors.hpp"

namespace domac {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Rng Rng::derive(std::uint64_t master, std::string_view purpose, std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = splitmix64(master);
    s = splitmix64(s ^ fnv1a64(purpose));
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ (b + 0x632be59bd9b4e019ULL));
    return Rng(s);
}

int Rng::uniform_int(int n) {
    if (n <= 0) throw ConfigError("uniform_int: n must be positive");
    const auto range = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return static_cast<int>(x % range);
}

int Rng::categorical(const Eigen::Ref<const Eigen::VectorXd>& probs) {
    if (probs.size() == 0) throw ConfigError("categorical: empty distribution");
    const double total = probs.sum();
    const double u = uniform() * total;
    double acc = 0.0;
    int last_positive = -1;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        if (probs(i) <= 0.0) continue;
        last_positive = static_cast<int>(i);
        acc += probs(i);
        if (u < acc) return last_positive;
    }
    if (last_positive < 0) throw NumericError("categorical: no positive mass");
    return last_positive;
}

std::string Rng::state() const {
    std::ostringstream out;
    out << engine_;
    return out.str();
}

void Rng::set_state(const std::string& text) {
    std::istringstream in(text);
    in >> engine_;
    if (in.fail()) throw CheckpointError("malformed RNG state");
}

}  // namespace domac
