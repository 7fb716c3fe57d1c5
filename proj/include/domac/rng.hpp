#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace domac {

/// Reproducible random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. All derived quantities (uniform reals, integers, categorical
/// draws) are computed here rather than through <random> distributions, whose
/// algorithms are implementation-defined, so a seed produces the same stream on
/// every platform.
///
/// Independent streams are obtained with derive(): the master seed, a purpose
/// tag and two indices are mixed through SplitMix64 (tag hashed with 64-bit
/// FNV-1a) into the engine seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    static Rng derive(std::uint64_t master, std::string_view purpose, std::uint64_t a = 0,
                      std::uint64_t b = 0);

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n), unbiased.
    int uniform_int(int n);

    /// Index drawn with probability proportional to probs(i); probs must be non-negative.
    int categorical(const Eigen::Ref<const Eigen::VectorXd>& probs);

    /// Textual engine state, suitable for bit-exact restore.
    std::string state() const;
    void set_state(const std::string& text);

    friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);

}  // namespace domac
