#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace thermoscope {

using Rng = std::mt19937_64;

// Derives independent, reproducible generators from one seed. Each consumer
// asks for a named substream ("split", "style", "init", ...) so adding a new
// consumer never perturbs the draws of the existing ones.
class SeedStreams {
public:
    explicit SeedStreams(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t derive(std::string_view name) const;
    Rng stream(std::string_view name) const { return Rng(derive(name)); }

private:
    std::uint64_t seed_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::string_view name);

// Portable helpers: std distributions are implementation-defined, these are not.
double uniform01(Rng& rng);
std::size_t uniform_index(Rng& rng, std::size_t n);
double normal(Rng& rng);

template <class Container>
void shuffle(Container& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = uniform_index(rng, i);
        using std::swap;
        swap(items[i - 1], items[j]);
    }
}

}  // namespace thermoscope
