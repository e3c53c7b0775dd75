#include "cgpnas/random.hpp"

#include <limits>
#include <sstream>
#include <stdexcept>

#include "cgpnas/error.hpp"

namespace cgpnas {

std::size_t RandomStream::uniform_below(std::size_t n) {
    if (n == 0) {
        throw std::invalid_argument("uniform_below: empty range");
    }
    const auto bound = static_cast<std::uint64_t>(n);
    // Reject the low remainder so that x % bound is exactly uniform.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t x = next();
        if (x >= threshold) {
            return static_cast<std::size_t>(x % bound);
        }
    }
}

double RandomStream::uniform01() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::string RandomStream::state() const {
    std::ostringstream out;
    out << engine_;
    return out.str();
}

RandomStream RandomStream::from_state(const std::string& text) {
    RandomStream stream;
    std::istringstream in(text);
    in >> stream.engine_;
    if (in.fail()) {
        throw CheckpointError("malformed random stream state");
    }
    return stream;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace cgpnas
