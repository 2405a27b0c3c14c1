#include "dpgcnn/rng.hpp"

namespace dpgcnn {

namespace {
__extension__ using u128 = unsigned __int128;
}  // namespace

std::uint64_t Rng::below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    const u128 wide = static_cast<u128>(next()) * bound;
    auto low = static_cast<std::uint64_t>(wide);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        u128 m = wide;
        while (low < threshold) {
            m = static_cast<u128>(next()) * bound;
            low = static_cast<std::uint64_t>(m);
        }
        return static_cast<std::uint64_t>(m >> 64);
    }
    return static_cast<std::uint64_t>(wide >> 64);
}

Rng Rng::stream(std::uint64_t stream_id) const noexcept {
    Rng mixer(state_ ^ (stream_id * 0xD1B54A32D192ED03ULL));
    mixer.next();
    return Rng(mixer.next());
}

}  // namespace dpgcnn
