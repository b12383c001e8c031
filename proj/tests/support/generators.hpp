#pragma once

#include <random>

#include "bftrand/message.hpp"

namespace gen {

using Rng = std::mt19937_64;

bftrand::Bytes bytes(Rng& rng, std::size_t max_len);
bftrand::Block32 block(Rng& rng);
bftrand::Digest digest(Rng& rng);
bftrand::Request request(Rng& rng);

/// A message of any kind with random fields. CT shares use small random integers.
bftrand::Message message(Rng& rng);

}  // namespace gen
