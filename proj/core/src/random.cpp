/*
* Copyright (C) 2026 The fieldlab authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/
#include "fieldlab/random.h"

#include <cassert>

namespace fieldlab
{

namespace
{
__extension__ typedef unsigned __int128 uint128;
constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x)
{
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

std::uint64_t substream_key(std::uint64_t seed, std::uint64_t index)
{
    return mix64(mix64(seed) ^ mix64(index + golden_gamma));
}

CounterRng::result_type CounterRng::operator()()
{
    ++m_counter;
    return mix64(m_key + m_counter * golden_gamma);
}

CounterRng CounterRng::split(std::uint64_t stream_id) const
{
    return CounterRng(FromKey{}, substream_key(m_key, stream_id));
}

double CounterRng::uniform()
{
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

std::uint64_t CounterRng::below(std::uint64_t bound)
{
    assert(bound > 0);
    // Lemire's multiply-shift with rejection of the biased low range.
    auto x = (*this)();
    auto m = static_cast<uint128>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            x = (*this)();
            m = static_cast<uint128>(x) * bound;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

} // namespace fieldlab
