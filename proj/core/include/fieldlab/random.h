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
#ifndef FIELDLAB_RANDOM_H
#define FIELDLAB_RANDOM_H

#include <cstdint>
#include <limits>

namespace fieldlab
{

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x);

/// Key of the substream `index` derived from `seed`. Used for per-round and
/// per-trial streams: substream_key(session_seed, round_index).
std::uint64_t substream_key(std::uint64_t seed, std::uint64_t index);

/**
 * Counter-based 64-bit generator.
 *
 * The n-th output of a stream with key k is mix64(k + n * 0x9E3779B97F4A7C15),
 * so a stream is fully described by (key, counter) and produces the same
 * sequence on every platform. Streams are split by hashing the parent key with
 * a stream id; splitting does not advance the parent.
 *
 * All derived draws (uniform reals, bounded integers) are implemented here
 * rather than through <random> distributions, whose algorithms differ between
 * standard library implementations.
 */
class CounterRng
{
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t seed = 0)
        : m_key(mix64(seed))
    {
    }

    static constexpr result_type min()
    {
        return 0;
    }
    static constexpr result_type max()
    {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()();

    /// Independent child stream; the parent is left untouched.
    CounterRng split(std::uint64_t stream_id) const;

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound);

    std::uint64_t key() const
    {
        return m_key;
    }
    std::uint64_t counter() const
    {
        return m_counter;
    }

    friend bool operator==(const CounterRng&, const CounterRng&) = default;

private:
    struct FromKey {
    };
    CounterRng(FromKey, std::uint64_t key)
        : m_key(key)
    {
    }

    std::uint64_t m_key;
    std::uint64_t m_counter = 0;
};

} // namespace fieldlab

#endif // FIELDLAB_RANDOM_H
