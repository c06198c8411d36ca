// Copyright 2026 The AdLM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ADLM_RANDOM_H_
#define ADLM_RANDOM_H_

#include <cstdint>
#include <limits>
#include <string_view>

namespace adlm {

// Named substreams. Every random consumer draws from its own substream so it
// can be reproduced in isolation from the run seed alone.
enum class Substream : uint64_t {
  kRelevanceNoise = 1,
  kFeatureNoise = 2,
  kBiasNoise = 3,
  kCoefficientNoise = 4,
  kShuffle = 5,
  kInit = 6,
  kSynthetic = 7,
  kAudit = 8,
};

std::string_view SubstreamName(Substream stream);

// SplitMix64 finalizer; a bijection on 64-bit words.
uint64_t Mix64(uint64_t x);

// Counter-based generator: the i-th output is a pure function of
// (seed, substream, lane, i). Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = uint64_t;

  CounterRng(uint64_t seed, Substream stream, uint64_t lane = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return At(counter_++); }
  // Output at an absolute counter position; does not advance.
  result_type At(uint64_t counter) const;

  // Uniform on the open interval (0, 1), 53-bit resolution.
  double UniformOpen();
  static double UniformOpenFromBits(uint64_t bits);

  uint64_t counter() const { return counter_; }
  void Seek(uint64_t counter) { counter_ = counter; }
  uint64_t key() const { return key_; }
  // Stable identifier of (stream, lane) recorded alongside noisy outputs.
  uint64_t stream_id() const { return stream_id_; }

 private:
  uint64_t key_;
  uint64_t stream_id_;
  uint64_t counter_ = 0;
};

// Unbiased integer in [0, bound) by rejection; bound must be positive.
uint64_t UniformBelow(CounterRng& rng, uint64_t bound);

}  // namespace adlm

#endif  // ADLM_RANDOM_H_
