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

#include "adlm/random.h"

namespace adlm {
namespace {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace

std::string_view SubstreamName(Substream stream) {
  switch (stream) {
    case Substream::kRelevanceNoise:
      return "relevance-noise";
    case Substream::kFeatureNoise:
      return "feature-noise";
    case Substream::kBiasNoise:
      return "bias-noise";
    case Substream::kCoefficientNoise:
      return "coefficient-noise";
    case Substream::kShuffle:
      return "shuffle";
    case Substream::kInit:
      return "init";
    case Substream::kSynthetic:
      return "synthetic";
    case Substream::kAudit:
      return "audit";
  }
  return "unknown";
}

uint64_t Mix64(uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

CounterRng::CounterRng(uint64_t seed, Substream stream, uint64_t lane)
    : stream_id_((static_cast<uint64_t>(stream) << 32) ^ lane) {
  key_ = Mix64(Mix64(seed + kGolden) ^ Mix64(stream_id_ * kGolden + 1));
}

CounterRng::result_type CounterRng::At(uint64_t counter) const {
  // Two rounds so that neighbouring keys do not give correlated streams.
  return Mix64(Mix64(key_ + counter * kGolden) ^ key_);
}

double CounterRng::UniformOpenFromBits(uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::UniformOpen() { return UniformOpenFromBits((*this)()); }

uint64_t UniformBelow(CounterRng& rng, uint64_t bound) {
  // Reject the top partial block so every residue is equally likely.
  const uint64_t limit = CounterRng::max() - CounterRng::max() % bound;
  uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % bound;
}

}  // namespace adlm
