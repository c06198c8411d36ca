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

#include "adlm/checkpoint.h"

#include <utility>
#include <vector>

#include "absl/strings/str_cat.h"
#include "adlm/serialize.h"
#include "json.hpp"

namespace adlm {
namespace {

constexpr std::string_view kMagic(kCheckpointMagic, 8);

absl::Status CheckTensor(const Tensor& got, const Tensor& want,
                         const std::string& what, const std::string& source) {
  if (got.shape() == want.shape()) return absl::OkStatus();
  return absl::DataLossError(absl::StrCat(
      source, ": ", what, " has shape ", ShapeToString(got.shape()),
      ", expected ", ShapeToString(want.shape())));
}

}  // namespace

std::string EncodeCheckpoint(const Network& net, uint64_t seed,
                             const std::string& metadata_json) {
  nlohmann::json header;
  header["input_shape"] = net.input_shape();
  std::vector<std::string> layers;
  for (const Layer& layer : net.layers()) {
    layers.push_back(LayerSpecToString(layer.spec));
  }
  header["layers"] = layers;
  header["metadata"] = nlohmann::json::parse(metadata_json, nullptr, false);
  if (header["metadata"].is_discarded()) header["metadata"] = nullptr;
  BinaryWriter w;
  w.Raw(kMagic);
  w.U32(kCheckpointVersion);
  w.U64(seed);
  w.String(header.dump());
  for (const Layer& layer : net.layers()) {
    w.WriteTensor(layer.weights);
    w.WriteTensor(layer.bias);
    w.WriteTensor(layer.bias_offset);
    w.WriteTensor(layer.lrn_min);
    w.WriteTensor(layer.lrn_max);
  }
  return w.data();
}

absl::StatusOr<Checkpoint> DecodeCheckpoint(std::string_view bytes,
                                            const std::string& source) {
  BinaryReader r(bytes, source);
  if (absl::Status s = r.Expect(kMagic); !s.ok()) return s;
  auto version = r.U32();
  if (!version.ok()) return version.status();
  if (*version != kCheckpointVersion) {
    return absl::InvalidArgumentError(
        absl::StrCat(source, ": unsupported checkpoint version ", *version));
  }
  auto seed = r.U64();
  if (!seed.ok()) return seed.status();
  auto header_text = r.String();
  if (!header_text.ok()) return header_text.status();
  nlohmann::json header = nlohmann::json::parse(*header_text, nullptr, false);
  if (header.is_discarded() || !header.is_object() ||
      !header.contains("input_shape") || !header.contains("layers")) {
    return absl::DataLossError(absl::StrCat(source, ": corrupt header"));
  }
  Shape input_shape;
  std::vector<LayerSpec> specs;
  try {
    input_shape = header["input_shape"].get<Shape>();
    for (const auto& text : header["layers"]) {
      auto spec = ParseLayerSpec(text.get<std::string>());
      if (!spec.ok()) return spec.status();
      specs.push_back(*spec);
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::DataLossError(absl::StrCat(source, ": ", e.what()));
  }
  auto net = Network::Create(input_shape, std::move(specs));
  if (!net.ok()) return net.status();
  for (size_t i = 0; i < net->layers().size(); ++i) {
    Layer& layer = net->layers()[i];
    Tensor* slots[] = {&layer.weights, &layer.bias, &layer.bias_offset,
                       &layer.lrn_min, &layer.lrn_max};
    const char* names[] = {"weights", "bias", "bias_offset", "lrn_min",
                           "lrn_max"};
    for (int k = 0; k < 5; ++k) {
      auto t = r.ReadTensor();
      if (!t.ok()) return t.status();
      const std::string what = absl::StrCat("layer ", i, " ", names[k]);
      if (k < 2) {
        if (absl::Status s = CheckTensor(*t, *slots[k], what, source);
            !s.ok()) {
          return s;
        }
      } else if (!t->empty()) {
        const Shape& want = layer.output_shape;
        if (NumElements(t->shape()) != NumElements(want)) {
          return absl::DataLossError(
              absl::StrCat(source, ": ", what, " does not match the layer"));
        }
      }
      *slots[k] = *std::move(t);
    }
  }
  if (!r.AtEnd()) {
    return absl::DataLossError(
        absl::StrCat(source, ": trailing bytes at offset ", r.offset()));
  }
  const nlohmann::json& meta = header.value("metadata", nlohmann::json());
  return Checkpoint{*std::move(net), *seed,
                    meta.is_null() ? std::string("{}") : meta.dump()};
}

absl::Status SaveCheckpoint(const Network& net, uint64_t seed,
                            const std::string& metadata_json,
                            const std::string& path) {
  return WriteFileAtomically(path, EncodeCheckpoint(net, seed, metadata_json));
}

absl::StatusOr<Checkpoint> LoadCheckpoint(const std::string& path) {
  auto bytes = ReadFileBytes(path);
  if (!bytes.ok()) return bytes.status();
  return DecodeCheckpoint(*bytes, path);
}

}  // namespace adlm
