// Copyright (c) 2026, The TPN Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tpn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "tpn/error.hpp"

namespace tpn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void put_f32le(std::vector<char>& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

float get_f32le(const char* p) {
  uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  float v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace

void save_checkpoint(const fs::path& dir, const nn::ParamList& params, const json& meta) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create checkpoint directory: " + ec.message());

  json tensors = json::array();
  std::vector<char> blob;
  int64_t offset = 0;
  for (const auto& p : params) {
    tensors.push_back({{"name", p.name},
                       {"shape", p.tensor.shape()},
                       {"dtype", "float32"},
                       {"trainable", p.trainable},
                       {"offset", offset},
                       {"count", p.tensor.numel()}});
    for (double v : p.tensor.data()) put_f32le(blob, static_cast<float>(v));
    offset += p.tensor.numel();
  }
  json manifest = {{"format", "tpn-checkpoint"}, {"version", 1}, {"meta", meta},
                   {"tensors", tensors}};

  const fs::path mpath = dir / kManifestFile;
  std::ofstream m(mpath, std::ios::binary);
  if (!m) throw IoError(mpath.string(), "cannot open for writing");
  m << manifest.dump(2) << '\n';
  const fs::path bpath = dir / kBlobFile;
  std::ofstream b(bpath, std::ios::binary);
  if (!b) throw IoError(bpath.string(), "cannot open for writing");
  b.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!m || !b) throw IoError(dir.string(), "write failed");
}

json load_checkpoint(const fs::path& dir, nn::ParamList& params) {
  const fs::path mpath = dir / kManifestFile;
  const fs::path bpath = dir / kBlobFile;
  std::ifstream m(mpath);
  if (!m) throw IoError(mpath.string(), "checkpoint manifest not found");
  json manifest;
  try {
    manifest = json::parse(m);
  } catch (const json::exception& e) {
    throw IoError(mpath.string(), std::string("corrupt manifest: ") + e.what());
  }
  std::ifstream b(bpath, std::ios::binary);
  if (!b) throw IoError(bpath.string(), "checkpoint blob not found");
  std::vector<char> blob((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());

  std::map<std::string, const json*> by_name;
  for (const auto& t : manifest.at("tensors")) by_name[t.at("name").get<std::string>()] = &t;

  for (auto& p : params) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw DataError("checkpoint " + dir.string() + " lacks tensor " + p.name);
    const json& entry = *it->second;
    if (entry.at("shape").get<nn::Shape>() != p.tensor.shape()) {
      throw DataError("checkpoint tensor " + p.name + " has shape " +
                      nn::to_string(entry.at("shape").get<nn::Shape>()) + ", model expects " +
                      nn::to_string(p.tensor.shape()));
    }
    const auto offset = entry.at("offset").get<int64_t>();
    const auto count = entry.at("count").get<int64_t>();
    if (static_cast<int64_t>(blob.size()) < (offset + count) * 4) {
      throw IoError(bpath.string(), "blob truncated at tensor " + p.name);
    }
    auto values = p.tensor.data();
    for (int64_t i = 0; i < count; ++i) values[i] = get_f32le(blob.data() + (offset + i) * 4);
  }
  return manifest.value("meta", json::object());
}

}  // namespace tpn
