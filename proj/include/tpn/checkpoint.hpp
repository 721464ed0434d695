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

#pragma once

// On-disk parameter snapshot: `manifest.json` lists every tensor (name,
// shape, dtype, offset) and `params.bin` holds their values back to back as
// little-endian float32 in manifest order.

#include <filesystem>

#include <json.hpp>

#include "tpn/layers.hpp"

namespace tpn {

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kBlobFile = "params.bin";

void save_checkpoint(const std::filesystem::path& dir, const nn::ParamList& params,
                     const nlohmann::json& meta = nlohmann::json::object());

// Copies stored values into `params` (matched by name, shapes must agree) and
// returns the manifest's `meta` object. Missing files raise IoError; a name or
// shape mismatch raises DataError.
nlohmann::json load_checkpoint(const std::filesystem::path& dir, nn::ParamList& params);

}  // namespace tpn
