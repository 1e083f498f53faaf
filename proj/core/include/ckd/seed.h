// Copyright 2026 The ckd Authors.
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

#ifndef CKD_SEED_H_
#define CKD_SEED_H_

#include <cstdint>
#include <string_view>

namespace ckd {

// Deterministic child seed from a master seed, a purpose tag and an index.
// Stable across platforms (splitmix64 over FNV-1a of the tag).
std::uint64_t DeriveSeed(std::uint64_t master, std::string_view tag,
                         std::uint64_t index = 0);

}  // namespace ckd

#endif  // CKD_SEED_H_
