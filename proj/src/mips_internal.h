//
// Copyright 2026 The Fast-MWEM Authors
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
//

#ifndef FASTMWEM_SRC_MIPS_INTERNAL_H_
#define FASTMWEM_SRC_MIPS_INTERNAL_H_

#include <bit>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "fastmwem/mips.h"

namespace fastmwem::internal {

// Little-endian primitive I/O, independent of host byte order.
inline void PutU64(std::ostream& out, uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 8);
}
inline void PutU32(std::ostream& out, uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 4);
}
inline void PutF64(std::ostream& out, double v) {
  PutU64(out, std::bit_cast<uint64_t>(v));
}

inline uint64_t GetU64(std::istream& in) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) {
    throw std::runtime_error("index file truncated");
  }
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}
inline uint32_t GetU32(std::istream& in) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4)) {
    throw std::runtime_error("index file truncated");
  }
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}
inline double GetF64(std::istream& in) {
  return std::bit_cast<double>(GetU64(in));
}

std::unique_ptr<MipsIndex> MakeFlatIndex(Matrix vectors,
                                         const IndexConfig& config);
std::unique_ptr<MipsIndex> MakeIvfIndex(Matrix vectors,
                                        const IndexConfig& config);
std::unique_ptr<MipsIndex> MakeHnswIndex(Matrix vectors,
                                         const IndexConfig& config);

// Payload readers; the common header (vectors, config) is already consumed.
std::unique_ptr<MipsIndex> LoadIvfPayload(Matrix vectors,
                                          const IndexConfig& config,
                                          std::istream& in);
std::unique_ptr<MipsIndex> LoadHnswPayload(Matrix vectors,
                                           const IndexConfig& config,
                                           std::istream& in);

// Sort (score desc, id asc) and keep the best k.
void KeepBest(std::vector<std::pair<double, size_t>>& scored, size_t k);

}  // namespace fastmwem::internal

#endif  // FASTMWEM_SRC_MIPS_INTERNAL_H_
