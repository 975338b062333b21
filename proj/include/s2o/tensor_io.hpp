// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "s2o/tensor.hpp"

namespace s2o {

/// S2OT binary tensor format, all little-endian:
///   bytes 0..3   magic "S2OT"
///   bytes 4..7   format version, u32 = 1
///   bytes 8..23  Z, H, L, D as u32
///   then Z*H*L*D IEEE-754 fp32 values, row-major [Z][H][L][D]
/// Round-trips are bit-exact.
void save_tensor_file(const Tensor4& t, const std::filesystem::path& path);
Tensor4 load_tensor_file(const std::filesystem::path& path);

}  // namespace s2o
