// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "leap/common.hpp"
#include "leap/meta.hpp"

namespace leap {

/// Binary layout, all integers and doubles little-endian:
///
///   offset  size  field
///   0       8     magic "LEAPCKPT"
///   8       4     u32 format version (1)
///   12      4     u32 method (MetaMethod ordinal)
///   16      8     u64 experiment seed
///   24      8     u64 meta steps taken
///   32      8     u64 config hash
///   40      8     u64 parameter count n
///   48      8n    f64 parameters
struct Checkpoint {
  MetaMethod method = MetaMethod::leap;
  std::uint64_t seed = 0;
  std::uint64_t meta_step = 0;
  std::uint64_t config_hash = 0;
  ParamVector theta0;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);

/// Throws LeapError on a missing file, bad magic, unknown version or a
/// truncated payload.
Checkpoint read_checkpoint(const std::string& path);

}  // namespace leap
