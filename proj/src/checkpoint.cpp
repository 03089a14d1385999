// Copyright 2026 The Leap Authors
// SPDX-License-Identifier: Apache-2.0

#include "leap/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace leap {

namespace {

constexpr std::array<char, 8> kMagic = {'L', 'E', 'A', 'P', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::ifstream& in, const std::string& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw LeapError("checkpoint '" + path + "' is truncated");
  return v;
}

}  // namespace

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LeapError("cannot write checkpoint '" + path + "'");
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.method));
  put<std::uint64_t>(out, ckpt.seed);
  put<std::uint64_t>(out, ckpt.meta_step);
  put<std::uint64_t>(out, ckpt.config_hash);
  put<std::uint64_t>(out, ckpt.theta0.size());
  for (double v : ckpt.theta0) put<double>(out, v);
  if (!out) throw LeapError("failed writing checkpoint '" + path + "'");
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LeapError("cannot read checkpoint '" + path + "'");
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw LeapError("'" + path + "' is not a checkpoint file");
  const auto version = take<std::uint32_t>(in, path);
  if (version != kCheckpointVersion)
    throw LeapError("checkpoint '" + path + "' has unsupported version " + std::to_string(version));
  Checkpoint c;
  const auto method = take<std::uint32_t>(in, path);
  if (method > static_cast<std::uint32_t>(MetaMethod::none))
    throw LeapError("checkpoint '" + path + "' names an unknown method");
  c.method = static_cast<MetaMethod>(method);
  c.seed = take<std::uint64_t>(in, path);
  c.meta_step = take<std::uint64_t>(in, path);
  c.config_hash = take<std::uint64_t>(in, path);
  const auto n = take<std::uint64_t>(in, path);
  if (n > (1ULL << 32)) throw LeapError("checkpoint '" + path + "' has an implausible size");
  c.theta0.resize(n);
  for (auto& v : c.theta0) v = take<double>(in, path);
  if (in.peek() != std::ifstream::traits_type::eof())
    throw LeapError("checkpoint '" + path + "' has trailing bytes");
  return c;
}

}  // namespace leap
