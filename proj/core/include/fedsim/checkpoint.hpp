#pragma once

#include <filesystem>

#include "fedsim/param_set.hpp"

namespace fedsim {

/// Parameter checkpoint container. Byte layout (docs/formats.md):
///   [0..8)   magic "FSIMCKPT"
///   [8..16)  uint64 LE header length H
///   [16..16+H) UTF-8 JSON header {schema, dtype, schema_hash, tensors}
///   then per tensor, in declared order, element_count * 8 bytes of
///   little-endian IEEE-754 binary64.
/// Round trip is bit-exact.
void write_param_checkpoint(const std::filesystem::path& path,
                            const ParameterSet& params);

ParameterSet read_param_checkpoint(const std::filesystem::path& path);

/// Serialized size in bytes of a checkpoint for this schema — the per-update
/// communication payload used by the cost model.
std::size_t checkpoint_byte_size(const ParameterSet& params);

}  // namespace fedsim
