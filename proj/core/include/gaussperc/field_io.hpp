#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "gaussperc/grid.hpp"

namespace gaussperc {

// GPF1 container, all little-endian:
//   "GPF1" | u32 dim | i64 extent[dim] | f64 spacing | f64 origin[dim] | f64 values[prod(extent)]
// Values are row-major with axis 0 slowest. A JSON sidecar mirrors the
// header and adds the field kind and block size.

std::string encode_field(const GridField& field);
GridField decode_field(const std::string& bytes, FieldKind kind = FieldKind::smooth, std::int64_t block_cells = 1);

nlohmann::ordered_json field_sidecar(const GridField& field, const std::string& data_file);

/// Writes `<stem>.gpf` and `<stem>.json`; returns the two paths.
std::pair<std::filesystem::path, std::filesystem::path> write_field(const GridField& field,
                                                                    const std::filesystem::path& stem);

/// Reads a .gpf file; kind and block size come from the sidecar when present.
GridField read_field(const std::filesystem::path& gpf_path);

}  // namespace gaussperc
