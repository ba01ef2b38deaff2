#include "gaussperc/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gaussperc/error.hpp"

namespace gaussperc {
namespace {

constexpr char kMagic[4] = {'G', 'P', 'F', '1'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw ValidationError("gpf", "truncated GPF1 container");
  }
  std::size_t pos() const { return pos_; }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_field(const GridField& field) {
  const Grid& g = field.grid();
  std::string out(kMagic, 4);
  out.reserve(4 + 4 + 16 * g.dim() + 8 + 8 * g.size());
  put_u32(out, static_cast<std::uint32_t>(g.dim()));
  for (int a = 0; a < g.dim(); ++a) put_u64(out, static_cast<std::uint64_t>(g.extent(a)));
  put_f64(out, g.spacing());
  for (int a = 0; a < g.dim(); ++a) put_f64(out, g.origin()[a]);
  for (double v : field.values()) put_f64(out, v);
  return out;
}

GridField decode_field(const std::string& bytes, FieldKind kind, std::int64_t block_cells) {
  Reader r(bytes);
  r.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw ValidationError("gpf", "bad magic, expected GPF1");
  r.skip(4);
  const auto dim = static_cast<int>(r.u32());
  if (dim != 2 && dim != 3) throw ValidationError("gpf", "unsupported dimension");
  Index extent{1, 1, 1};
  for (int a = 0; a < dim; ++a) extent[a] = static_cast<std::int64_t>(r.u64());
  const double spacing = r.f64();
  Point origin{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) origin[a] = r.f64();
  Grid grid(dim, extent, spacing, origin);
  if (bytes.size() - r.pos() != 8 * grid.size()) throw ValidationError("gpf", "payload length does not match extents");
  std::vector<double> values(grid.size());
  for (double& v : values) v = r.f64();
  return GridField(grid, std::move(values), kind, block_cells);
}

nlohmann::ordered_json field_sidecar(const GridField& field, const std::string& data_file) {
  const Grid& g = field.grid();
  nlohmann::ordered_json j;
  j["format"] = "GPF1";
  j["data"] = data_file;
  j["dim"] = g.dim();
  j["extent"] = nlohmann::ordered_json::array();
  j["origin"] = nlohmann::ordered_json::array();
  for (int a = 0; a < g.dim(); ++a) {
    j["extent"].push_back(g.extent(a));
    j["origin"].push_back(g.origin()[a]);
  }
  j["spacing"] = g.spacing();
  j["kind"] = std::string(to_string(field.kind()));
  j["block_cells"] = field.block_cells();
  j["dtype"] = "float64";
  j["byte_order"] = "little";
  j["layout"] = "row-major, axis 0 slowest";
  return j;
}

std::pair<std::filesystem::path, std::filesystem::path> write_field(const GridField& field,
                                                                    const std::filesystem::path& stem) {
  std::filesystem::path gpf = stem;
  gpf += ".gpf";
  std::filesystem::path json = stem;
  json += ".json";
  {
    std::ofstream out(gpf, std::ios::binary);
    const std::string bytes = encode_field(field);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed to write " + gpf.string());
  }
  {
    std::ofstream out(json, std::ios::binary);
    out << field_sidecar(field, gpf.filename().string()).dump(2) << '\n';
    if (!out) throw std::runtime_error("failed to write " + json.string());
  }
  return {gpf, json};
}

GridField read_field(const std::filesystem::path& gpf_path) {
  std::ifstream in(gpf_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + gpf_path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  FieldKind kind = FieldKind::smooth;
  std::int64_t block = 1;
  std::filesystem::path sidecar = gpf_path;
  sidecar.replace_extension(".json");
  if (std::filesystem::exists(sidecar)) {
    std::ifstream sj(sidecar);
    const auto meta = nlohmann::json::parse(sj);
    kind = field_kind_from_string(meta.at("kind").get<std::string>());
    block = meta.value("block_cells", std::int64_t{1});
  }
  return decode_field(buf.str(), kind, block);
}

}  // namespace gaussperc
