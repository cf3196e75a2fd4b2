#include "cellprob/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <sstream>

#include "cellprob/error.hpp"

namespace cellprob {

namespace {

using nlohmann::json;

fs::path sidecar_of(const fs::path& raw) { return fs::path(raw.string() + ".json"); }

json grid_json(const Volume3D& v) {
  const Index3 s = v.shape();
  const Vec3 vs = v.voxel_size();
  return json{{"shape", {s.z, s.y, s.x}}, {"voxel_size_um", {vs.z, vs.y, vs.x}}};
}

void parse_grid(const json& j, Index3& shape, Vec3& vs) {
  try {
    const auto& s = j.at("shape");
    const auto& v = j.at("voxel_size_um");
    if (s.size() != 3 || v.size() != 3) throw Error(ErrorCode::Format, "sidecar shape/voxel_size_um need 3 entries");
    for (int d = 0; d < 3; ++d) {
      shape[d] = s.at(d).get<std::int64_t>();
      vs[d] = v.at(d).get<double>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, std::string("bad volume sidecar: ") + e.what());
  }
}

std::vector<float> read_raw(const fs::path& raw, std::size_t count) {
  std::ifstream in(raw, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + raw.string());
  std::vector<float> data(count);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(float))
    throw Error(ErrorCode::Format, raw.string() + ": file is shorter than the sidecar shape");
  in.peek();
  if (!in.eof()) throw Error(ErrorCode::Format, raw.string() + ": file is longer than the sidecar shape");
  if constexpr (std::endian::native == std::endian::big) {
    for (float& f : data) {
      auto u = std::bit_cast<std::uint32_t>(f);
      u = __builtin_bswap32(u);
      f = std::bit_cast<float>(u);
    }
  }
  return data;
}

void write_raw(const fs::path& raw, std::span<const float> data) {
  std::ofstream out(raw, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + raw.string());
  if constexpr (std::endian::native == std::endian::big) {
    for (float f : data) {
      const auto u = __builtin_bswap32(std::bit_cast<std::uint32_t>(f));
      out.write(reinterpret_cast<const char*>(&u), sizeof u);
    }
  } else {
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + raw.string());
}

Volume3D make_volume(Index3 shape, Vec3 vs, std::vector<float> data) {
  for (int d = 0; d < 3; ++d)
    if (shape[d] < 1) throw Error(ErrorCode::Format, "sidecar shape entries must be >= 1");
  return Volume3D(shape, vs, std::move(data));
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view s, std::size_t line) {
  s = trim(s);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorCode::Format, "line " + std::to_string(line) + ": cannot parse number '" + std::string(s) + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, std::string_view text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + p.string());
}

void write_volume(const fs::path& raw, const Volume3D& v) {
  write_raw(raw, v.data());
  write_text(sidecar_of(raw), grid_json(v).dump(2) + "\n");
}

Volume3D read_volume(const fs::path& raw) {
  json j;
  try {
    j = json::parse(read_text(sidecar_of(raw)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, std::string("bad volume sidecar: ") + e.what());
  }
  Index3 shape;
  Vec3 vs;
  parse_grid(j, shape, vs);
  if (shape.z < 1 || shape.y < 1 || shape.x < 1) throw Error(ErrorCode::Format, "sidecar shape entries must be >= 1");
  return make_volume(shape, vs, read_raw(raw, static_cast<std::size_t>(shape.product())));
}

void write_regressor_output(const fs::path& prefix, const RegressorOutput& out) {
  out.validate();
  const std::string p = prefix.string();
  // each map also gets its own sidecar so it can be read as a plain volume
  write_volume(p + "_dm.raw", out.dm);
  write_volume(p + "_ua.raw", out.aleatoric);
  write_volume(p + "_ue.raw", out.epistemic);
  json j = grid_json(out.dm);
  j["maps"] = {{"dm", fs::path(p + "_dm.raw").filename().string()},
               {"ua", fs::path(p + "_ua.raw").filename().string()},
               {"ue", fs::path(p + "_ue.raw").filename().string()}};
  write_text(p + ".json", j.dump(2) + "\n");
}

RegressorOutput read_regressor_output(const fs::path& prefix) {
  const std::string p = prefix.string();
  json j;
  try {
    j = json::parse(read_text(p + ".json"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, std::string("bad regressor sidecar: ") + e.what());
  }
  Index3 shape;
  Vec3 vs;
  parse_grid(j, shape, vs);
  const auto n = static_cast<std::size_t>(std::max<std::int64_t>(shape.product(), 0));
  RegressorOutput out{make_volume(shape, vs, read_raw(p + "_dm.raw", n)),
                      make_volume(shape, vs, read_raw(p + "_ua.raw", n)),
                      make_volume(shape, vs, read_raw(p + "_ue.raw", n))};
  out.validate();
  return out;
}

std::string coords_to_csv(const CoordSet& c) {
  c.validate();
  std::string s = "z_um,y_um,x_um";
  const bool p = !c.prob.empty();
  const bool v = !c.value.empty();
  if (p) s += ",p";
  if (v) s += ",dm_value";
  s += '\n';
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Vec3& q = c.points[i];
    s += format_double(q.z) + ',' + format_double(q.y) + ',' + format_double(q.x);
    if (p) s += ',' + format_double(c.prob[i]);
    if (v) s += ',' + format_double(c.value[i]);
    s += '\n';
  }
  return s;
}

CoordSet coords_from_csv(std::string_view text) {
  CoordSet out;
  std::size_t line_no = 0;
  int iz = -1, iy = -1, ix = -1, ip = -1, iv = -1;
  std::size_t columns = 0;
  bool header = true;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (header) {
      header = false;
      columns = cells.size();
      for (std::size_t k = 0; k < cells.size(); ++k) {
        const auto name = trim(cells[k]);
        const int ki = static_cast<int>(k);
        if (name == "z_um") iz = ki;
        else if (name == "y_um") iy = ki;
        else if (name == "x_um") ix = ki;
        else if (name == "p") ip = ki;
        else if (name == "dm_value") iv = ki;
      }
      if (iz < 0 || iy < 0 || ix < 0) throw Error(ErrorCode::Format, "coordinate CSV needs z_um,y_um,x_um columns");
      continue;
    }
    if (cells.size() != columns)
      throw Error(ErrorCode::Format, "line " + std::to_string(line_no) + ": expected " + std::to_string(columns) + " fields");
    out.points.push_back({parse_double(cells[static_cast<std::size_t>(iz)], line_no),
                          parse_double(cells[static_cast<std::size_t>(iy)], line_no),
                          parse_double(cells[static_cast<std::size_t>(ix)], line_no)});
    if (ip >= 0) out.prob.push_back(parse_double(cells[static_cast<std::size_t>(ip)], line_no));
    if (iv >= 0) out.value.push_back(parse_double(cells[static_cast<std::size_t>(iv)], line_no));
  }
  if (header) throw Error(ErrorCode::Format, "coordinate CSV is empty (missing header)");
  for (double p : out.prob)
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::Format, "probability outside [0, 1]");
  return out;
}

void write_coords(const fs::path& csv, const CoordSet& c) { write_text(csv, coords_to_csv(c)); }

CoordSet read_coords(const fs::path& csv) { return coords_from_csv(read_text(csv)); }

void write_feature_csv(const fs::path& csv, const FeatureMatrix& X, const std::vector<std::string>& names) {
  if (names.size() != X.cols()) throw Error(ErrorCode::DimensionMismatch, "one column name per feature is required");
  std::string s;
  for (std::size_t c = 0; c < names.size(); ++c) s += (c ? "," : "") + names[c];
  s += '\n';
  for (std::size_t r = 0; r < X.rows(); ++r) {
    for (std::size_t c = 0; c < X.cols(); ++c) {
      if (c) s += ',';
      s += format_double(X(r, c));
    }
    s += '\n';
  }
  write_text(csv, s);
}

std::string sha256_hex(std::span<const unsigned char> bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::Io, "SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string sha256_hex(std::string_view text) {
  return sha256_hex(std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

std::string sha256_file(const fs::path& p) { return sha256_hex(read_text(p)); }

}  // namespace cellprob
