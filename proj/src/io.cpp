#include "forest/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "forest/error.hpp"

namespace forest {
namespace {

// Scalar PLY property types we can read. Lists are rejected: a vertex
// element has no use for them and skipping binary lists needs per-row
// bookkeeping this reader does not carry.
enum class PlyType { I8, U8, I16, U16, I32, U32, F32, F64 };

std::size_t type_size(PlyType t) {
  switch (t) {
    case PlyType::I8:
    case PlyType::U8: return 1;
    case PlyType::I16:
    case PlyType::U16: return 2;
    case PlyType::I32:
    case PlyType::U32:
    case PlyType::F32: return 4;
    case PlyType::F64: return 8;
  }
  return 0;
}

PlyType parse_type(const std::string& name) {
  if (name == "char" || name == "int8") return PlyType::I8;
  if (name == "uchar" || name == "uint8") return PlyType::U8;
  if (name == "short" || name == "int16") return PlyType::I16;
  if (name == "ushort" || name == "uint16") return PlyType::U16;
  if (name == "int" || name == "int32") return PlyType::I32;
  if (name == "uint" || name == "uint32") return PlyType::U32;
  if (name == "float" || name == "float32") return PlyType::F32;
  if (name == "double" || name == "float64") return PlyType::F64;
  throw MalformedHeader("unsupported ply property type: " + name);
}

struct PlyProperty {
  std::string name;
  PlyType type;
};

struct PlyHeader {
  bool binary = false;
  std::size_t vertex_count = 0;
  std::vector<PlyProperty> properties;
  std::size_t body_offset = 0;  // bytes from file start to first vertex
};

std::string chomp(std::string line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) {
    line.pop_back();
  }
  return line;
}

PlyHeader parse_ply_header(std::istream& in) {
  PlyHeader header;
  std::string line;
  if (!std::getline(in, line) || chomp(line) != "ply") {
    throw MalformedHeader("missing ply magic line");
  }
  bool have_format = false;
  bool in_vertex = false;
  bool seen_vertex = false;
  while (std::getline(in, line)) {
    line = chomp(line);
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "comment" || word == "obj_info" || word.empty()) {
      continue;
    }
    if (word == "format") {
      std::string kind, version;
      ls >> kind >> version;
      if (kind == "ascii") {
        header.binary = false;
      } else if (kind == "binary_little_endian") {
        header.binary = true;
      } else {
        throw MalformedHeader("unsupported ply format: " + kind);
      }
      have_format = true;
    } else if (word == "element") {
      std::string name;
      long long count = -1;
      ls >> name >> count;
      if (ls.fail() || count < 0) {
        throw MalformedHeader("bad element line: " + line);
      }
      if (name == "vertex") {
        header.vertex_count = static_cast<std::size_t>(count);
        in_vertex = true;
        seen_vertex = true;
      } else {
        if (!seen_vertex && count > 0) {
          throw MalformedHeader("element '" + name + "' precedes vertex data");
        }
        in_vertex = false;
      }
    } else if (word == "property") {
      if (!in_vertex) continue;
      std::string type_name;
      ls >> type_name;
      if (type_name == "list") {
        throw MalformedHeader("list property on vertex element");
      }
      PlyProperty prop;
      prop.type = parse_type(type_name);
      ls >> prop.name;
      if (ls.fail() || prop.name.empty()) {
        throw MalformedHeader("bad property line: " + line);
      }
      header.properties.push_back(prop);
    } else if (word == "end_header") {
      if (!have_format || !seen_vertex) {
        throw MalformedHeader("ply header ended before format/vertex element");
      }
      header.body_offset = static_cast<std::size_t>(in.tellg());
      return header;
    } else {
      throw MalformedHeader("unrecognized header line: " + line);
    }
  }
  throw MalformedHeader("ply header has no end_header");
}

double decode_scalar(const unsigned char* bytes, PlyType t) {
  auto le = [bytes](std::size_t n, unsigned char* out) {
    std::memcpy(out, bytes, n);
    if constexpr (std::endian::native == std::endian::big) {
      for (std::size_t i = 0; i < n / 2; ++i) std::swap(out[i], out[n - 1 - i]);
    }
  };
  unsigned char buf[8];
  switch (t) {
    case PlyType::I8: return static_cast<double>(static_cast<std::int8_t>(bytes[0]));
    case PlyType::U8: return static_cast<double>(bytes[0]);
    case PlyType::I16: { std::int16_t v; le(2, buf); std::memcpy(&v, buf, 2); return v; }
    case PlyType::U16: { std::uint16_t v; le(2, buf); std::memcpy(&v, buf, 2); return v; }
    case PlyType::I32: { std::int32_t v; le(4, buf); std::memcpy(&v, buf, 4); return v; }
    case PlyType::U32: { std::uint32_t v; le(4, buf); std::memcpy(&v, buf, 4); return v; }
    case PlyType::F32: { float v; le(4, buf); std::memcpy(&v, buf, 4); return v; }
    case PlyType::F64: { double v; le(8, buf); std::memcpy(&v, buf, 8); return v; }
  }
  return 0.0;
}

void encode_f64(double v, std::string& out) {
  unsigned char buf[8];
  std::memcpy(buf, &v, 8);
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < 4; ++i) std::swap(buf[i], buf[7 - i]);
  }
  out.append(reinterpret_cast<const char*>(buf), 8);
}

void encode_u32(std::uint32_t v, std::string& out) {
  unsigned char buf[4];
  std::memcpy(buf, &v, 4);
  if constexpr (std::endian::native == std::endian::big) {
    std::swap(buf[0], buf[3]);
    std::swap(buf[1], buf[2]);
  }
  out.append(reinterpret_cast<const char*>(buf), 4);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void apply_named_value(Point3& p, const std::string& name, double value) {
  if (name == "x") {
    p.x = value;
  } else if (name == "y") {
    p.y = value;
  } else if (name == "z") {
    p.z = value;
  } else if (name == "intensity") {
    p.intensity = value;
  } else if (name == "semantic") {
    p.semantic = label_from_code(static_cast<int>(value));
  } else if (name == "instance") {
    std::uint32_t id = static_cast<std::uint32_t>(value);
    if (id != kNoInstance) p.instance = id;
  }
  // Anything else is an unknown property and is dropped.
}

void check_finite(const PointCloud& cloud) {
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Point3& p = cloud.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw NonFiniteCoordinate(
          i, "non-finite coordinate at point " + std::to_string(i));
    }
  }
}

PointCloud read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path);
  PlyHeader header = parse_ply_header(in);

  bool have_x = false, have_y = false, have_z = false;
  for (const auto& prop : header.properties) {
    have_x |= prop.name == "x";
    have_y |= prop.name == "y";
    have_z |= prop.name == "z";
  }
  if (!have_x || !have_y || !have_z) {
    throw MalformedHeader("ply vertex element lacks x/y/z properties");
  }

  PointCloud cloud;
  cloud.points.resize(header.vertex_count);

  if (header.binary) {
    std::size_t row_size = 0;
    for (const auto& prop : header.properties) row_size += type_size(prop.type);
    std::vector<unsigned char> row(row_size);
    for (std::size_t i = 0; i < header.vertex_count; ++i) {
      in.read(reinterpret_cast<char*>(row.data()),
              static_cast<std::streamsize>(row_size));
      if (in.gcount() != static_cast<std::streamsize>(row_size)) {
        throw IoFailure("truncated ply body in " + path);
      }
      std::size_t off = 0;
      for (const auto& prop : header.properties) {
        apply_named_value(cloud.points[i], prop.name,
                          decode_scalar(row.data() + off, prop.type));
        off += type_size(prop.type);
      }
    }
  } else {
    std::string line;
    for (std::size_t i = 0; i < header.vertex_count; ++i) {
      if (!std::getline(in, line)) {
        throw IoFailure("truncated ply body in " + path);
      }
      std::istringstream ls(chomp(line));
      for (const auto& prop : header.properties) {
        double value;
        ls >> value;
        if (ls.fail()) {
          // Retry the token as text so nan/inf spellings land in doubles
          // and the finite check below reports the right index.
          ls.clear();
          std::string tok;
          ls >> tok;
          if (tok.empty()) throw IoFailure("truncated ply row in " + path);
          char* end = nullptr;
          value = std::strtod(tok.c_str(), &end);
          if (end == tok.c_str()) {
            throw IoFailure("bad numeric value '" + tok + "' in " + path);
          }
        }
        apply_named_value(cloud.points[i], prop.name, value);
      }
    }
  }
  check_finite(cloud);
  return cloud;
}

PointCloud read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw MalformedHeader("empty csv " + path);
  std::vector<std::string> columns;
  {
    std::istringstream hs(chomp(line));
    std::string field;
    while (std::getline(hs, field, ',')) columns.push_back(field);
  }
  bool have_x = false, have_y = false, have_z = false;
  for (const auto& column : columns) {
    have_x |= column == "x";
    have_y |= column == "y";
    have_z |= column == "z";
  }
  if (!have_x || !have_y || !have_z) {
    throw MalformedHeader("csv header lacks x/y/z: " + line);
  }

  PointCloud cloud;
  while (std::getline(in, line)) {
    line = chomp(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    Point3 p;
    std::size_t col = 0;
    while (std::getline(ls, field, ',')) {
      if (col >= columns.size()) break;
      char* end = nullptr;
      double value = std::strtod(field.c_str(), &end);
      if (end == field.c_str()) {
        throw IoFailure("bad numeric value '" + field + "' in " + path);
      }
      apply_named_value(p, columns[col], value);
      ++col;
    }
    if (col < columns.size()) {
      throw MalformedHeader("csv row has " + std::to_string(col) +
                            " fields, expected " + std::to_string(columns.size()));
    }
    cloud.points.push_back(p);
  }
  check_finite(cloud);
  return cloud;
}

/// The file's channel set must be uniform: a column either exists for every
/// point or for none, otherwise there is no faithful row encoding. Instance
/// is the exception since id 0 already means "no instance" on disk.
Channels uniform_channels(const PointCloud& cloud) {
  Channels ch = cloud_channels(cloud);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Point3& p = cloud.points[i];
    if ((ch.intensity && !p.intensity) || (ch.semantic && !p.semantic)) {
      throw Error("point " + std::to_string(i) +
                  " is missing a channel present elsewhere in the cloud");
    }
  }
  return ch;
}

void write_ply(const PointCloud& cloud, const std::string& path, bool binary) {
  Channels ch = uniform_channels(cloud);
  std::ostringstream header;
  header << "ply\n";
  header << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n");
  header << "element vertex " << cloud.size() << "\n";
  header << "property double x\nproperty double y\nproperty double z\n";
  if (ch.intensity) header << "property double intensity\n";
  if (ch.semantic) header << "property uchar semantic\n";
  if (ch.instance) header << "property uint instance\n";
  header << "end_header\n";

  std::string body;
  if (binary) {
    std::size_t row = 24 + (ch.intensity ? 8 : 0) + (ch.semantic ? 1 : 0) +
                      (ch.instance ? 4 : 0);
    body.reserve(cloud.size() * row);
    for (const auto& p : cloud.points) {
      encode_f64(p.x, body);
      encode_f64(p.y, body);
      encode_f64(p.z, body);
      if (ch.intensity) encode_f64(*p.intensity, body);
      if (ch.semantic) {
        body.push_back(static_cast<char>(static_cast<std::uint8_t>(*p.semantic)));
      }
      if (ch.instance) encode_u32(p.instance.value_or(kNoInstance), body);
    }
  } else {
    std::ostringstream rows;
    for (const auto& p : cloud.points) {
      rows << format_double(p.x) << ' ' << format_double(p.y) << ' '
           << format_double(p.z);
      if (ch.intensity) rows << ' ' << format_double(*p.intensity);
      if (ch.semantic) rows << ' ' << static_cast<int>(*p.semantic);
      if (ch.instance) rows << ' ' << p.instance.value_or(kNoInstance);
      rows << '\n';
    }
    body = rows.str();
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  out << header.str() << body;
  if (!out) throw IoFailure("write failed: " + path);
}

void write_csv(const PointCloud& cloud, const std::string& path) {
  Channels ch = uniform_channels(cloud);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  out << "x,y,z";
  if (ch.intensity) out << ",intensity";
  if (ch.semantic) out << ",semantic";
  if (ch.instance) out << ",instance";
  out << "\n";
  for (const auto& p : cloud.points) {
    out << format_double(p.x) << ',' << format_double(p.y) << ','
        << format_double(p.z);
    if (ch.intensity) out << ',' << format_double(*p.intensity);
    if (ch.semantic) out << ',' << static_cast<int>(*p.semantic);
    if (ch.instance) out << ',' << p.instance.value_or(kNoInstance);
    out << "\n";
  }
  if (!out) throw IoFailure("write failed: " + path);
}

}  // namespace

CloudFormat detect_format(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path);
  std::string first, second;
  std::getline(in, first);
  std::getline(in, second);
  if (chomp(first) == "ply") {
    return chomp(second).find("binary_little_endian") != std::string::npos
               ? CloudFormat::PlyBinaryLe
               : CloudFormat::PlyAscii;
  }
  return CloudFormat::Csv;
}

PointCloud read_point_cloud(const std::string& path, CloudFormat format) {
  switch (format) {
    case CloudFormat::PlyAscii:
    case CloudFormat::PlyBinaryLe: {
      PointCloud cloud = read_ply(path);
      return cloud;
    }
    case CloudFormat::Csv: return read_csv(path);
  }
  throw Error("unreachable format");
}

PointCloud read_point_cloud(const std::string& path) {
  return read_point_cloud(path, detect_format(path));
}

void write_point_cloud(const PointCloud& cloud, const std::string& path,
                       CloudFormat format) {
  switch (format) {
    case CloudFormat::PlyAscii: write_ply(cloud, path, false); return;
    case CloudFormat::PlyBinaryLe: write_ply(cloud, path, true); return;
    case CloudFormat::Csv: write_csv(cloud, path); return;
  }
}

}  // namespace forest
