#include "treegraph/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace treegraph {

PointCloud PointCloud::subset(const std::vector<NodeId>& indices) const {
  PointCloud out;
  out.points.reserve(indices.size());
  for (const NodeId i : indices) out.points.push_back(points[i]);
  if (has_intensity())
    for (const NodeId i : indices) out.intensity.push_back(intensity[i]);
  return out;
}

namespace {

std::string lower_extension(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

bool parse_double(std::string_view s, double& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

// Splits on whitespace and commas.
std::vector<std::string_view> split_ws(std::string_view line) {
  const auto sep = [](char c) { return c == ',' || std::isspace(static_cast<unsigned char>(c)); };
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && sep(line[i])) ++i;
    const std::size_t b = i;
    while (i < line.size() && !sep(line[i])) ++i;
    if (i > b) out.push_back(line.substr(b, i - b));
  }
  return out;
}

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

void check_written(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

// ---------------------------------------------------------------- XYZ

PointCloud load_xyz(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  PointCloud cloud;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0].front() == '#') continue;
    if (tok.size() < 3) throw ParseError("expected x y z", lineno);
    Vec3 p;
    for (int c = 0; c < 3; ++c)
      if (!parse_double(tok[c], p[c]) || !std::isfinite(p[c]))
        throw ParseError("invalid coordinate '" + std::string(tok[c]) + "'", lineno);
    cloud.points.push_back(p);
  }
  if (cloud.empty()) throw ParseError("no points in " + path, std::max<std::size_t>(lineno, 1));
  return cloud;
}

void save_xyz(const PointCloud& cloud, const std::string& path) {
  auto out = open_out(path);
  std::string buf;
  for (const Vec3& p : cloud.points) {
    buf.clear();
    buf += format_double(p.x());
    buf += ' ';
    buf += format_double(p.y());
    buf += ' ';
    buf += format_double(p.z());
    buf += '\n';
    out << buf;
  }
  check_written(out, path);
}

// ---------------------------------------------------------------- PLY

struct PlyProperty {
  std::string name;
  std::string type;        // scalar type, or item type for lists
  std::string count_type;  // non-empty for list properties
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

std::size_t ply_type_size(const std::string& t, std::size_t line) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" || t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  throw ParseError("unknown PLY type '" + t + "'", line);
}

double read_binary_scalar(std::istream& in, const std::string& t, std::size_t record) {
  unsigned char b[8];
  const std::size_t n = ply_type_size(t, record);
  if (!in.read(reinterpret_cast<char*>(b), static_cast<std::streamsize>(n)))
    throw ParseError("truncated binary PLY body", record);
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + n);
  auto as = [&](auto v) {
    std::memcpy(&v, b, sizeof v);
    return static_cast<double>(v);
  };
  if (t == "char" || t == "int8") return as(std::int8_t{});
  if (t == "uchar" || t == "uint8") return as(std::uint8_t{});
  if (t == "short" || t == "int16") return as(std::int16_t{});
  if (t == "ushort" || t == "uint16") return as(std::uint16_t{});
  if (t == "int" || t == "int32") return as(std::int32_t{});
  if (t == "uint" || t == "uint32") return as(std::uint32_t{});
  if (t == "float" || t == "float32") return as(float{});
  return as(double{});
}

struct PlyData {
  std::vector<Vec3> vertices;
  std::vector<std::vector<std::uint32_t>> faces;
};

PlyData load_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) throw ParseError("unexpected end of PLY header", lineno + 1);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };
  next_line();
  if (line != "ply") throw ParseError("missing 'ply' magic", lineno);
  bool binary = false;
  std::vector<PlyElement> elements;
  for (;;) {
    next_line();
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "format") {
      if (tok.size() < 2) throw ParseError("malformed format line", lineno);
      if (tok[1] == "binary_little_endian") binary = true;
      else if (tok[1] != "ascii") throw ParseError("unsupported PLY format " + std::string(tok[1]), lineno);
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw ParseError("malformed element line", lineno);
      PlyElement e;
      e.name = tok[1];
      if (std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), e.count).ec != std::errc{})
        throw ParseError("invalid element count", lineno);
      elements.push_back(std::move(e));
    } else if (tok[0] == "property") {
      if (elements.empty()) throw ParseError("property before element", lineno);
      PlyProperty p;
      if (tok.size() == 5 && tok[1] == "list") {
        p.count_type = tok[2];
        p.type = tok[3];
        p.name = tok[4];
        ply_type_size(p.count_type, lineno);
      } else if (tok.size() == 3) {
        p.type = tok[1];
        p.name = tok[2];
      } else {
        throw ParseError("malformed property line", lineno);
      }
      ply_type_size(p.type, lineno);
      elements.back().props.push_back(std::move(p));
    } else {
      throw ParseError("unknown PLY header keyword " + std::string(tok[0]), lineno);
    }
  }

  PlyData data;
  for (const PlyElement& e : elements) {
    const bool is_vertex = e.name == "vertex";
    const bool is_face = e.name == "face";
    int ix = -1, iy = -1, iz = -1, ifaces = -1;
    for (int i = 0; i < static_cast<int>(e.props.size()); ++i) {
      const auto& p = e.props[i];
      if (p.count_type.empty()) {
        if (p.name == "x") ix = i;
        if (p.name == "y") iy = i;
        if (p.name == "z") iz = i;
      } else if (p.name == "vertex_indices" || p.name == "vertex_index") {
        ifaces = i;
      }
    }
    if (is_vertex) {
      if (ix < 0 || iy < 0 || iz < 0) throw ParseError("vertex element lacks x/y/z", lineno);
      for (const int i : {ix, iy, iz}) {
        const auto& t = e.props[i].type;
        if (t != "float" && t != "float32" && t != "double" && t != "float64")
          throw ParseError("vertex coordinates must be 32- or 64-bit floats", lineno);
      }
      data.vertices.reserve(e.count);
    }
    for (std::size_t rec = 0; rec < e.count; ++rec) {
      Vec3 v = Vec3::Zero();
      std::vector<std::uint32_t> face;
      if (binary) {
        const std::size_t recno = rec + 1;
        for (int i = 0; i < static_cast<int>(e.props.size()); ++i) {
          const auto& p = e.props[i];
          if (p.count_type.empty()) {
            const double val = read_binary_scalar(in, p.type, recno);
            if (i == ix) v.x() = val;
            if (i == iy) v.y() = val;
            if (i == iz) v.z() = val;
          } else {
            const auto cnt = static_cast<std::size_t>(read_binary_scalar(in, p.count_type, recno));
            for (std::size_t k = 0; k < cnt; ++k) {
              const double val = read_binary_scalar(in, p.type, recno);
              if (i == ifaces) face.push_back(static_cast<std::uint32_t>(val));
            }
          }
        }
        if (is_vertex && !v.allFinite()) throw ParseError("non-finite coordinate", recno);
      } else {
        next_line();
        const auto tok = split_ws(line);
        std::size_t t = 0;
        auto take = [&]() {
          double val;
          if (t >= tok.size() || !parse_double(tok[t], val))
            throw ParseError("malformed " + e.name + " record", lineno);
          ++t;
          return val;
        };
        for (int i = 0; i < static_cast<int>(e.props.size()); ++i) {
          const auto& p = e.props[i];
          if (p.count_type.empty()) {
            const double val = take();
            if (i == ix) v.x() = val;
            if (i == iy) v.y() = val;
            if (i == iz) v.z() = val;
          } else {
            const auto cnt = static_cast<std::size_t>(take());
            for (std::size_t k = 0; k < cnt; ++k) {
              const double val = take();
              if (i == ifaces) face.push_back(static_cast<std::uint32_t>(val));
            }
          }
        }
        if (is_vertex && !v.allFinite()) throw ParseError("non-finite coordinate", lineno);
      }
      if (is_vertex) data.vertices.push_back(v);
      if (is_face) data.faces.push_back(std::move(face));
    }
  }
  return data;
}

void write_ply_header(std::ostream& out, bool binary, std::size_t nv, const char* coord_type,
                      std::size_t nf) {
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  out << "element vertex " << nv << "\n";
  out << "property " << coord_type << " x\nproperty " << coord_type << " y\nproperty "
      << coord_type << " z\n";
  if (nf > 0) out << "element face " << nf << "\nproperty list uchar uint vertex_indices\n";
  out << "end_header\n";
}

template <typename T>
void put_le(std::ostream& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

void save_ply(const std::vector<Vec3>& verts,
              const std::vector<std::array<std::uint32_t, 3>>& tris, const std::string& path,
              const PlyWriteOptions& opts) {
  auto out = open_out(path, true);
  write_ply_header(out, opts.binary, verts.size(), opts.double_precision ? "double" : "float",
                   tris.size());
  if (opts.binary) {
    for (const Vec3& v : verts)
      for (int c = 0; c < 3; ++c) {
        if (opts.double_precision) put_le(out, v[c]);
        else put_le(out, static_cast<float>(v[c]));
      }
    for (const auto& t : tris) {
      put_le(out, std::uint8_t{3});
      for (const auto i : t) put_le(out, i);
    }
  } else {
    for (const Vec3& v : verts) {
      if (opts.double_precision)
        out << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z()) << '\n';
      else
        out << format_double(static_cast<float>(v.x())) << ' '
            << format_double(static_cast<float>(v.y())) << ' '
            << format_double(static_cast<float>(v.z())) << '\n';
    }
    for (const auto& t : tris) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
  check_written(out, path);
}

}  // namespace

CloudFormat cloud_format_for(const std::string& path) {
  const auto ext = lower_extension(path);
  if (ext == ".ply") return CloudFormat::Ply;
  if (ext == ".xyz" || ext == ".txt" || ext == ".asc" || ext == ".pts") return CloudFormat::Xyz;
  throw IoError("unrecognized point cloud extension for " + path);
}

MeshFormat mesh_format_for(const std::string& path) {
  const auto ext = lower_extension(path);
  if (ext == ".obj") return MeshFormat::Obj;
  if (ext == ".ply") return MeshFormat::Ply;
  throw IoError("unrecognized mesh extension for " + path);
}

PointCloud load_point_cloud(const std::string& path, CloudFormat format) {
  if (format == CloudFormat::Xyz) return load_xyz(path);
  PlyData d = load_ply(path);
  if (d.vertices.empty()) throw ParseError("no points in " + path, 1);
  PointCloud cloud;
  cloud.points = std::move(d.vertices);
  return cloud;
}

PointCloud load_point_cloud(const std::string& path) {
  return load_point_cloud(path, cloud_format_for(path));
}

void save_point_cloud(const PointCloud& cloud, const std::string& path, CloudFormat format,
                      const PlyWriteOptions& ply) {
  if (format == CloudFormat::Xyz) save_xyz(cloud, path);
  else save_ply(cloud.points, {}, path, ply);
}

// ---------------------------------------------------------------- skeleton JSON

nlohmann::json tree_record_to_json(const TreeRecord& rec) {
  using nlohmann::json;
  json j;
  j["tree_id"] = rec.tree_id;
  j["root"] = rec.skeleton.root;
  j["dbh_m"] = rec.dbh_m ? json(*rec.dbh_m) : json(nullptr);
  j["height_m"] = rec.height_m;
  j["volume_m3"] = rec.volume_m3;
  j["agb_kg"] = rec.agb_kg ? json(*rec.agb_kg) : json(nullptr);
  json nodes = json::array();
  for (std::uint32_t i = 0; i < rec.skeleton.size(); ++i) {
    const auto& n = rec.skeleton.nodes[i];
    nodes.push_back({{"id", i},
                     {"parent", n.parent == kNoNode ? json(nullptr) : json(n.parent)},
                     {"pos", {n.pos.x(), n.pos.y(), n.pos.z()}},
                     {"radius_m", n.radius},
                     {"freq", n.freq},
                     {"cluster_size", n.cluster_size}});
  }
  j["nodes"] = std::move(nodes);
  return j;
}

TreeRecord tree_record_from_json(const nlohmann::json& j) {
  TreeRecord rec;
  try {
    rec.tree_id = j.at("tree_id").get<int>();
    if (!j.at("dbh_m").is_null()) rec.dbh_m = j.at("dbh_m").get<double>();
    rec.height_m = j.at("height_m").get<double>();
    rec.volume_m3 = j.at("volume_m3").get<double>();
    if (!j.at("agb_kg").is_null()) rec.agb_kg = j.at("agb_kg").get<double>();
    const auto& nodes = j.at("nodes");
    rec.skeleton.nodes.resize(nodes.size());
    for (const auto& n : nodes) {
      const auto id = n.at("id").get<std::uint32_t>();
      if (id >= nodes.size()) throw SkeletonError("skeleton node id out of range");
      auto& out = rec.skeleton.nodes[id];
      out.parent = n.at("parent").is_null() ? kNoNode : n.at("parent").get<std::uint32_t>();
      const auto& pos = n.at("pos");
      if (pos.size() != 3) throw SkeletonError("node position must have 3 components");
      out.pos = Vec3(pos[0].get<double>(), pos[1].get<double>(), pos[2].get<double>());
      out.radius = n.at("radius_m").get<double>();
      out.freq = n.at("freq").get<std::uint32_t>();
      out.cluster_size = n.at("cluster_size").get<std::uint32_t>();
    }
    rec.skeleton.root = j.at("root").get<std::uint32_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid skeleton JSON: ") + e.what(), 1);
  }
  rec.skeleton.validate();
  return rec;
}

void write_json(const nlohmann::json& j, const std::string& path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  check_written(out, path);
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON in ") + path + ": " + e.what(), 1);
  }
}

void save_skeleton(const TreeRecord& rec, const std::string& path) {
  rec.skeleton.validate();
  write_json(tree_record_to_json(rec), path);
}

TreeRecord load_skeleton(const std::string& path) { return tree_record_from_json(read_json(path)); }

// ---------------------------------------------------------------- meshes

void save_mesh(const TriangleMesh& mesh, const std::string& path, MeshFormat format) {
  if (format == MeshFormat::Ply) {
    save_ply(mesh.vertices, mesh.triangles, path, {.binary = true, .double_precision = false});
    return;
  }
  auto out = open_out(path);
  for (const Vec3& v : mesh.vertices)
    out << "v " << format_double(v.x()) << ' ' << format_double(v.y()) << ' '
        << format_double(v.z()) << '\n';
  for (const auto& t : mesh.triangles)
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  check_written(out, path);
}

TriangleMesh load_mesh(const std::string& path, MeshFormat format) {
  TriangleMesh mesh;
  std::vector<std::vector<std::uint32_t>> faces;
  if (format == MeshFormat::Ply) {
    PlyData d = load_ply(path);
    mesh.vertices = std::move(d.vertices);
    faces = std::move(d.faces);
  } else {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto tok = split_ws(line);
      if (tok.empty()) continue;
      if (tok[0] == "v") {
        Vec3 v;
        if (tok.size() < 4) throw ParseError("vertex needs 3 coordinates", lineno);
        for (int c = 0; c < 3; ++c)
          if (!parse_double(tok[c + 1], v[c])) throw ParseError("invalid vertex coordinate", lineno);
        mesh.vertices.push_back(v);
      } else if (tok[0] == "f") {
        std::vector<std::uint32_t> f;
        for (std::size_t i = 1; i < tok.size(); ++i) {
          const auto idx = tok[i].substr(0, tok[i].find('/'));
          long k = 0;
          if (std::from_chars(idx.data(), idx.data() + idx.size(), k).ec != std::errc{} || k == 0)
            throw ParseError("invalid face index", lineno);
          f.push_back(static_cast<std::uint32_t>(k > 0 ? k - 1 : static_cast<long>(mesh.vertices.size()) + k));
        }
        faces.push_back(std::move(f));
      }
    }
  }
  for (const auto& f : faces) {
    for (const auto i : f)
      if (i >= mesh.vertices.size()) throw ParseError("face index out of range", 1);
    for (std::size_t k = 1; k + 1 < f.size(); ++k) mesh.triangles.push_back({f[0], f[k], f[k + 1]});
  }
  return mesh;
}

// ---------------------------------------------------------------- labels and dumps

void save_labels(const std::vector<PointLabel>& labels, const std::string& path) {
  auto out = open_out(path);
  for (const auto& l : labels) out << l.tree_id << ' ' << l.leaf << '\n';
  check_written(out, path);
}

std::vector<PointLabel> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<PointLabel> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    PointLabel l;
    if (tok.size() != 2 ||
        std::from_chars(tok[0].data(), tok[0].data() + tok[0].size(), l.tree_id).ec != std::errc{} ||
        std::from_chars(tok[1].data(), tok[1].data() + tok[1].size(), l.leaf).ec != std::errc{} ||
        (l.leaf != 0 && l.leaf != 1))
      throw ParseError("expected 'tree_id leaf_flag'", lineno);
    out.push_back(l);
  }
  return out;
}

void save_edge_list(const HybridGraph& graph, const std::string& path) {
  auto out = open_out(path);
  for (const Edge& e : graph.edges()) out << e.u << ' ' << e.v << ' ' << format_double(e.w) << '\n';
  check_written(out, path);
}

void save_node_metrics(const PathTree& paths, const NodeMetrics& m, const std::string& path) {
  auto out = open_out(path);
  out << "# node D F_raw F tip D_T\n";
  for (std::size_t v = 0; v < paths.size(); ++v)
    out << v << ' ' << format_double(paths.distance[v]) << ' ' << m.freq_raw[v] << ' ' << m.freq[v]
        << ' ' << m.tip[v] << ' ' << format_double(m.reverse_distance[v]) << '\n';
  check_written(out, path);
}

}  // namespace treegraph
