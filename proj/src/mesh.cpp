#include "cadsynth/mesh.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <optional>
#include <sstream>

#include "cadsynth/error.hpp"

namespace cadsynth {
namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  // from_chars rejects a leading '+', which some exporters emit.
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_long(std::string_view s, long& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

[[noreturn]] void obj_error(std::size_t line, const std::string& what) {
  throw MalformedMesh(fmt::format("OBJ line {}: {}", line, what));
}

// OBJ indices are 1-based, negative values count back from the end.
std::uint32_t resolve_index(std::string_view token, std::size_t count, std::size_t line, const char* kind) {
  long idx = 0;
  if (!parse_long(token, idx) || idx == 0) obj_error(line, fmt::format("bad {} index '{}'", kind, token));
  const long resolved = idx > 0 ? idx - 1 : static_cast<long>(count) + idx;
  if (resolved < 0 || resolved >= static_cast<long>(count))
    obj_error(line, fmt::format("{} index {} out of range (have {})", kind, idx, count));
  return static_cast<std::uint32_t>(resolved);
}

struct FaceCorner {
  std::uint32_t v = 0;
  std::optional<std::uint32_t> uv;
  std::optional<std::uint32_t> n;
};

}  // namespace

Vec3 face_normal(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = cross(b - a, c - a);
  const double len = length(n);
  if (!(len > 0) || !std::isfinite(len)) return {0, 0, 1};
  return n / len;
}

Mesh load_obj(std::string_view text) {
  std::vector<Vec3> positions, normals;
  std::vector<Vec2> uvs;
  std::vector<std::vector<FaceCorner>> faces;
  std::vector<std::size_t> face_lines;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    std::string_view line = trim(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;

    const auto tokens = split_ws(line);
    const std::string_view kw = tokens[0];
    if (kw == "v") {
      if (tokens.size() < 4 || tokens.size() > 5) obj_error(line_no, "vertex needs 3 coordinates");
      Vec3 p;
      if (!parse_double(tokens[1], p.x) || !parse_double(tokens[2], p.y) || !parse_double(tokens[3], p.z))
        obj_error(line_no, "bad vertex coordinate");
      positions.push_back(p);
    } else if (kw == "vt") {
      if (tokens.size() < 3 || tokens.size() > 4) obj_error(line_no, "texture coordinate needs 2 values");
      Vec2 t;
      if (!parse_double(tokens[1], t.x) || !parse_double(tokens[2], t.y))
        obj_error(line_no, "bad texture coordinate");
      uvs.push_back(t);
    } else if (kw == "vn") {
      if (tokens.size() != 4) obj_error(line_no, "normal needs 3 values");
      Vec3 n;
      if (!parse_double(tokens[1], n.x) || !parse_double(tokens[2], n.y) || !parse_double(tokens[3], n.z))
        obj_error(line_no, "bad normal");
      const double len = length(n);
      normals.push_back(len > 0 ? n / len : Vec3{0, 0, 1});
    } else if (kw == "f") {
      if (tokens.size() < 4) obj_error(line_no, "face needs at least 3 vertices");
      std::vector<FaceCorner> corners;
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        const std::string_view tok = tokens[i];
        FaceCorner c;
        const auto s1 = tok.find('/');
        c.v = resolve_index(tok.substr(0, s1), positions.size(), line_no, "vertex");
        if (s1 != std::string_view::npos) {
          const auto rest = tok.substr(s1 + 1);
          const auto s2 = rest.find('/');
          const auto uv_tok = rest.substr(0, s2);
          if (!uv_tok.empty()) c.uv = resolve_index(uv_tok, uvs.size(), line_no, "texture");
          if (s2 != std::string_view::npos) {
            const auto n_tok = rest.substr(s2 + 1);
            if (n_tok.empty() || n_tok.find('/') != std::string_view::npos)
              obj_error(line_no, fmt::format("bad face corner '{}'", tok));
            c.n = resolve_index(n_tok, normals.size(), line_no, "normal");
          }
        }
        corners.push_back(c);
      }
      faces.push_back(std::move(corners));
      face_lines.push_back(line_no);
    } else if (kw == "o" || kw == "g" || kw == "s" || kw == "usemtl" || kw == "mtllib") {
      // grouping and material records carry nothing we use
    } else {
      obj_error(line_no, fmt::format("unsupported record '{}'", kw));
    }
  }

  if (faces.empty()) throw MalformedMesh("OBJ contains no faces");

  const bool all_uv = !uvs.empty() && std::all_of(faces.begin(), faces.end(), [](const auto& f) {
    return std::all_of(f.begin(), f.end(), [](const FaceCorner& c) { return c.uv.has_value(); });
  });

  Mesh mesh;
  mesh.vertices = std::move(positions);
  mesh.normals = std::move(normals);
  if (all_uv) mesh.uvs = std::move(uvs);

  for (const auto& face : faces) {
    const Vec3& a = mesh.vertices[face[0].v];
    const Vec3& b = mesh.vertices[face[1].v];
    const Vec3& c = mesh.vertices[face[2].v];
    const bool has_normals =
        std::all_of(face.begin(), face.end(), [](const FaceCorner& fc) { return fc.n.has_value(); });
    std::uint32_t flat = 0;
    if (!has_normals) {
      flat = static_cast<std::uint32_t>(mesh.normals.size());
      mesh.normals.push_back(face_normal(a, b, c));
    }
    for (std::size_t i = 1; i + 1 < face.size(); ++i) {
      const std::array<const FaceCorner*, 3> fc{&face[0], &face[i], &face[i + 1]};
      Triangle t;
      for (int k = 0; k < 3; ++k) {
        t.v[k] = fc[k]->v;
        t.n[k] = has_normals ? *fc[k]->n : flat;
        t.uv[k] = all_uv ? *fc[k]->uv : 0;
      }
      mesh.triangles.push_back(t);
    }
  }
  validate_mesh(mesh);
  return mesh;
}

namespace {

float read_f32(const std::uint8_t* p) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void add_facet(Mesh& mesh, Vec3 n, const std::array<Vec3, 3>& v) {
  for (const Vec3& p : v)
    if (!is_finite(p)) throw MalformedMesh("STL vertex is not finite");
  if (!is_finite(n)) throw MalformedMesh("STL normal is not finite");
  const double len = length(n);
  n = len > 0 ? n / len : face_normal(v[0], v[1], v[2]);
  const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
  const auto ni = static_cast<std::uint32_t>(mesh.normals.size());
  mesh.vertices.insert(mesh.vertices.end(), v.begin(), v.end());
  mesh.normals.push_back(n);
  Triangle t;
  t.v = {base, base + 1, base + 2};
  t.n = {ni, ni, ni};
  mesh.triangles.push_back(t);
}

Mesh load_stl_binary(ByteView bytes) {
  if (bytes.size() < 84) throw MalformedMesh("binary STL shorter than its 84-byte header");
  const std::uint32_t count = read_u32(bytes.data() + 80);
  const std::uint64_t expected = 84 + 50ULL * count;
  if (bytes.size() < expected)
    throw MalformedMesh(fmt::format("binary STL declares {} facets but holds {} complete records", count,
                                    (bytes.size() - 84) / 50));
  if (bytes.size() > expected)
    throw MalformedMesh(fmt::format("binary STL declares {} facets but has {} trailing bytes", count,
                                    bytes.size() - expected));
  Mesh mesh;
  mesh.vertices.reserve(3ULL * count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint8_t* rec = bytes.data() + 84 + 50ULL * i;
    auto vec = [&](int k) {
      return Vec3{read_f32(rec + 12 * k), read_f32(rec + 12 * k + 4), read_f32(rec + 12 * k + 8)};
    };
    add_facet(mesh, vec(0), {vec(1), vec(2), vec(3)});
  }
  return mesh;
}

Mesh load_stl_ascii(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string tok;
  Mesh mesh;
  auto expect = [&](const char* word) {
    if (!(in >> tok) || tok != word) throw MalformedMesh(fmt::format("ASCII STL: expected '{}'", word));
  };
  auto read_vec = [&]() {
    std::array<std::string, 3> s;
    Vec3 v;
    for (int k = 0; k < 3; ++k) {
      if (!(in >> s[k]) || !parse_double(s[k], k == 0 ? v.x : (k == 1 ? v.y : v.z)))
        throw MalformedMesh("ASCII STL: bad number");
    }
    return v;
  };
  expect("solid");
  std::string rest;
  std::getline(in, rest);
  while (in >> tok) {
    if (tok == "endsolid") break;
    if (tok != "facet") throw MalformedMesh(fmt::format("ASCII STL: unexpected '{}'", tok));
    expect("normal");
    const Vec3 n = read_vec();
    expect("outer");
    expect("loop");
    std::array<Vec3, 3> v;
    for (auto& p : v) {
      expect("vertex");
      p = read_vec();
    }
    expect("endloop");
    expect("endfacet");
    add_facet(mesh, n, v);
  }
  if (tok != "endsolid") throw MalformedMesh("ASCII STL: missing endsolid");
  return mesh;
}

}  // namespace

Mesh load_stl(ByteView bytes) {
  Mesh mesh;
  const bool size_matches_binary = bytes.size() >= 84 && bytes.size() == 84 + 50ULL * read_u32(bytes.data() + 80);
  std::string_view head(reinterpret_cast<const char*>(bytes.data()), std::min<std::size_t>(bytes.size(), 512));
  const auto first = head.find_first_not_of(" \t\r\n");
  const bool looks_ascii = first != std::string_view::npos && head.substr(first, 5) == "solid" &&
                           head.find("facet") != std::string_view::npos;
  if (!size_matches_binary && looks_ascii)
    mesh = load_stl_ascii(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  else
    mesh = load_stl_binary(bytes);
  if (mesh.triangles.empty()) throw MalformedMesh("STL contains no facets");
  validate_mesh(mesh);
  return mesh;
}

Mesh load_mesh_file(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  const Bytes data = read_file(path);
  try {
    if (ext == ".obj") return load_obj(std::string_view(reinterpret_cast<const char*>(data.data()), data.size()));
    if (ext == ".stl") return load_stl(data);
  } catch (const MalformedMesh& e) {
    throw MalformedMesh(path.string() + ": " + e.what());
  }
  throw MalformedMesh(path.string() + ": unsupported mesh format '" + ext + "'");
}

std::string write_obj(const Mesh& mesh) {
  std::string out;
  for (const Vec3& v : mesh.vertices) out += fmt::format("v {} {} {}\n", v.x, v.y, v.z);
  for (const Vec2& t : mesh.uvs) out += fmt::format("vt {} {}\n", t.x, t.y);
  for (const Vec3& n : mesh.normals) out += fmt::format("vn {} {} {}\n", n.x, n.y, n.z);
  for (const Triangle& t : mesh.triangles) {
    out += "f";
    for (int k = 0; k < 3; ++k) {
      if (mesh.has_uvs())
        out += fmt::format(" {}/{}/{}", t.v[k] + 1, t.uv[k] + 1, t.n[k] + 1);
      else
        out += fmt::format(" {}//{}", t.v[k] + 1, t.n[k] + 1);
    }
    out += "\n";
  }
  return out;
}

Bytes write_stl_binary(const Mesh& mesh) {
  Bytes out(84, 0);
  const char header[] = "cadsynth binary stl";
  std::memcpy(out.data(), header, sizeof(header) - 1);
  const auto count = static_cast<std::uint32_t>(mesh.triangles.size());
  for (int i = 0; i < 4; ++i) out[80 + i] = static_cast<std::uint8_t>(count >> (8 * i));
  auto put = [&](float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  };
  for (const Triangle& t : mesh.triangles) {
    const Vec3 n = face_normal(mesh.vertices[t.v[0]], mesh.vertices[t.v[1]], mesh.vertices[t.v[2]]);
    put(static_cast<float>(n.x));
    put(static_cast<float>(n.y));
    put(static_cast<float>(n.z));
    for (int k = 0; k < 3; ++k) {
      const Vec3& v = mesh.vertices[t.v[k]];
      put(static_cast<float>(v.x));
      put(static_cast<float>(v.y));
      put(static_cast<float>(v.z));
    }
    out.push_back(0);
    out.push_back(0);
  }
  return out;
}

std::string write_stl_ascii(const Mesh& mesh, std::string_view name) {
  std::string out = fmt::format("solid {}\n", name);
  for (const Triangle& t : mesh.triangles) {
    const Vec3 n = face_normal(mesh.vertices[t.v[0]], mesh.vertices[t.v[1]], mesh.vertices[t.v[2]]);
    out += fmt::format("  facet normal {} {} {}\n    outer loop\n", n.x, n.y, n.z);
    for (int k = 0; k < 3; ++k) {
      const Vec3& v = mesh.vertices[t.v[k]];
      out += fmt::format("      vertex {} {} {}\n", v.x, v.y, v.z);
    }
    out += "    endloop\n  endfacet\n";
  }
  out += fmt::format("endsolid {}\n", name);
  return out;
}

void validate_mesh(const Mesh& mesh) {
  if (mesh.triangles.empty()) throw MalformedMesh("mesh has no triangles");
  for (const Vec3& v : mesh.vertices)
    if (!is_finite(v)) throw MalformedMesh("non-finite vertex");
  for (const Vec3& n : mesh.normals)
    if (!is_finite(n)) throw MalformedMesh("non-finite normal");
  for (const Vec2& t : mesh.uvs)
    if (!std::isfinite(t.x) || !std::isfinite(t.y)) throw MalformedMesh("non-finite texture coordinate");
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const Triangle& t = mesh.triangles[i];
    for (int k = 0; k < 3; ++k) {
      if (t.v[k] >= mesh.vertices.size()) throw MalformedMesh(fmt::format("triangle {} vertex index out of range", i));
      if (t.n[k] >= mesh.normals.size()) throw MalformedMesh(fmt::format("triangle {} normal index out of range", i));
      if (mesh.has_uvs() && t.uv[k] >= mesh.uvs.size())
        throw MalformedMesh(fmt::format("triangle {} uv index out of range", i));
    }
  }
}

Aabb3 mesh_bounds(const Mesh& mesh) {
  Aabb3 box;
  for (const Vec3& v : mesh.vertices) box.expand(v);
  return box;
}

}  // namespace cadsynth
