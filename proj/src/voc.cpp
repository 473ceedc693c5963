#include "cadsynth/voc.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <fmt/format.h>

#include "cadsynth/error.hpp"
#include "cadsynth/io.hpp"

namespace cadsynth {
namespace {

namespace pt = boost::property_tree;

void escape_into(std::string& out, std::string_view s) {
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
}

std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

const pt::ptree& child(const pt::ptree& node, const char* name, std::string_view where) {
  const auto it = node.find(name);
  if (it == node.not_found()) throw MalformedAnnotation(fmt::format("missing <{}> in <{}>", name, where));
  return it->second;
}

std::string text(const pt::ptree& node, const char* name, std::string_view where) {
  return std::string(trim(child(node, name, where).data()));
}

int integer(const pt::ptree& node, const char* name, std::string_view where) {
  const std::string s = text(node, name, where);
  int value = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw MalformedAnnotation(fmt::format("<{}> in <{}> is not an integer: '{}'", name, where, s));
  return value;
}

}  // namespace

std::string write_voc_xml(const Annotation& a) {
  std::string out = "<annotation>\n\t<filename>";
  escape_into(out, a.filename);
  out += "</filename>\n";
  out += fmt::format("\t<size>\n\t\t<width>{}</width>\n\t\t<height>{}</height>\n\t\t<depth>{}</depth>\n\t</size>\n",
                     a.width, a.height, a.depth);
  for (const AnnotatedObject& o : a.objects) {
    out += "\t<object>\n\t\t<name>";
    escape_into(out, o.name);
    out += "</name>\n";
    out += fmt::format(
        "\t\t<difficult>{}</difficult>\n\t\t<bndbox>\n\t\t\t<xmin>{}</xmin>\n\t\t\t<ymin>{}</ymin>\n"
        "\t\t\t<xmax>{}</xmax>\n\t\t\t<ymax>{}</ymax>\n\t\t</bndbox>\n\t</object>\n",
        o.difficult ? 1 : 0, o.box.xmin + 1, o.box.ymin + 1, o.box.xmax, o.box.ymax);
  }
  out += "</annotation>\n";
  return out;
}

Annotation parse_voc_xml(std::string_view xml) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw MalformedAnnotation(fmt::format("invalid XML at line {}: {}", e.line(), e.message()));
  }
  const pt::ptree& root = child(tree, "annotation", "document");
  Annotation a;
  a.filename = text(root, "filename", "annotation");
  const pt::ptree& size = child(root, "size", "annotation");
  a.width = integer(size, "width", "size");
  a.height = integer(size, "height", "size");
  a.depth = integer(size, "depth", "size");
  if (a.width < 1 || a.height < 1 || a.depth < 1) throw MalformedAnnotation("image size must be positive");
  for (const auto& [key, node] : root) {
    if (key != "object") continue;
    AnnotatedObject o;
    o.name = text(node, "name", "object");
    if (o.name.empty()) throw MalformedAnnotation("object name is empty");
    if (node.find("difficult") != node.not_found()) {
      const int d = integer(node, "difficult", "object");
      if (d != 0 && d != 1) throw MalformedAnnotation(fmt::format("<difficult> must be 0 or 1, got {}", d));
      o.difficult = d == 1;
    }
    const pt::ptree& b = child(node, "bndbox", "object");
    o.box = {integer(b, "xmin", "bndbox") - 1, integer(b, "ymin", "bndbox") - 1, integer(b, "xmax", "bndbox"),
             integer(b, "ymax", "bndbox")};
    if (!o.box.non_degenerate())
      throw MalformedAnnotation(fmt::format("inverted bndbox for '{}': xmin {} ymin {} xmax {} ymax {}", o.name,
                                            o.box.xmin + 1, o.box.ymin + 1, o.box.xmax, o.box.ymax));
    if (!o.box.fits(a.width, a.height))
      throw MalformedAnnotation(fmt::format("bndbox for '{}' lies outside the {}x{} image", o.name, a.width, a.height));
    a.objects.push_back(std::move(o));
  }
  return a;
}

std::map<std::string, Annotation> load_ground_truth(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoFailure(fmt::format("ground-truth directory not found: {}", dir.string()));
  fs::path xml_dir = dir;
  if (fs::is_directory(dir / "annotations", ec)) xml_dir = dir / "annotations";
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(xml_dir, ec))
    if (entry.is_regular_file() && entry.path().extension() == ".xml") files.push_back(entry.path());
  if (ec) throw IoFailure(fmt::format("cannot list {}: {}", xml_dir.string(), ec.message()));
  if (files.empty()) throw MalformedAnnotation(fmt::format("no .xml annotations in {}", xml_dir.string()));
  std::sort(files.begin(), files.end());
  std::map<std::string, Annotation> out;
  for (const fs::path& f : files) {
    try {
      out.emplace(f.stem().string(), parse_voc_xml(read_text_file(f)));
    } catch (const MalformedAnnotation& e) {
      throw MalformedAnnotation(fmt::format("{}: {}", f.string(), e.what()));
    }
  }
  return out;
}

}  // namespace cadsynth
