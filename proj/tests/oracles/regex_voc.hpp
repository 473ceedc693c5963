#pragma once

// Second VOC reader, independent of the library parser: plain regular
// expressions over the text, enough for single-level LabelImg-style files.

#include <cstring>
#include <regex>
#include <stdexcept>
#include <string>
#include <vector>

namespace cadsynth::oracle {

struct VocBox {
  std::string name;
  int xmin = 0, ymin = 0, xmax = 0, ymax = 0;  // as written in the file
  bool difficult = false;
};

struct VocFile {
  std::string filename;
  int width = 0, height = 0, depth = 0;
  std::vector<VocBox> objects;
};

inline std::string voc_tag(const std::string& text, const std::string& tag) {
  const std::regex re("<" + tag + ">\\s*([^<]*?)\\s*</" + tag + ">");
  std::smatch m;
  if (!std::regex_search(text, m, re)) throw std::runtime_error("missing <" + tag + ">");
  return m[1].str();
}

inline std::string voc_unescape(std::string s) {
  const std::pair<const char*, const char*> table[] = {
      {"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""}, {"&apos;", "'"}, {"&amp;", "&"}};
  for (const auto& [from, to] : table) {
    for (std::size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + 1)) s.replace(p, std::strlen(from), to);
  }
  return s;
}

inline VocFile read_voc_regex(const std::string& text) {
  VocFile f;
  f.filename = voc_unescape(voc_tag(text, "filename"));
  const std::string size = voc_tag(std::regex_replace(text, std::regex("<object>[\\s\\S]*?</object>"), ""), "width");
  f.width = std::stoi(size);
  f.height = std::stoi(voc_tag(text, "height"));
  f.depth = std::stoi(voc_tag(text, "depth"));
  const std::regex obj("<object>([\\s\\S]*?)</object>");
  for (auto it = std::sregex_iterator(text.begin(), text.end(), obj); it != std::sregex_iterator(); ++it) {
    const std::string body = (*it)[1].str();
    VocBox b;
    b.name = voc_unescape(voc_tag(body, "name"));
    b.xmin = std::stoi(voc_tag(body, "xmin"));
    b.ymin = std::stoi(voc_tag(body, "ymin"));
    b.xmax = std::stoi(voc_tag(body, "xmax"));
    b.ymax = std::stoi(voc_tag(body, "ymax"));
    const std::regex diff("<difficult>\\s*([01])\\s*</difficult>");
    std::smatch m;
    b.difficult = std::regex_search(body, m, diff) && m[1].str() == "1";
    f.objects.push_back(b);
  }
  return f;
}

}  // namespace cadsynth::oracle
