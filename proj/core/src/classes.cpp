#include "gba/classes.hpp"

#include <set>
#include <sstream>

#include "gba/errors.hpp"

namespace gba {

Palette Palette::default_palette() {
  return Palette({
      {0, "unlabeled", {0, 0, 0}},
      {classes::Building, "building", {70, 70, 70}},
      {classes::Tree, "tree", {107, 142, 35}},
      {classes::Sky, "sky", {70, 130, 180}},
      {classes::Car, "car", {0, 0, 142}},
      {classes::Sign, "sign", {220, 220, 0}},
      {classes::Road, "road", {128, 64, 128}},
      {classes::Pedestrian, "pedestrian", {220, 20, 60}},
      {classes::Fence, "fence", {190, 153, 153}},
      {classes::Pole, "pole", {153, 153, 153}},
      {classes::Sidewalk, "sidewalk", {244, 35, 232}},
      {classes::Bicyclist, "bicyclist", {119, 11, 32}},
  });
}

Palette::Palette(std::vector<ClassDef> classes) : classes_(std::move(classes)) {
  if (classes_.empty()) throw Error("palette must contain the unlabeled class");
  if (classes_.size() > 256) throw Error("palette exceeds 256 classes");
  std::set<std::string> names;
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i].id != i) throw Error("palette ids must be dense from 0");
    if (classes_[i].name.empty() || classes_[i].name.find_first_of(" \t\n") != std::string::npos)
      throw Error("palette names must be single non-empty words");
    if (!names.insert(classes_[i].name).second) throw Error("duplicate class name " + classes_[i].name);
  }
}

std::optional<ClassId> Palette::find(std::string_view name) const {
  for (const ClassDef& c : classes_)
    if (c.name == name) return c.id;
  return std::nullopt;
}

std::string Palette::to_text() const {
  std::ostringstream out;
  for (const ClassDef& c : classes_)
    out << unsigned{c.id} << ' ' << c.name << ' ' << unsigned{c.color.r} << ' ' << unsigned{c.color.g} << ' '
        << unsigned{c.color.b} << '\n';
  return out.str();
}

Palette Palette::from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<ClassDef> classes;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    unsigned id, r, g, b;
    std::string name;
    if (!(ls >> id >> name >> r >> g >> b) || id > 255 || r > 255 || g > 255 || b > 255)
      throw Error("bad palette line: " + line);
    classes.push_back({static_cast<ClassId>(id), name,
                       {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)}});
  }
  return Palette(std::move(classes));
}

}  // namespace gba
