#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gba/command_stream.hpp"

namespace gba {

using ClassId = std::uint8_t;

/// Reserved id: unlabeled pixels, and background in oracle and label maps.
inline constexpr ClassId kUnlabeled = 0;

struct ClassDef {
  ClassId id = kUnlabeled;
  std::string name;
  Rgb8 color;
  bool operator==(const ClassDef&) const = default;
};

/// Dense class table, id 0 is always "unlabeled".
class Palette {
 public:
  /// Unlabeled plus Building, Tree, Sky, Car, Sign, Road, Pedestrian,
  /// Fence, Pole, Sidewalk, Bicyclist (ids 1..11 in that order).
  static Palette default_palette();

  /// Throws Error unless ids are dense from 0, names unique and id 0 exists.
  explicit Palette(std::vector<ClassDef> classes);

  const std::vector<ClassDef>& classes() const noexcept { return classes_; }
  std::size_t size() const noexcept { return classes_.size(); }
  bool contains(ClassId id) const noexcept { return id < classes_.size(); }
  const ClassDef& at(ClassId id) const { return classes_.at(id); }
  std::optional<ClassId> find(std::string_view name) const;

  /// "id name r g b" per line.
  std::string to_text() const;
  static Palette from_text(std::string_view text);

 private:
  std::vector<ClassDef> classes_;
};

namespace classes {
inline constexpr ClassId Building = 1;
inline constexpr ClassId Tree = 2;
inline constexpr ClassId Sky = 3;
inline constexpr ClassId Car = 4;
inline constexpr ClassId Sign = 5;
inline constexpr ClassId Road = 6;
inline constexpr ClassId Pedestrian = 7;
inline constexpr ClassId Fence = 8;
inline constexpr ClassId Pole = 9;
inline constexpr ClassId Sidewalk = 10;
inline constexpr ClassId Bicyclist = 11;
}  // namespace classes

}  // namespace gba
